#pragma once

#include <optional>
#include <vector>

#include "pril/gridworld.hpp"
#include "pril/mlp.hpp"
#include "pril/policy.hpp"
#include "pril/privacy.hpp"
#include "pril/training.hpp"

namespace pril {

struct DqnSettings {
  int replay_capacity = 10000;
  int target_update_interval = 100;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  /// Fraction of all updates over which exploration decays linearly.
  double decay_fraction = 0.5;
  int env_steps_per_update = 4;
  double huber_delta = 1.0;
  /// Select the bootstrap action with the online network (double DQN).
  bool double_q = true;
  /// Learning rate at the end of training as a fraction of the initial
  /// one; the rate decays linearly in between.
  double final_lr_fraction = 0.1;
  /// Episode cap while collecting experience. Short episodes restarted
  /// at random states keep the replay spread over the whole grid; 0
  /// means 4 |S|.
  int max_episode_steps = 10;
  /// Begin collection episodes at a uniformly drawn non-terminal state
  /// instead of the start distribution.
  bool exploring_starts = true;
};

struct TrainResult {
  Policy policy;
  int updates = 0;
  /// Mean training loss of each epoch.
  std::vector<double> epoch_losses;
  RdpAccountant accountant;
};

/// Q-learning with an MLP, uniform experience replay and a periodically
/// copied target network. `net` is trained in place and must already be
/// initialized; its input size is |S| and output size |A|. With `dp`, each
/// update clips and noises the micro-batch gradients.
TrainResult train_dqn(const Mdp& mdp, const TrainConfig& config, Mlp& net, const std::optional<DpSgdConfig>& dp,
                      Rng& rng, const DqnSettings& settings = {});

/// Greedy policy of a Q-network over all states; terminal states take action 0.
Policy q_network_policy(const Mdp& mdp, const Mlp& net);

}  // namespace pril
