#pragma once

#include <optional>

#include "pril/dqn.hpp"
#include "pril/gridworld.hpp"
#include "pril/mlp.hpp"
#include "pril/policy.hpp"
#include "pril/privacy.hpp"
#include "pril/training.hpp"

namespace pril {

struct PpoSettings {
  double gae_lambda = 0.95;
  double entropy_coef = 0.05;
  /// Actor gradient steps per collected batch.
  int actor_passes = 2;
  /// Norm bound on the (never private) critic gradient.
  double critic_grad_clip = 1.0;
  /// Episode cap while collecting trajectories; cut episodes bootstrap
  /// from the critic. 0 means 4 |S|.
  int max_episode_steps = 10;
  /// Begin trajectories at a uniformly drawn non-terminal state.
  bool exploring_starts = true;
};

/// Vanilla PPO: the actor ascends the unclipped ratio surrogate
/// E[(pi_new / pi_old) A] with critic-based advantages, and the critic
/// regresses discounted returns. Only the actor update is privatized.
/// Both networks are trained in place and must be initialized; the
/// actor outputs |A| logits, the critic a single value.
TrainResult train_ppo(const Mdp& mdp, const TrainConfig& config, Mlp& actor, Mlp& critic,
                      const std::optional<DpSgdConfig>& dp_actor, Rng& rng, const PpoSettings& settings = {});

/// Softmax of the actor's logits at every state.
Policy actor_policy(const Mlp& actor, int n_states);

}  // namespace pril
