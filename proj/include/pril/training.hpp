#pragma once

#include <cstdint>
#include <vector>

#include "pril/error.hpp"
#include "pril/gridworld.hpp"
#include "pril/mlp.hpp"
#include "pril/privacy.hpp"
#include "pril/random.hpp"

namespace pril {

struct TrainConfig {
  int epochs = 15;
  int iterations = 200;  // optimizer steps per epoch
  int test_episodes = 5;
  double learning_rate = 0.15;  // plain SGD
  double adam_learning_rate = 0.001;
  int batch_size = 50;
  int micro_batches = 5;
  double gamma = 0.99;
  std::uint64_t seed = 0;
  OptimizerKind optimizer = OptimizerKind::Sgd;

  int total_steps() const { return epochs * iterations; }
  double step_size() const { return optimizer == OptimizerKind::Adam ? adam_learning_rate : learning_rate; }

  void validate() const {
    if (epochs < 1 || iterations < 1 || test_episodes < 1 || batch_size < 1 || micro_batches < 1) {
      throw Error(ErrorKind::InvalidArgument, "training counts must be positive");
    }
    if (batch_size % micro_batches != 0) {
      throw Error(ErrorKind::InvalidArgument, "batch size must be divisible by the micro-batch count");
    }
    if (!(learning_rate > 0.0) || !(adam_learning_rate > 0.0)) throw Error(ErrorKind::InvalidArgument, "learning rate must be positive");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw Error(ErrorKind::InvalidArgument, "gamma must lie in [0, 1)");
  }
};

/// Network shape shared by every learned policy: one-hot state input, two
/// hidden layers, one output per action (or a single value for critics).
inline Mlp make_network(int n_states, int n_outputs, Activation activation, int hidden = 64) {
  return Mlp({n_states, hidden, hidden, n_outputs}, activation);
}

/// Random hidden layers and zero output weights, so every action (or
/// value) starts out equal.
inline void initialize_network(Mlp& net, Rng& rng) {
  net.initialize(rng);
  net.layers().back().weight.setZero();
}

/// Environment stepping shared by the learners. Occupying s yields R(s);
/// the goal ends the episode right after its reward is collected.
template <typename Scalar>
int env_step(const TabularMdp<Scalar>& mdp, int s, int a, Rng& rng) {
  return sample_categorical(mdp.transitions[static_cast<std::size_t>(a)].row(s), rng);
}

/// Reset distribution for experience collection: the MDP's start
/// distribution, or uniform over non-terminal states.
template <typename Scalar>
Eigen::VectorXd collection_start(const TabularMdp<Scalar>& mdp, bool exploring_starts) {
  if (!exploring_starts) return mdp.start_dist.template cast<double>();
  Eigen::VectorXd dist(mdp.n_states());
  for (int s = 0; s < mdp.n_states(); ++s) dist(s) = mdp.is_terminal(s) ? 0.0 : 1.0;
  return dist / dist.sum();
}

/// Averages micro-batch gradients, privately when `dp` is given. Both
/// paths sum in the same order so a noiseless, unclipped DP step equals
/// the plain one bit for bit.
inline Eigen::VectorXd combine_gradients(const std::vector<Eigen::VectorXd>& grads, const DpSgdConfig* dp, Rng& rng,
                                         RdpAccountant* accountant) {
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!grads[i].allFinite()) {
      throw Error(ErrorKind::NonFiniteGradient, "micro-batch " + std::to_string(i) + " has a non-finite gradient");
    }
  }
  if (dp != nullptr) return dp_optimizer_step(grads, *dp, rng, accountant);
  return mean_gradient(grads);
}

}  // namespace pril
