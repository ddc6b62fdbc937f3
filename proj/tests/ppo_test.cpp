#include <doctest.h>

#include "pril/ppo.hpp"

using namespace pril;

namespace {

Mdp corridor() { return build_mdp<double>(parse_map("YSSG\n"), 1e-4, RewardTable{}, 0.99); }

TrainConfig quick(OptimizerKind opt) {
  TrainConfig c;
  c.epochs = 3;
  c.iterations = 100;
  c.optimizer = opt;
  return c;
}

TrainResult run(const Mdp& mdp, const TrainConfig& cfg, Activation act, const std::optional<DpSgdConfig>& dp,
                std::uint64_t seed) {
  Rng rng(seed);
  Mlp actor = make_network(mdp.n_states(), mdp.n_actions(), act);
  Mlp critic = make_network(mdp.n_states(), 1, act);
  initialize_network(actor, rng);
  initialize_network(critic, rng);
  return train_ppo(mdp, cfg, actor, critic, dp, rng);
}

}  // namespace

TEST_CASE("ppo learns the corridor") {
  const auto r = run(corridor(), quick(OptimizerKind::Adam), Activation::Relu, std::nullopt, 1);
  CHECK(r.updates == 300);
  for (int s = 0; s < 3; ++s) CHECK(r.policy.greedy_action(s) == kRight);
}

TEST_CASE("zero-initialized actor starts uniform") {
  Rng rng(0);
  Mlp actor = make_network(4, 4, Activation::Tanh);
  initialize_network(actor, rng);
  const Policy p = actor_policy(actor, 4);
  CHECK(p.probs.isApproxToConstant(0.25));
}

TEST_CASE("ppo policy rows are distributions") {
  const auto r = run(corridor(), quick(OptimizerKind::Sgd), Activation::Tanh, std::nullopt, 2);
  CHECK(r.policy.max_row_error() < 1e-12);
  CHECK(r.policy.probs.minCoeff() >= 0.0);
}

TEST_CASE("noiseless unclipped private ppo matches the plain one bit for bit") {
  const Mdp mdp = corridor();
  for (Activation act : {Activation::Relu, Activation::Tanh}) {
    const auto plain = run(mdp, quick(OptimizerKind::Sgd), act, std::nullopt, 4);
    const auto priv = run(mdp, quick(OptimizerKind::Sgd), act, DpSgdConfig{kInfinity, 0.0, OptimizerKind::Sgd, act}, 4);
    CHECK(plain.policy.probs == priv.policy.probs);
  }
}

TEST_CASE("private ppo privatizes every actor pass") {
  const auto r = run(corridor(), quick(OptimizerKind::Sgd), Activation::Relu,
                     DpSgdConfig{1.0, 5.38, OptimizerKind::Sgd, Activation::Relu}, 2);
  CHECK(r.accountant.steps() == 300 * PpoSettings{}.actor_passes);
}

TEST_CASE("ppo rejects mismatched critics") {
  const Mdp mdp = corridor();
  Rng rng(0);
  Mlp actor = make_network(4, 4, Activation::Relu);
  Mlp critic = make_network(4, 2, Activation::Relu);
  actor.initialize(rng);
  critic.initialize(rng);
  CHECK_THROWS_AS(train_ppo(mdp, quick(OptimizerKind::Sgd), actor, critic, std::nullopt, rng), Error);
}
