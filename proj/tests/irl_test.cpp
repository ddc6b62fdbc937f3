#include <doctest.h>

#include "pril/gridworld.hpp"
#include "pril/irl.hpp"
#include "pril/value_iteration.hpp"

using namespace pril;

namespace {

using Matrix = Eigen::MatrixXd;

// Two-state chain: action 0 stays, action 1 switches.
std::vector<Matrix> two_state_kernel() {
  Matrix stay = Matrix::Identity(2, 2);
  Matrix swap(2, 2);
  swap << 0, 1, 1, 0;
  return {stay, swap};
}

}  // namespace

TEST_CASE("occupancy matrix inverts I - gamma P") {
  const auto kernel = two_state_kernel();
  const Matrix occ = occupancy_matrix(kernel, {0, 0}, 0.5);
  CHECK(occ.isApprox(2.0 * Matrix::Identity(2, 2)));
  CHECK_THROWS_AS(occupancy_matrix(kernel, {0, 0}, 1.0), Error);
}

TEST_CASE("margin rows skip actions with identical transitions") {
  std::vector<Matrix> same = {Matrix::Identity(2, 2), Matrix::Identity(2, 2)};
  CHECK(margin_rows(same, {0, 1}, 0.9).rows.rows() == 0);
  const auto rows = margin_rows(two_state_kernel(), {0, 0}, 0.9);
  CHECK(rows.rows.rows() == 2);
  CHECK(rows.owner == std::vector<int>{0, 1});
}

TEST_CASE("staying everywhere cannot be rationalized beyond zero margin") {
  // Staying in both states is optimal only when R(0) = R(1); the L1
  // penalty then drives R to zero.
  const auto rec = reconstruct_reward(two_state_kernel(), {0, 0}, IrlConfig{1.0, 0.1, 0.9});
  REQUIRE(rec.status == IrlStatus::Optimal);
  CHECK(rec.reward.cwiseAbs().maxCoeff() < 1e-9);
  CHECK(rec.lp_objective == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("stay in one state and move toward it") {
  const auto kernel = two_state_kernel();
  const IrlConfig cfg{1.0, 0.1, 0.9};
  const auto rec = reconstruct_reward(kernel, {1, 0}, cfg);
  REQUIRE(rec.status == IrlStatus::Optimal);
  CHECK(rec.reward(1) > rec.reward(0));
  CHECK(rec.reward.cwiseAbs().maxCoeff() <= cfg.r_max + 1e-9);
  const auto margins = margin_rows(kernel, {1, 0}, 0.9);
  CHECK(irl_objective(margins, rec.reward, 0.1) == doctest::Approx(rec.lp_objective));
  CHECK((margins.rows * rec.reward).minCoeff() >= -1e-9);
}

TEST_CASE("reconstructed corridor reward rationalizes the policy") {
  const Mdp mdp = build_mdp<double>(parse_map("YSSSG\n"), 1e-4, RewardTable{}, 0.99);
  Rng rng(0);
  const auto vi = value_iteration<double>(mdp, 1e-10, 10000, std::nullopt, rng);
  const auto rec = reconstruct_reward(mdp, vi.policy, IrlConfig{});
  REQUIRE(rec.status == IrlStatus::Optimal);
  const auto back = value_iteration<double>(mdp.with_reward(rec.reward), 1e-10, 10000, std::nullopt, rng);
  for (int s = 0; s < 4; ++s) CHECK(back.policy.greedy_action(s) == kRight);
}

TEST_CASE("irl validates its configuration") {
  CHECK_THROWS_AS(reconstruct_reward(two_state_kernel(), {0, 0}, IrlConfig{0.0, 0.1, 0.9}), Error);
  CHECK_THROWS_AS(reconstruct_reward(two_state_kernel(), {0, 0}, IrlConfig{1.0, -1.0, 0.9}), Error);
  const Mdp mdp = build_mdp<double>(parse_map("YG\n"), 0.0, RewardTable{}, 0.9);
  CHECK_THROWS_AS(reconstruct_reward(mdp, Policy::uniform(3, 4), IrlConfig{}), Error);
}

TEST_CASE("brute force agrees on a two-state family") {
  const IrlConfig cfg{1.0, 0.1, 0.99};
  const auto kernel = two_state_kernel();
  for (int a0 = 0; a0 < 2; ++a0) {
    for (int a1 = 0; a1 < 2; ++a1) {
      const std::vector<int> actions = {a0, a1};
      const auto rec = reconstruct_reward(kernel, actions, cfg);
      REQUIRE(rec.status == IrlStatus::Optimal);
      const auto margins = margin_rows(kernel, actions, 0.99);
      double best = -1e300;
      for (int i = -10; i <= 10; ++i) {
        for (int j = -10; j <= 10; ++j) {
          const Eigen::Vector2d r(i / 10.0, j / 10.0);
          if (margins.rows.rows() > 0 && (margins.rows * r).minCoeff() < -1e-12) continue;
          best = std::max(best, irl_objective(margins, r, 0.1));
        }
      }
      CAPTURE(a0);
      CAPTURE(a1);
      CHECK(rec.lp_objective >= best - 1e-9);
      CHECK(rec.lp_objective - best <= 0.1);
    }
  }
}
