#include <doctest.h>

#include "pril/gridworld.hpp"
#include "pril/random.hpp"

using namespace pril;

namespace {

GridMap small_map() { return parse_map("YSH\nFAG\n"); }

}  // namespace

TEST_CASE("parse_map reads tiles and the start cell") {
  const GridMap map = small_map();
  CHECK(map.width == 3);
  CHECK(map.height == 2);
  CHECK(map.start_index == 0);
  CHECK(map.tile(0) == TileKind::Safe);
  CHECK(map.tile(2) == TileKind::Hole);
  CHECK(map.tile(3) == TileKind::Frozen);
  CHECK(map.tile(4) == TileKind::HighReward);
  CHECK(map.goal_index() == 5);
}

TEST_CASE("serialize_map inverts parse_map") {
  const std::string text = "YSH\nFAG\n";
  CHECK(serialize_map(parse_map(text)) == text);
  CHECK(parse_map(serialize_map(small_map())) == small_map());
}

TEST_CASE("malformed maps are rejected with the matching kind") {
  auto kind_of = [](const char* text) {
    try {
      parse_map(text);
    } catch (const Error& e) {
      return e.kind();
    }
    FAIL("map was accepted");
    return ErrorKind::InvalidArgument;
  };
  CHECK(kind_of("") == ErrorKind::EmptyMap);
  CHECK(kind_of("YS\nSSG\n") == ErrorKind::RaggedRows);
  CHECK(kind_of("YS\nSS\n") == ErrorKind::MissingGoal);
  CHECK(kind_of("YG\nSG\n") == ErrorKind::MultipleGoals);
  CHECK(kind_of("SS\nSG\n") == ErrorKind::MissingStart);
  CHECK(kind_of("YY\nSG\n") == ErrorKind::MultipleStarts);
  try {
    parse_map("YS\nSX\n");
    FAIL("bad character accepted");
  } catch (const BadCharError& e) {
    CHECK(e.row() == 2);
    CHECK(e.col() == 2);
  }
}

TEST_CASE("transition rows are distributions with the slip split") {
  const double wind = 0.2;
  const Mdp mdp = build_mdp<double>(small_map(), wind, RewardTable{}, 0.9);
  CHECK(mdp.stochasticity_error() < 1e-12);
  // From the start corner, moving right: intended 0.8, up clamps, down slips.
  CHECK(mdp.p(0, kRight, 1) == doctest::Approx(1 - wind));
  CHECK(mdp.p(0, kRight, 0) == doctest::Approx(wind / 2));
  CHECK(mdp.p(0, kRight, 3) == doctest::Approx(wind / 2));
  // Moving up from the top row stays put with the intended mass.
  CHECK(mdp.p(1, kUp, 1) == doctest::Approx(1 - wind));
}

TEST_CASE("holes return to the start and the goal is absorbing") {
  const Mdp mdp = build_mdp<double>(small_map(), 1e-4, RewardTable{}, 0.99);
  for (int a = 0; a < kNumGridActions; ++a) {
    CHECK(mdp.p(2, a, 0) == 1.0);
    CHECK(mdp.p(5, a, 5) == 1.0);
  }
  CHECK(mdp.is_terminal(5));
  CHECK_FALSE(mdp.is_terminal(2));
  CHECK(mdp.start_dist(0) == 1.0);
}

TEST_CASE("rewards follow the tile table") {
  const Mdp mdp = build_mdp<double>(small_map(), 1e-4, RewardTable{}, 0.99);
  CHECK(mdp.reward(0) == 0.0);
  CHECK(mdp.reward(2) == -1.0);
  CHECK(mdp.reward(3) == -0.1);
  CHECK(mdp.reward(4) == 0.5);
  CHECK(mdp.reward(5) == 1.0);
}

TEST_CASE("continuation kernel drops the terminal row") {
  const Mdp mdp = build_mdp<double>(small_map(), 1e-4, RewardTable{}, 0.99);
  for (const auto& m : mdp.continuation()) {
    CHECK(m.row(5).isZero());
    CHECK(m.row(0).sum() == doctest::Approx(1.0));
  }
}

TEST_CASE("build_mdp validates its parameters") {
  CHECK_THROWS_AS(build_mdp<double>(small_map(), 1.0, RewardTable{}, 0.9), Error);
  CHECK_THROWS_AS(build_mdp<double>(small_map(), 0.1, RewardTable{}, 1.0), Error);
  RewardTable bad;
  bad.goal = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(build_mdp<double>(small_map(), 0.1, bad, 0.9), Error);
}

TEST_CASE("neighboring rewards stay within unit distance") {
  Rng rng(7);
  const Eigen::VectorXd r = Eigen::VectorXd::LinSpaced(9, -1, 1);
  for (int i = 0; i < 200; ++i) {
    const Eigen::VectorXd n = neighboring_reward(r, rng);
    const double d = (n - r).norm();
    CHECK(d <= 1.0 + 1e-12);
    CHECK(d > 0.0);
  }
  CHECK(neighboring_reward(r, Eigen::VectorXd::Zero(9), 0.5) == r);
}

TEST_CASE("float instantiation builds the same kernel") {
  const auto f = build_mdp<float>(small_map(), 0.1f, RewardTable{}, 0.9f);
  const Mdp d = build_mdp<double>(small_map(), 0.1, RewardTable{}, 0.9);
  CHECK((f.transitions[1].cast<double>() - d.transitions[1]).cwiseAbs().maxCoeff() < 1e-6);
}
