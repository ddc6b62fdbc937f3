#include <doctest.h>

#include <filesystem>

#include "pril/harness.hpp"
#include "pril/value_iteration.hpp"

using namespace pril;

namespace {

std::string map_path(const std::string& id) { return std::string(PRIL_DATA_DIR) + "/maps/" + id + ".txt"; }

ExperimentRecord record_with(double l2, double ret) {
  ExperimentRecord r;
  r.map_id = "m";
  r.grid_size = "5x5";
  r.policy_class = PolicyClass::ViDpBellman;
  r.epsilon = 1.0;
  r.distances = DistanceReport{l2, l2, l2, 0};
  r.test_return = ret;
  return r;
}

ExperimentConfig tiny_config(const std::string& out) {
  ExperimentConfig c;
  c.maps = {map_path("g5_01")};
  c.classes = {PolicyClass::ViDpBellman};
  c.epsilons = {kInfinity};
  c.repeats = 1;
  c.workers = 1;
  c.output_dir = out;
  return c;
}

}  // namespace

TEST_CASE("class names round-trip") {
  for (PolicyClass c : all_policy_classes()) CHECK(parse_policy_class(class_name(c)) == c);
  CHECK(private_policy_classes().size() == 7);
  CHECK(class_traits(PolicyClass::DqnDpShoe).activation == Activation::Tanh);
  CHECK(class_traits(PolicyClass::PpoDpAdam).optimizer == OptimizerKind::Adam);
  CHECK_FALSE(class_traits(PolicyClass::Ppo).is_private);
  CHECK_THROWS_AS(parse_policy_class("DQN-DP-FN"), Error);
  CHECK_THROWS_AS(parse_policy_class("bogus"), Error);
}

TEST_CASE("derived seeds are stable and cell specific") {
  const auto a = derive_seed(0, "g5_01", PolicyClass::Dqn, 2, 3);
  CHECK(a == derive_seed(0, "g5_01", PolicyClass::Dqn, 2, 3));
  CHECK(a != derive_seed(1, "g5_01", PolicyClass::Dqn, 2, 3));
  CHECK(a != derive_seed(0, "g5_02", PolicyClass::Dqn, 2, 3));
  CHECK(a != derive_seed(0, "g5_01", PolicyClass::Ppo, 2, 3));
  CHECK(a != derive_seed(0, "g5_01", PolicyClass::Dqn, 1, 3));
  CHECK(a != derive_seed(0, "g5_01", PolicyClass::Dqn, 2, 4));
}

TEST_CASE("sigma comes from the table with an rdp fallback") {
  ExperimentConfig c;
  CHECK(class_sigma(PolicyClass::ViDpBellman, 1.0, c) == 20.80);
  CHECK(class_sigma(PolicyClass::DqnDpSgd, 0.1, c) == 94229.0);
  CHECK(class_sigma(PolicyClass::DqnDpSgd, kInfinity, c) == 0.0);
  CHECK(class_sigma(PolicyClass::Dqn, 0.1, c) == 0.0);
  const double fallback = class_sigma(PolicyClass::PpoDpSgd, 0.3, c);
  CHECK(rdp_epsilon_of_gaussian(fallback, 1.0, c.train.total_steps(), c.delta) <= 0.3);
  c.sigma_source = SigmaSource::Rdp;
  CHECK(class_sigma(PolicyClass::DqnDpSgd, 1.0, c) != 5.38);
}

TEST_CASE("budgets always include infinity") {
  ExperimentConfig c;
  c.epsilons = {0.5};
  CHECK(c.budgets().size() == 2);
  CHECK(std::isinf(c.budgets().back()));
  c.epsilons = {kInfinity, 1.0};
  CHECK(c.budgets().size() == 2);
}

TEST_CASE("config json parsing") {
  const auto c = config_from_json(R"({"maps":["a.txt"],"policy_classes":["VI-DP-Bellman","DQN"],
      "epsilons":[0.5,"inf"],"repeats":2,"train":{"epochs":2},"irl":{"l1_penalty":0.2},
      "rewards":{"goal":2},"value_iteration":{"threshold":1e-6},"sigma_source":"rdp","output_dir":"out"})",
                                  "/base");
  CHECK(c.maps == std::vector<std::string>{"/base/a.txt"});
  CHECK(c.classes.size() == 2);
  CHECK(std::isinf(c.epsilons[1]));
  CHECK(c.repeats == 2);
  CHECK(c.train.epochs == 2);
  CHECK(c.irl.l1_penalty == 0.2);
  CHECK(c.rewards.goal == 2.0);
  CHECK(c.vi_threshold == 1e-6);
  CHECK(c.sigma_source == SigmaSource::Rdp);
  CHECK(c.output_dir == "/base/out");
  CHECK(config_from_json("{}").maps.size() == 24);
}

TEST_CASE("bad configs are rejected") {
  auto rejects = [](const char* text) {
    try {
      config_from_json(text);
    } catch (const Error& e) {
      return e.kind() == ErrorKind::ConfigError;
    }
    return false;
  };
  CHECK(rejects(R"({"unknown":1})"));
  CHECK(rejects(R"({"train":{"epoch":1}})"));
  CHECK(rejects(R"({"repeats":0})"));
  CHECK(rejects(R"({"epsilons":[]})"));
  CHECK(rejects(R"({"epsilons":[-1]})"));
  CHECK(rejects(R"({"policy_classes":["DQN-DP-FN"]})"));
  CHECK(rejects(R"({"sigma_source":"guess"})"));
  CHECK(rejects(R"({"repeats":"ten"})"));
  CHECK(rejects("not json"));
}

TEST_CASE("aggregation arithmetic") {
  const std::vector<ExperimentRecord> two = {record_with(1.0, 0.0), record_with(3.0, 1.0)};
  const auto rows = aggregate_by(two, {GroupKey::PolicyClass});
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].l2.mean == 2.0);
  CHECK(rows[0].l2.std == doctest::Approx(std::sqrt(2.0)));
  const auto single = aggregate_by({record_with(4.0, 0.5)}, {});
  CHECK(single[0].l2.mean == 4.0);
  CHECK(single[0].l2.std == 0.0);
  CHECK(aggregate_by(two, {})[0].records == 2);
  CHECK_THROWS_AS(aggregate_by({}, {}), Error);
}

TEST_CASE("undefined distances are excluded and counted") {
  std::vector<ExperimentRecord> recs = {record_with(1.0, 0.0), record_with(3.0, 1.0)};
  recs[1].distances.reset();
  const auto row = aggregate_by(recs, {})[0];
  CHECK(row.l2.count == 1);
  CHECK(row.l2.excluded == 1);
  recs[0].distances.reset();
  CHECK(aggregate_by(recs, {})[0].status == "empty_group");
}

TEST_CASE("group keys parse") {
  CHECK(parse_group_keys("class,epsilon") == std::vector<GroupKey>{GroupKey::PolicyClass, GroupKey::Epsilon});
  CHECK(parse_group_keys("").empty());
  CHECK_THROWS_AS(parse_group_keys("color"), Error);
  CHECK_THROWS_AS(parse_group_keys("epsilon,epsilon"), Error);
}

TEST_CASE("per-state variance") {
  ExperimentRecord a = record_with(1, 0), b = record_with(1, 0);
  a.reward_hat = Eigen::Vector2d(0, 1);
  b.reward_hat = Eigen::Vector2d(0, 3);
  const Eigen::VectorXd v = per_state_variance({a, b});
  CHECK(v(0) == 0.0);
  CHECK(v(1) == 2.0);
  CHECK(per_state_variance({a, a}).isZero());
  try {
    per_state_variance({a});
    FAIL("single run accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::TooFewRuns);
  }
  b.epsilon = 2.0;
  CHECK_THROWS_AS(per_state_variance({a, b}), Error);
}

TEST_CASE("results csv schema") {
  CHECK(results_csv({}) == std::string(kResultsHeader) + "\n");
  const std::string one = results_csv({record_with(1, 0)});
  CHECK(std::count(one.begin(), one.end(), '\n') == 2);
  CHECK(results_csv({record_with(1, 0)}) == one);
  const auto back = records_from_csv(parse_csv(one));
  REQUIRE(back.size() == 1);
  CHECK(back[0].distances->l2 == 1.0);
  CHECK(back[0].policy_class == PolicyClass::ViDpBellman);
  ExperimentRecord missing = record_with(1, 0);
  missing.distances.reset();
  missing.test_return = std::nan("");
  const auto parsed = records_from_csv(parse_csv(results_csv({missing})));
  CHECK_FALSE(parsed[0].distances.has_value());
  CHECK(std::isnan(parsed[0].test_return));
}

TEST_CASE("degenerate sweep equals the non-private round trip") {
  const ExperimentConfig c = tiny_config("unused");
  const auto records = run_sweep(c);
  REQUIRE(records.size() == 1);
  CHECK(records[0].status == "ok");
  CHECK(records[0].sigma == 0.0);
  const Mdp mdp = build_mdp<double>(load_map(map_path("g5_01")), c.wind, c.rewards, c.gamma);
  Rng rng(0);
  const auto vi = value_iteration<double>(mdp, c.vi_threshold, c.vi_max_iters, std::nullopt, rng);
  const auto rec = reconstruct_reward(mdp, vi.policy, c.irl);
  const DistanceReport d = distance_report(mdp.reward, rec.reward);
  CHECK(records[0].distances->l2 == d.l2);
  CHECK(records[0].reward_hat == rec.reward);
}

TEST_CASE("sweep cardinality and canonical order") {
  ExperimentConfig c = tiny_config("unused");
  c.maps = {map_path("g5_01"), map_path("g5_02")};
  c.classes = {PolicyClass::Vi, PolicyClass::ViDpBellman};
  c.epsilons = {1.0, 0.5};
  c.repeats = 2;
  c.workers = 3;
  const auto records = run_sweep(c);
  CHECK(records.size() == 2u * 2 * 3 * 2);
  CHECK(records.front().map_id == "g5_01");
  CHECK(records.back().map_id == "g5_02");
  CHECK(records[1].repeat == 1);
  CHECK(records[2].epsilon == 0.5);
  for (const auto& r : records) CHECK(r.status == "ok");
  c.workers = 1;
  CHECK(results_csv(run_sweep(c)) == results_csv(records));
}

TEST_CASE("duplicate map ids are rejected") {
  ExperimentConfig c = tiny_config("unused");
  c.maps = {map_path("g5_01"), map_path("g5_01")};
  CHECK_THROWS_AS(run_sweep(c), Error);
}

TEST_CASE("budget trend reports a correlation per map and class") {
  std::vector<ExperimentRecord> recs;
  for (double e : {0.1, 1.0, kInfinity}) {
    ExperimentRecord r = record_with(e > 1 ? 0.5 : 1.0 / e, 0);
    r.epsilon = e;
    recs.push_back(r);
  }
  const auto trend = budget_trend(recs);
  REQUIRE(trend.size() == 1);
  CHECK(trend[0].budgets == 3);
  CHECK(trend[0].spearman_l2 == doctest::Approx(-1.0));
}

TEST_CASE("sweep outputs land under the output directory") {
  const auto dir = std::filesystem::temp_directory_path() / "pril_harness_test";
  std::filesystem::remove_all(dir);
  ExperimentConfig c = tiny_config(dir.string());
  c.epsilons = {1.0};
  c.repeats = 2;
  write_sweep_outputs(c, run_sweep(c));
  for (const char* f : {"results.csv", "rewards.csv", "aggregate.csv", "variance.csv", "trend.csv",
                        "heatmaps/g5_01_true.pgm", "heatmaps/g5_01_VI-DP-Bellman_eps1.pgm",
                        "heatmaps/g5_01_VI-DP-Bellman_epsinf.pgm"}) {
    CHECK(std::filesystem::exists(dir / f));
  }
  CHECK(load_csv((dir / "variance.csv").string()).rows.size() == 2u * 25);
}
