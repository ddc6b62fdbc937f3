#include <CLI11.hpp>

#include <iostream>

#include "pril/harness.hpp"
#include "pril/value_iteration.hpp"

namespace {

using namespace pril;

int cmd_run(const std::string& config_path, int workers) {
  ExperimentConfig config = load_config(config_path);
  if (workers >= 0) config.workers = workers;
  const auto records = run_sweep(config);
  write_sweep_outputs(config, records);
  int failed = 0;
  for (const auto& r : records) failed += r.status != "ok";
  std::cout << records.size() << " cells written to " << config.output_dir << " (" << failed << " not ok)\n";
  return 0;
}

int cmd_aggregate(const std::string& in, const std::string& by, const std::string& out) {
  const auto records = records_from_csv(load_csv(in));
  const auto keys = parse_group_keys(by);
  const std::string text = aggregate_csv(aggregate_by(records, keys), keys);
  if (out.empty()) {
    std::cout << text;
  } else {
    write_text_file(out, text);
  }
  return 0;
}

int cmd_heatmap(const std::string& map_path, const std::string& rewards, const std::string& out) {
  const GridMap map = load_map(map_path);
  emit_heatmap(load_reward_csv(rewards), map, out);
  return 0;
}

Mdp cli_mdp(const std::string& map_path, double wind, double gamma) {
  return build_mdp<double>(load_map(map_path), wind, RewardTable{}, gamma);
}

int cmd_solve(const std::string& map_path, double wind, double gamma, const std::string& out) {
  const Mdp mdp = cli_mdp(map_path, wind, gamma);
  Rng rng(0);
  const auto vi = value_iteration<double>(mdp, 1e-10, 10000, std::nullopt, rng);
  save_policy(vi.policy, out);
  return 0;
}

int cmd_attack(const std::string& map_path, const std::string& policy_path, double l1, double rmax, double wind,
               double gamma, const std::string& out) {
  const Mdp mdp = cli_mdp(map_path, wind, gamma);
  const Policy policy = load_policy(policy_path);
  if (policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions()) {
    throw Error(ErrorKind::ConfigError, "policy shape does not match the map");
  }
  const auto attack = reconstruct_reward(mdp, policy.determinized(), IrlConfig{rmax, l1, gamma});
  if (attack.status != IrlStatus::Optimal) {
    std::cerr << "error: reward LP did not reach an optimum\n";
    return 3;
  }
  const DistanceReport d = distance_report(mdp.reward, attack.reward);
  std::cout << "l1=" << format_double(d.l1) << " l2=" << format_double(d.l2) << " linf=" << format_double(d.linf)
            << " sign_changes=" << d.sign_changes << "\n";
  if (!out.empty()) write_text_file(out, reward_csv(attack.reward));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reward reconstruction attacks on private gridworld policies"};
  app.require_subcommand(1);

  std::string config_path;
  int workers = -1;
  auto* run = app.add_subcommand("run", "Run an experiment sweep from a JSON config");
  run->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  run->add_option("--workers", workers, "Override the worker count");

  std::string in, by = "policy_class,epsilon", agg_out;
  auto* aggregate = app.add_subcommand("aggregate", "Summarize a results file by group keys");
  aggregate->add_option("--in", in, "results.csv")->required()->check(CLI::ExistingFile);
  aggregate->add_option("--by", by, "Comma-separated keys: policy_class, epsilon, grid_size");
  aggregate->add_option("--out", agg_out, "Output CSV (stdout when omitted)");

  std::string map_path, rewards_path, heat_out;
  auto* heatmap = app.add_subcommand("heatmap", "Render a reward vector as a PGM image");
  heatmap->add_option("--map", map_path, "Map file")->required()->check(CLI::ExistingFile);
  heatmap->add_option("--rewards", rewards_path, "CSV with a reward column")->required()->check(CLI::ExistingFile);
  heatmap->add_option("--out", heat_out, "Output .pgm")->required();

  std::string policy_path, attack_out, solve_out;
  double l1 = 0.1, rmax = 1.0, wind = 1e-4, gamma = 0.99;
  auto* attack = app.add_subcommand("attack", "Reconstruct a reward from a saved policy");
  attack->add_option("--map", map_path, "Map file")->required()->check(CLI::ExistingFile);
  attack->add_option("--policy", policy_path, "Policy JSON")->required()->check(CLI::ExistingFile);
  attack->add_option("--l1", l1, "L1 penalty")->capture_default_str();
  attack->add_option("--rmax", rmax, "Reward bound")->capture_default_str();
  attack->add_option("--wind", wind, "Slip probability")->capture_default_str();
  attack->add_option("--gamma", gamma, "Discount")->capture_default_str();
  attack->add_option("--out", attack_out, "Write the reward as state,reward CSV");

  auto* solve = app.add_subcommand("solve", "Save the optimal policy of a map");
  solve->add_option("--map", map_path, "Map file")->required()->check(CLI::ExistingFile);
  solve->add_option("--wind", wind, "Slip probability")->capture_default_str();
  solve->add_option("--gamma", gamma, "Discount")->capture_default_str();
  solve->add_option("--out", solve_out, "Output policy JSON")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path, workers);
    if (*aggregate) return cmd_aggregate(in, by, agg_out);
    if (*heatmap) return cmd_heatmap(map_path, rewards_path, heat_out);
    if (*attack) return cmd_attack(map_path, policy_path, l1, rmax, wind, gamma, attack_out);
    if (*solve) return cmd_solve(map_path, wind, gamma, solve_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
