#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pril/dqn.hpp"
#include "pril/gridworld.hpp"
#include "pril/io.hpp"
#include "pril/irl.hpp"
#include "pril/metrics.hpp"
#include "pril/ppo.hpp"
#include "pril/privacy.hpp"
#include "pril/training.hpp"

namespace pril {

/// Private policy classes plus their non-private baselines (VI, DQN, PPO).
enum class PolicyClass {
  Vi,
  ViDpBellman,
  Dqn,
  DqnDpSgd,
  DqnDpShoe,
  DqnDpAdam,
  Ppo,
  PpoDpSgd,
  PpoDpShoe,
  PpoDpAdam,
};

struct ClassTraits {
  PolicyFamily family;
  bool is_private;
  OptimizerKind optimizer;
  Activation activation;
};

ClassTraits class_traits(PolicyClass c);
std::string_view class_name(PolicyClass c);
/// Throws ConfigError for unknown names and for the unsupported
/// functional-noise class.
PolicyClass parse_policy_class(std::string_view name);
const std::vector<PolicyClass>& all_policy_classes();
/// The seven private classes, in table order.
const std::vector<PolicyClass>& private_policy_classes();

enum class SigmaSource { Table, Rdp };

struct ExperimentConfig {
  std::vector<std::string> maps;
  std::vector<PolicyClass> classes = private_policy_classes();
  std::vector<double> epsilons{kPublishedBudgets.begin(), kPublishedBudgets.end()};
  int repeats = 10;
  std::uint64_t base_seed = 0;
  TrainConfig train;
  IrlConfig irl;
  RewardTable rewards;
  double wind = 1e-4;
  double gamma = 0.99;
  double vi_threshold = 1e-10;
  int vi_max_iters = 10000;
  double delta = 1e-5;
  double clip_norm = 1.0;
  SigmaSource sigma_source = SigmaSource::Table;
  /// Concurrent cells; 0 uses every hardware thread.
  int workers = 0;
  /// Wall-clock timings break byte-identical reruns, so they are opt-in.
  bool record_wall_time = false;
  std::string output_dir = "pril_out";

  void validate() const;
  /// The configured budgets with infinity appended when absent.
  std::vector<double> budgets() const;
};

/// The bundled map files, sorted by name.
std::vector<std::string> bundled_maps();

/// JSON config; unknown keys are rejected at every level. Relative map
/// and output paths resolve against `base_dir`.
ExperimentConfig config_from_json(std::string_view text, const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);

struct ExperimentRecord {
  std::string map_id;
  std::string grid_size;  // "WxH"
  PolicyClass policy_class = PolicyClass::Vi;
  double epsilon = kInfinity;
  int epsilon_index = 0;
  int repeat = 0;
  std::uint64_t seed = 0;
  double sigma = 0.0;
  /// Absent when either reward vector has zero norm.
  std::optional<DistanceReport> distances;
  /// NaN until measured.
  double test_return = std::numeric_limits<double>::quiet_NaN();
  double policy_agreement = std::numeric_limits<double>::quiet_NaN();
  int steps = 0;
  std::string status = "ok";
  double wall_time_s = 0.0;
  /// Reconstructed reward; empty when the attack itself failed.
  Eigen::VectorXd reward_hat;
};

std::uint64_t derive_seed(std::uint64_t base_seed, std::string_view map_id, PolicyClass c, int epsilon_index,
                          int repeat);

/// Noise level for a class at a budget: 0 at infinity or for baselines,
/// otherwise the published value, or the RDP calibration when the budget
/// is unpublished or the source is Rdp.
double class_sigma(PolicyClass c, double epsilon, const ExperimentConfig& config);

struct LoadedMap {
  std::string id;
  GridMap grid;
  Mdp mdp;
};

LoadedMap load_experiment_map(const std::string& path, const ExperimentConfig& config);

struct TrainedPolicy {
  Policy policy;
  /// Value-iteration sweeps or optimizer updates.
  int steps = 0;
};

/// Trains the class's policy on one map. Without `sigma` the class runs
/// as its non-private twin; with it, the class's mechanism is applied at
/// that noise level and the config's clip norm.
TrainedPolicy train_policy(const Mdp& mdp, PolicyClass c, std::optional<double> sigma,
                           const ExperimentConfig& config, Rng& rng);

/// Train, attack, and measure one (map, class, budget, repeat) cell.
/// Failures land in the record's status instead of propagating.
ExperimentRecord run_cell(const LoadedMap& map, PolicyClass c, double epsilon, int epsilon_index, int repeat,
                          const ExperimentConfig& config);

/// All cells in canonical (map, class, budget, repeat) order.
std::vector<ExperimentRecord> run_sweep(const ExperimentConfig& config);

inline constexpr std::string_view kResultsHeader =
    "map_id,grid_size,policy_class,epsilon,repeat,seed,sigma,l1,l2,linf,sign_changes,test_return,"
    "policy_agreement,steps,status,wall_time_s";

std::string results_csv(const std::vector<ExperimentRecord>& records);
void emit_results(const std::vector<ExperimentRecord>& records, const std::string& path);
/// Records parsed back from a results file (without reconstructed rewards).
std::vector<ExperimentRecord> records_from_csv(const CsvTable& table);

enum class GroupKey { PolicyClass, Epsilon, GridSize };
/// Accepts class/policy_class, epsilon, grid_size.
std::vector<GroupKey> parse_group_keys(std::string_view text);

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single value
  int count = 0;
  int excluded = 0;
};

struct AggregateRow {
  std::vector<std::string> key_values;
  int records = 0;
  MetricSummary l1, l2, linf, sign_changes, test_return;
  /// "ok", or "empty_group" when some metric has no defined values.
  std::string status = "ok";
};

/// Groups in order of first appearance.
std::vector<AggregateRow> aggregate_by(const std::vector<ExperimentRecord>& records, const std::vector<GroupKey>& keys);
std::string aggregate_csv(const std::vector<AggregateRow>& rows, const std::vector<GroupKey>& keys);

/// Sample variance of the reconstructed reward at each state across
/// repeats of one (map, class, budget) cell family.
Eigen::VectorXd per_state_variance(const std::vector<ExperimentRecord>& records);

struct TrendRow {
  std::string map_id;
  PolicyClass policy_class = PolicyClass::Vi;
  int budgets = 0;
  /// Rank correlation between budget and mean L2 distance.
  double spearman_l2 = 0.0;
};

std::vector<TrendRow> budget_trend(const std::vector<ExperimentRecord>& records);

/// Writes results.csv, rewards.csv, aggregate.csv, variance.csv, trend.csv
/// and heatmaps/ under the config's output directory.
void write_sweep_outputs(const ExperimentConfig& config, const std::vector<ExperimentRecord>& records);

}  // namespace pril
