#pragma once

#include <Eigen/Dense>

#include <string>
#include <string_view>
#include <vector>

#include "pril/gridworld.hpp"
#include "pril/policy.hpp"

namespace pril {

/// Shortest text that parses back to the same double; "inf"/"-inf"/"nan"
/// for non-finite values.
std::string format_double(double value);

/// Inverse of format_double. Throws ConfigError on malformed text.
double parse_double(std::string_view text);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view contents);

/// Policy document: {"n_states": n, "n_actions": m, "probs": [n*m values, row-major]}.
std::string policy_to_json(const Policy& policy);
Policy policy_from_json(std::string_view text);
Policy load_policy(const std::string& path);
void save_policy(const Policy& policy, const std::string& path);

/// Plain comma-separated table with a header row. Fields never contain
/// commas or quotes, so no quoting is supported.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name; throws ConfigError when absent.
  int column(std::string_view name) const;
  bool has_column(std::string_view name) const;
};

CsvTable parse_csv(std::string_view text);
CsvTable load_csv(const std::string& path);
std::string to_csv(const CsvTable& table);

/// Reward vector from a CSV with a `reward` column, ordered by the
/// optional `state` column.
Eigen::VectorXd load_reward_csv(const std::string& path);
std::string reward_csv(const Eigen::VectorXd& reward);

/// Binary PGM (P5): pixel = round(255 (r - min) / (max - min)); a constant
/// vector gives 128 everywhere.
std::string heatmap_pgm(const Eigen::VectorXd& reward, int width, int height);
void emit_heatmap(const Eigen::VectorXd& reward, const GridMap& map, const std::string& path);

}  // namespace pril
