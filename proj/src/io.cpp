#include "pril/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "pril/error.hpp"

namespace pril {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

double parse_double(std::string_view text) {
  if (text == "inf" || text == "+inf" || text == "Infinity") return std::numeric_limits<double>::infinity();
  if (text == "-inf" || text == "-Infinity") return -std::numeric_limits<double>::infinity();
  if (text == "nan") return std::nan("");
  double value = 0.0;
  const char* begin = text.data();
  if (!text.empty() && text.front() == '+') ++begin;
  const auto result = std::from_chars(begin, text.data() + text.size(), value);
  if (result.ec != std::errc() || result.ptr != text.data() + text.size() || text.empty()) {
    throw Error(ErrorKind::ConfigError, "not a number: '" + std::string(text) + "'");
  }
  return value;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path);
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error(ErrorKind::IoError, "write failed for " + path);
}

std::string policy_to_json(const Policy& policy) {
  nlohmann::json doc;
  doc["n_states"] = policy.n_states();
  doc["n_actions"] = policy.n_actions();
  std::vector<double> probs;
  probs.reserve(static_cast<std::size_t>(policy.probs.size()));
  for (int s = 0; s < policy.n_states(); ++s) {
    for (int a = 0; a < policy.n_actions(); ++a) probs.push_back(policy.probs(s, a));
  }
  doc["probs"] = probs;
  return doc.dump() + "\n";
}

Policy policy_from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ConfigError, std::string("policy file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorKind::ConfigError, "policy file must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (key != "n_states" && key != "n_actions" && key != "probs") {
      throw Error(ErrorKind::ConfigError, "unknown key in policy file: " + key);
    }
  }
  if (!doc.contains("n_states") || !doc.contains("n_actions") || !doc.contains("probs")) {
    throw Error(ErrorKind::ConfigError, "policy file needs n_states, n_actions and probs");
  }
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> probs;
  try {
    n_states = doc.at("n_states").get<int>();
    n_actions = doc.at("n_actions").get<int>();
    probs = doc.at("probs").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ConfigError, std::string("malformed policy file: ") + e.what());
  }
  if (n_states < 1 || n_actions < 1) throw Error(ErrorKind::ConfigError, "policy dimensions must be positive");
  if (probs.size() != static_cast<std::size_t>(n_states) * static_cast<std::size_t>(n_actions)) {
    throw Error(ErrorKind::ConfigError, "probs has " + std::to_string(probs.size()) + " entries, expected " +
                                            std::to_string(n_states * n_actions));
  }
  Policy policy;
  policy.probs.resize(n_states, n_actions);
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      const double p = probs[static_cast<std::size_t>(s * n_actions + a)];
      if (!(p >= 0.0) || !std::isfinite(p)) throw Error(ErrorKind::ConfigError, "probabilities must be finite and >= 0");
      policy.probs(s, a) = p;
    }
  }
  if (policy.max_row_error() > 1e-9) throw Error(ErrorKind::ConfigError, "policy rows must sum to 1");
  return policy;
}

Policy load_policy(const std::string& path) { return policy_from_json(read_text_file(path)); }

void save_policy(const Policy& policy, const std::string& path) { write_text_file(path, policy_to_json(policy)); }

int CsvTable::column(std::string_view name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw Error(ErrorKind::ConfigError, "missing CSV column: " + std::string(name));
  return static_cast<int>(it - header.begin());
}

bool CsvTable::has_column(std::string_view name) const {
  return std::find(header.begin(), header.end(), name) != header.end();
}

namespace {

std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

CsvTable parse_csv(std::string_view text) {
  CsvTable table;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    auto fields = split_fields(line);
    if (table.header.empty()) {
      table.header = std::move(fields);
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw Error(ErrorKind::ConfigError, "CSV line " + std::to_string(line_no) + " has " +
                                              std::to_string(fields.size()) + " fields, expected " +
                                              std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  if (table.header.empty()) throw Error(ErrorKind::ConfigError, "CSV has no header");
  return table;
}

CsvTable load_csv(const std::string& path) { return parse_csv(read_text_file(path)); }

std::string to_csv(const CsvTable& table) {
  std::string out;
  auto append_row = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) out += ',';
      out += row[i];
    }
    out += '\n';
  };
  append_row(table.header);
  for (const auto& row : table.rows) append_row(row);
  return out;
}

Eigen::VectorXd load_reward_csv(const std::string& path) {
  const CsvTable table = load_csv(path);
  const int reward_col = table.column("reward");
  const int n = static_cast<int>(table.rows.size());
  if (n == 0) throw Error(ErrorKind::ConfigError, "reward file has no rows");
  Eigen::VectorXd reward(n);
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  const bool indexed = table.has_column("state");
  const int state_col = indexed ? table.column("state") : -1;
  for (int r = 0; r < n; ++r) {
    int s = r;
    if (indexed) {
      const double idx = parse_double(table.rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(state_col)]);
      s = static_cast<int>(idx);
      if (s != idx || s < 0 || s >= n || seen[static_cast<std::size_t>(s)]) {
        throw Error(ErrorKind::ConfigError, "state column must list each index 0..n-1 once");
      }
    }
    seen[static_cast<std::size_t>(s)] = true;
    reward(s) = parse_double(table.rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(reward_col)]);
  }
  return reward;
}

std::string reward_csv(const Eigen::VectorXd& reward) {
  CsvTable table{{"state", "reward"}, {}};
  for (Eigen::Index s = 0; s < reward.size(); ++s) table.rows.push_back({std::to_string(s), format_double(reward(s))});
  return to_csv(table);
}

std::string heatmap_pgm(const Eigen::VectorXd& reward, int width, int height) {
  if (width < 1 || height < 1 || reward.size() != static_cast<Eigen::Index>(width) * height) {
    throw Error(ErrorKind::InvalidArgument, "reward length does not match the image size");
  }
  if (!reward.allFinite()) throw Error(ErrorKind::InvalidArgument, "heatmap values must be finite");
  std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  const double lo = reward.minCoeff();
  const double hi = reward.maxCoeff();
  for (Eigen::Index s = 0; s < reward.size(); ++s) {
    const double level = hi > lo ? std::round(255.0 * (reward(s) - lo) / (hi - lo)) : 128.0;
    out += static_cast<char>(static_cast<unsigned char>(level));
  }
  return out;
}

void emit_heatmap(const Eigen::VectorXd& reward, const GridMap& map, const std::string& path) {
  write_text_file(path, heatmap_pgm(reward, map.width, map.height));
}

}  // namespace pril
