#include "pril/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <thread>

#include "pril/value_iteration.hpp"

namespace pril {

namespace fs = std::filesystem;

namespace {

struct ClassEntry {
  PolicyClass id;
  std::string_view name;
  ClassTraits traits;
};

constexpr ClassEntry kClasses[] = {
    {PolicyClass::Vi, "VI", {PolicyFamily::ValueIteration, false, OptimizerKind::Sgd, Activation::Relu}},
    {PolicyClass::ViDpBellman, "VI-DP-Bellman", {PolicyFamily::ValueIteration, true, OptimizerKind::Sgd, Activation::Relu}},
    {PolicyClass::Dqn, "DQN", {PolicyFamily::Dqn, false, OptimizerKind::Adam, Activation::Relu}},
    {PolicyClass::DqnDpSgd, "DQN-DP-SGD", {PolicyFamily::Dqn, true, OptimizerKind::Sgd, Activation::Relu}},
    {PolicyClass::DqnDpShoe, "DQN-DP-Shoe", {PolicyFamily::Dqn, true, OptimizerKind::Sgd, Activation::Tanh}},
    {PolicyClass::DqnDpAdam, "DQN-DP-Adam", {PolicyFamily::Dqn, true, OptimizerKind::Adam, Activation::Relu}},
    {PolicyClass::Ppo, "PPO", {PolicyFamily::Ppo, false, OptimizerKind::Adam, Activation::Relu}},
    {PolicyClass::PpoDpSgd, "PPO-DP-SGD", {PolicyFamily::Ppo, true, OptimizerKind::Sgd, Activation::Relu}},
    {PolicyClass::PpoDpShoe, "PPO-DP-Shoe", {PolicyFamily::Ppo, true, OptimizerKind::Sgd, Activation::Tanh}},
    {PolicyClass::PpoDpAdam, "PPO-DP-Adam", {PolicyFamily::Ppo, true, OptimizerKind::Adam, Activation::Relu}},
};

const ClassEntry& entry(PolicyClass c) {
  for (const auto& e : kClasses) {
    if (e.id == c) return e;
  }
  throw Error(ErrorKind::InvalidArgument, "unknown policy class");
}

std::string field_or_empty(double value) { return std::isnan(value) ? std::string() : format_double(value); }

double parse_optional(const std::string& text) { return text.empty() ? std::nan("") : parse_double(text); }

std::string grid_size_of(const GridMap& map) { return std::to_string(map.width) + "x" + std::to_string(map.height); }

std::vector<bool> nonterminal_mask(const Mdp& mdp) {
  std::vector<bool> mask(static_cast<std::size_t>(mdp.n_states()));
  for (int s = 0; s < mdp.n_states(); ++s) mask[static_cast<std::size_t>(s)] = !mdp.is_terminal(s);
  return mask;
}

std::string resolve(const std::string& path, const std::string& base_dir) {
  const fs::path p(path);
  if (p.is_absolute() || base_dir.empty()) return p.lexically_normal().string();
  return (fs::path(base_dir) / p).lexically_normal().string();
}

}  // namespace

ClassTraits class_traits(PolicyClass c) { return entry(c).traits; }

std::string_view class_name(PolicyClass c) { return entry(c).name; }

PolicyClass parse_policy_class(std::string_view name) {
  for (const auto& e : kClasses) {
    if (e.name == name) return e.id;
  }
  if (name == "DQN-DP-FN") {
    throw Error(ErrorKind::ConfigError, "policy class DQN-DP-FN (functional noise) is not supported");
  }
  throw Error(ErrorKind::ConfigError, "unknown policy class: " + std::string(name));
}

const std::vector<PolicyClass>& all_policy_classes() {
  static const std::vector<PolicyClass> classes = [] {
    std::vector<PolicyClass> out;
    for (const auto& e : kClasses) out.push_back(e.id);
    return out;
  }();
  return classes;
}

const std::vector<PolicyClass>& private_policy_classes() {
  static const std::vector<PolicyClass> classes = {PolicyClass::ViDpBellman, PolicyClass::DqnDpSgd,
                                                   PolicyClass::DqnDpShoe,   PolicyClass::DqnDpAdam,
                                                   PolicyClass::PpoDpSgd,    PolicyClass::PpoDpShoe,
                                                   PolicyClass::PpoDpAdam};
  return classes;
}

void ExperimentConfig::validate() const {
  if (maps.empty()) throw Error(ErrorKind::ConfigError, "no maps configured");
  if (classes.empty()) throw Error(ErrorKind::ConfigError, "no policy classes configured");
  if (epsilons.empty()) throw Error(ErrorKind::ConfigError, "epsilon list is empty");
  for (double e : epsilons) {
    if (!(e > 0.0)) throw Error(ErrorKind::ConfigError, "budgets must be positive");
  }
  if (repeats < 1) throw Error(ErrorKind::ConfigError, "repeats must be at least 1");
  if (!(wind >= 0.0 && wind < 1.0)) throw Error(ErrorKind::ConfigError, "wind must lie in [0, 1)");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw Error(ErrorKind::ConfigError, "gamma must lie in [0, 1)");
  if (!(vi_threshold > 0.0) || vi_max_iters < 1) throw Error(ErrorKind::ConfigError, "invalid value-iteration limits");
  if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorKind::ConfigError, "delta must lie in (0, 1)");
  if (!(clip_norm > 0.0)) throw Error(ErrorKind::ConfigError, "clip norm must be positive");
  if (workers < 0) throw Error(ErrorKind::ConfigError, "workers must be non-negative");
  if (!rewards.all_finite()) throw Error(ErrorKind::ConfigError, "tile rewards must be finite");
  if (!(irl.r_max > 0.0) || !std::isfinite(irl.r_max) || !(irl.l1_penalty >= 0.0) || !std::isfinite(irl.l1_penalty)) {
    throw Error(ErrorKind::ConfigError, "invalid IRL parameters");
  }
  try {
    TrainConfig t = train;
    t.gamma = gamma;
    t.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::ConfigError, e.what());
  }
}

std::vector<double> ExperimentConfig::budgets() const {
  std::vector<double> out = epsilons;
  if (std::none_of(out.begin(), out.end(), [](double e) { return std::isinf(e); })) out.push_back(kInfinity);
  return out;
}

std::vector<std::string> bundled_maps() {
  std::vector<std::string> out;
  for (const auto& item : fs::directory_iterator(fs::path(PRIL_DATA_DIR) / "maps")) {
    if (item.path().extension() == ".txt") out.push_back(item.path().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

using Json = nlohmann::json;

void reject_unknown(const Json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!obj.is_object()) throw Error(ErrorKind::ConfigError, where + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw Error(ErrorKind::ConfigError, "unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
void read(const Json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

double budget_value(const Json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) return parse_double(v.get<std::string>());
  throw Error(ErrorKind::ConfigError, "budgets must be numbers or \"inf\"");
}

}  // namespace

ExperimentConfig config_from_json(std::string_view text, const std::string& base_dir) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::ConfigError, std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(doc,
                 {"maps", "policy_classes", "epsilons", "repeats", "base_seed", "train", "irl", "rewards", "wind",
                  "gamma", "value_iteration", "delta", "clip_norm", "sigma_source", "workers", "record_wall_time",
                  "output_dir"},
                 "config");
  ExperimentConfig config;
  try {
    if (doc.contains("maps")) {
      for (const auto& m : doc.at("maps")) config.maps.push_back(resolve(m.get<std::string>(), base_dir));
    } else {
      config.maps = bundled_maps();
    }
    if (doc.contains("policy_classes")) {
      config.classes.clear();
      for (const auto& c : doc.at("policy_classes")) config.classes.push_back(parse_policy_class(c.get<std::string>()));
    }
    if (doc.contains("epsilons")) {
      config.epsilons.clear();
      for (const auto& e : doc.at("epsilons")) config.epsilons.push_back(budget_value(e));
    }
    read(doc, "repeats", config.repeats);
    read(doc, "base_seed", config.base_seed);
    read(doc, "wind", config.wind);
    read(doc, "gamma", config.gamma);
    read(doc, "delta", config.delta);
    read(doc, "workers", config.workers);
    read(doc, "record_wall_time", config.record_wall_time);
    if (doc.contains("clip_norm")) config.clip_norm = budget_value(doc.at("clip_norm"));
    if (doc.contains("output_dir")) config.output_dir = resolve(doc.at("output_dir").get<std::string>(), base_dir);
    if (doc.contains("sigma_source")) {
      const auto source = doc.at("sigma_source").get<std::string>();
      if (source == "table") {
        config.sigma_source = SigmaSource::Table;
      } else if (source == "rdp") {
        config.sigma_source = SigmaSource::Rdp;
      } else {
        throw Error(ErrorKind::ConfigError, "sigma_source must be \"table\" or \"rdp\"");
      }
    }
    if (doc.contains("train")) {
      const Json& t = doc.at("train");
      reject_unknown(t,
                     {"epochs", "iterations", "test_episodes", "learning_rate", "adam_learning_rate", "batch_size",
                      "micro_batches"},
                     "train");
      read(t, "epochs", config.train.epochs);
      read(t, "iterations", config.train.iterations);
      read(t, "test_episodes", config.train.test_episodes);
      read(t, "learning_rate", config.train.learning_rate);
      read(t, "adam_learning_rate", config.train.adam_learning_rate);
      read(t, "batch_size", config.train.batch_size);
      read(t, "micro_batches", config.train.micro_batches);
    }
    if (doc.contains("irl")) {
      const Json& i = doc.at("irl");
      reject_unknown(i, {"r_max", "l1_penalty"}, "irl");
      read(i, "r_max", config.irl.r_max);
      read(i, "l1_penalty", config.irl.l1_penalty);
    }
    if (doc.contains("rewards")) {
      const Json& r = doc.at("rewards");
      reject_unknown(r, {"safe", "frozen", "hole", "high_reward", "goal"}, "rewards");
      read(r, "safe", config.rewards.safe);
      read(r, "frozen", config.rewards.frozen);
      read(r, "hole", config.rewards.hole);
      read(r, "high_reward", config.rewards.high_reward);
      read(r, "goal", config.rewards.goal);
    }
    if (doc.contains("value_iteration")) {
      const Json& v = doc.at("value_iteration");
      reject_unknown(v, {"threshold", "max_iters"}, "value_iteration");
      read(v, "threshold", config.vi_threshold);
      read(v, "max_iters", config.vi_max_iters);
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::ConfigError, std::string("malformed config value: ") + e.what());
  }
  config.train.gamma = config.gamma;
  config.irl.gamma = config.gamma;
  config.validate();
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  return config_from_json(read_text_file(path), fs::path(path).parent_path().string());
}

std::uint64_t derive_seed(std::uint64_t base_seed, std::string_view map_id, PolicyClass c, int epsilon_index,
                          int repeat) {
  std::uint64_t h = combine_seed(base_seed, stable_hash(map_id));
  h = combine_seed(h, stable_hash(class_name(c)));
  h = combine_seed(h, static_cast<std::uint64_t>(epsilon_index));
  return combine_seed(h, static_cast<std::uint64_t>(repeat));
}

double class_sigma(PolicyClass c, double epsilon, const ExperimentConfig& config) {
  const ClassTraits traits = class_traits(c);
  if (!traits.is_private || std::isinf(epsilon)) return 0.0;
  if (config.sigma_source == SigmaSource::Table) {
    try {
      return sigma_from_table(traits.family, epsilon);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::UnknownBudget) throw;
    }
  }
  const std::int64_t steps =
      traits.family == PolicyFamily::ValueIteration ? config.vi_max_iters : config.train.total_steps();
  return rdp_calibrate({epsilon, config.delta}, family_sensitivity(traits.family), steps);
}

LoadedMap load_experiment_map(const std::string& path, const ExperimentConfig& config) {
  LoadedMap out;
  out.id = fs::path(path).stem().string();
  out.grid = load_map(path);
  out.mdp = build_mdp<double>(out.grid, config.wind, config.rewards, config.gamma);
  return out;
}

TrainedPolicy train_policy(const Mdp& mdp, PolicyClass c, std::optional<double> sigma, const ExperimentConfig& config,
                           Rng& rng) {
  const ClassTraits traits = class_traits(c);
  TrainedPolicy out;
  if (traits.family == PolicyFamily::ValueIteration) {
    std::optional<NoiseSpec> noise;
    if (sigma) noise = NoiseSpec{*sigma, family_sensitivity(traits.family)};
    auto vi = value_iteration<double>(mdp, config.vi_threshold, config.vi_max_iters, noise, rng);
    out.policy = std::move(vi.policy);
    out.steps = vi.sweeps;
    return out;
  }

  TrainConfig train = config.train;
  train.gamma = config.gamma;
  train.optimizer = traits.optimizer;
  std::optional<DpSgdConfig> dp;
  if (sigma) dp = DpSgdConfig{config.clip_norm, *sigma, traits.optimizer, traits.activation};
  const int n = mdp.n_states();
  TrainResult result;
  if (traits.family == PolicyFamily::Dqn) {
    Mlp net = make_network(n, mdp.n_actions(), traits.activation);
    initialize_network(net, rng);
    result = train_dqn(mdp, train, net, dp, rng);
  } else {
    Mlp actor = make_network(n, mdp.n_actions(), traits.activation);
    Mlp critic = make_network(n, 1, traits.activation);
    initialize_network(actor, rng);
    initialize_network(critic, rng);
    result = train_ppo(mdp, train, actor, critic, dp, rng);
  }
  out.policy = std::move(result.policy);
  out.steps = result.updates;
  return out;
}

ExperimentRecord run_cell(const LoadedMap& map, PolicyClass c, double epsilon, int epsilon_index, int repeat,
                          const ExperimentConfig& config) {
  ExperimentRecord rec;
  rec.map_id = map.id;
  rec.grid_size = grid_size_of(map.grid);
  rec.policy_class = c;
  rec.epsilon = epsilon;
  rec.epsilon_index = epsilon_index;
  rec.repeat = repeat;
  rec.seed = derive_seed(config.base_seed, map.id, c, epsilon_index, repeat);
  const auto started = std::chrono::steady_clock::now();
  try {
    std::optional<double> sigma;
    if (class_traits(c).is_private && std::isfinite(epsilon)) sigma = class_sigma(c, epsilon, config);
    rec.sigma = sigma.value_or(0.0);

    const Mdp& mdp = map.mdp;
    Rng train_rng = substream(rec.seed, 1);
    const TrainedPolicy trained = train_policy(mdp, c, sigma, config, train_rng);
    rec.steps = trained.steps;

    Rng eval_rng = substream(rec.seed, 2);
    rec.test_return = evaluate_return(mdp, trained.policy, config.train.test_episodes, config.gamma,
                                      default_max_steps(mdp.n_states()), eval_rng);

    const Policy attacked = trained.policy.determinized();
    IrlConfig irl = config.irl;
    irl.gamma = config.gamma;
    const auto attack = reconstruct_reward(mdp, attacked, irl);
    if (attack.status == IrlStatus::Infeasible) {
      rec.status = "lp_infeasible";
    } else if (attack.status == IrlStatus::IterationLimit) {
      rec.status = "lp_iteration_limit";
    } else {
      rec.reward_hat = attack.reward;
      Rng resolve_rng = substream(rec.seed, 3);
      const auto resolved =
          value_iteration<double>(mdp.with_reward(attack.reward), config.vi_threshold, config.vi_max_iters,
                                  std::nullopt, resolve_rng);
      rec.policy_agreement = policy_agreement(resolved.policy, attacked, nonterminal_mask(mdp));
      try {
        rec.distances = distance_report(mdp.reward, attack.reward);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::ZeroVector) throw;
        rec.status = std::string(to_string(e.kind()));
      }
    }
  } catch (const Error& e) {
    rec.status = std::string(to_string(e.kind()));
  } catch (const std::exception&) {
    rec.status = "error";
  }
  if (config.record_wall_time) {
    rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  }
  return rec;
}

std::vector<ExperimentRecord> run_sweep(const ExperimentConfig& config) {
  config.validate();
  std::vector<LoadedMap> maps;
  std::set<std::string> ids;
  for (const auto& path : config.maps) {
    maps.push_back(load_experiment_map(path, config));
    if (!ids.insert(maps.back().id).second) throw Error(ErrorKind::ConfigError, "duplicate map id: " + maps.back().id);
  }
  const std::vector<double> budgets = config.budgets();

  struct Cell {
    std::size_t map;
    PolicyClass policy_class;
    int epsilon_index;
    int repeat;
  };
  std::vector<Cell> cells;
  for (std::size_t m = 0; m < maps.size(); ++m) {
    for (PolicyClass c : config.classes) {
      for (int e = 0; e < static_cast<int>(budgets.size()); ++e) {
        for (int r = 0; r < config.repeats; ++r) cells.push_back({m, c, e, r});
      }
    }
  }

  std::vector<ExperimentRecord> records(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      const Cell& cell = cells[i];
      records[i] = run_cell(maps[cell.map], cell.policy_class, budgets[static_cast<std::size_t>(cell.epsilon_index)],
                            cell.epsilon_index, cell.repeat, config);
    }
  };
  unsigned n_workers = config.workers > 0 ? static_cast<unsigned>(config.workers) : std::thread::hardware_concurrency();
  n_workers = std::max(1u, std::min<unsigned>(n_workers, static_cast<unsigned>(std::max<std::size_t>(1, cells.size()))));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return records;
}

std::string results_csv(const std::vector<ExperimentRecord>& records) {
  std::string out(kResultsHeader);
  out += '\n';
  for (const auto& r : records) {
    const bool has = r.distances.has_value();
    const std::vector<std::string> fields = {
        r.map_id,
        r.grid_size,
        std::string(class_name(r.policy_class)),
        format_double(r.epsilon),
        std::to_string(r.repeat),
        std::to_string(r.seed),
        format_double(r.sigma),
        has ? format_double(r.distances->l1) : "",
        has ? format_double(r.distances->l2) : "",
        has ? format_double(r.distances->linf) : "",
        has ? std::to_string(r.distances->sign_changes) : "",
        field_or_empty(r.test_return),
        field_or_empty(r.policy_agreement),
        std::to_string(r.steps),
        r.status,
        format_double(r.wall_time_s)};
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i > 0) out += ',';
      out += fields[i];
    }
    out += '\n';
  }
  return out;
}

void emit_results(const std::vector<ExperimentRecord>& records, const std::string& path) {
  write_text_file(path, results_csv(records));
}

std::vector<ExperimentRecord> records_from_csv(const CsvTable& table) {
  const auto col = [&](std::string_view name) { return static_cast<std::size_t>(table.column(name)); };
  const std::size_t c_map = col("map_id"), c_grid = col("grid_size"), c_class = col("policy_class"),
                    c_eps = col("epsilon"), c_rep = col("repeat"), c_seed = col("seed"), c_sigma = col("sigma"),
                    c_l1 = col("l1"), c_l2 = col("l2"), c_linf = col("linf"), c_sign = col("sign_changes"),
                    c_ret = col("test_return"), c_agree = col("policy_agreement"), c_steps = col("steps"),
                    c_status = col("status"), c_wall = col("wall_time_s");
  std::vector<ExperimentRecord> out;
  for (const auto& row : table.rows) {
    ExperimentRecord r;
    r.map_id = row[c_map];
    r.grid_size = row[c_grid];
    r.policy_class = parse_policy_class(row[c_class]);
    r.epsilon = parse_double(row[c_eps]);
    r.repeat = static_cast<int>(parse_double(row[c_rep]));
    try {
      r.seed = std::stoull(row[c_seed]);
    } catch (const std::exception&) {
      throw Error(ErrorKind::ConfigError, "bad seed field: " + row[c_seed]);
    }
    r.sigma = parse_double(row[c_sigma]);
    if (!row[c_l1].empty()) {
      r.distances = DistanceReport{parse_double(row[c_l1]), parse_double(row[c_l2]), parse_double(row[c_linf]),
                                   static_cast<int>(parse_double(row[c_sign]))};
    }
    r.test_return = parse_optional(row[c_ret]);
    r.policy_agreement = parse_optional(row[c_agree]);
    r.steps = static_cast<int>(parse_double(row[c_steps]));
    r.status = row[c_status];
    r.wall_time_s = parse_double(row[c_wall]);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<GroupKey> parse_group_keys(std::string_view text) {
  std::vector<GroupKey> keys;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    if (comma == std::string_view::npos) comma = text.size();
    const std::string_view name = text.substr(start, comma - start);
    if (!name.empty()) {
      GroupKey key;
      if (name == "class" || name == "policy_class") {
        key = GroupKey::PolicyClass;
      } else if (name == "epsilon") {
        key = GroupKey::Epsilon;
      } else if (name == "grid_size") {
        key = GroupKey::GridSize;
      } else {
        throw Error(ErrorKind::ConfigError, "unknown group key: " + std::string(name));
      }
      if (std::find(keys.begin(), keys.end(), key) != keys.end()) {
        throw Error(ErrorKind::ConfigError, "duplicate group key: " + std::string(name));
      }
      keys.push_back(key);
    }
    start = comma + 1;
  }
  return keys;
}

namespace {

MetricSummary summarize(const std::vector<double>& values, int total) {
  MetricSummary s;
  s.count = static_cast<int>(values.size());
  s.excluded = total - s.count;
  if (values.empty()) {
    s.mean = s.std = std::nan("");
    return s;
  }
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

std::string_view key_name(GroupKey k) {
  switch (k) {
    case GroupKey::PolicyClass: return "policy_class";
    case GroupKey::Epsilon: return "epsilon";
    case GroupKey::GridSize: return "grid_size";
  }
  return "";
}

}  // namespace

std::vector<AggregateRow> aggregate_by(const std::vector<ExperimentRecord>& records,
                                       const std::vector<GroupKey>& keys) {
  if (records.empty()) throw Error(ErrorKind::EmptyGroup, "no records to aggregate");
  std::vector<std::vector<std::string>> order;
  std::map<std::vector<std::string>, std::vector<const ExperimentRecord*>> groups;
  for (const auto& r : records) {
    std::vector<std::string> key;
    for (GroupKey k : keys) {
      switch (k) {
        case GroupKey::PolicyClass: key.emplace_back(class_name(r.policy_class)); break;
        case GroupKey::Epsilon: key.push_back(format_double(r.epsilon)); break;
        case GroupKey::GridSize: key.push_back(r.grid_size); break;
      }
    }
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(&r);
  }
  std::vector<AggregateRow> rows;
  for (const auto& key : order) {
    const auto& members = groups.at(key);
    std::vector<double> l1, l2, linf, sign, ret;
    for (const ExperimentRecord* r : members) {
      if (r->distances) {
        l1.push_back(r->distances->l1);
        l2.push_back(r->distances->l2);
        linf.push_back(r->distances->linf);
        sign.push_back(r->distances->sign_changes);
      }
      if (std::isfinite(r->test_return)) ret.push_back(r->test_return);
    }
    AggregateRow row;
    row.key_values = key;
    row.records = static_cast<int>(members.size());
    row.l1 = summarize(l1, row.records);
    row.l2 = summarize(l2, row.records);
    row.linf = summarize(linf, row.records);
    row.sign_changes = summarize(sign, row.records);
    row.test_return = summarize(ret, row.records);
    if (l1.empty() || ret.empty()) row.status = std::string(to_string(ErrorKind::EmptyGroup));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string aggregate_csv(const std::vector<AggregateRow>& rows, const std::vector<GroupKey>& keys) {
  CsvTable table;
  for (GroupKey k : keys) table.header.emplace_back(key_name(k));
  table.header.push_back("records");
  const char* metrics[] = {"l1", "l2", "linf", "sign_changes", "test_return"};
  for (const char* m : metrics) {
    for (const char* suffix : {"_mean", "_std", "_n", "_excluded"}) table.header.push_back(std::string(m) + suffix);
  }
  table.header.push_back("status");
  for (const auto& row : rows) {
    std::vector<std::string> fields = row.key_values;
    fields.push_back(std::to_string(row.records));
    for (const MetricSummary* s : {&row.l1, &row.l2, &row.linf, &row.sign_changes, &row.test_return}) {
      fields.push_back(field_or_empty(s->mean));
      fields.push_back(field_or_empty(s->std));
      fields.push_back(std::to_string(s->count));
      fields.push_back(std::to_string(s->excluded));
    }
    fields.push_back(row.status);
    table.rows.push_back(std::move(fields));
  }
  return to_csv(table);
}

Eigen::VectorXd per_state_variance(const std::vector<ExperimentRecord>& records) {
  std::vector<const Eigen::VectorXd*> rewards;
  for (const auto& r : records) {
    if (r.map_id != records.front().map_id || r.policy_class != records.front().policy_class ||
        !(r.epsilon == records.front().epsilon)) {
      throw Error(ErrorKind::InvalidArgument, "records span more than one (map, class, budget) cell family");
    }
    if (r.reward_hat.size() > 0) rewards.push_back(&r.reward_hat);
  }
  if (rewards.size() < 2) throw Error(ErrorKind::TooFewRuns, "variance needs at least two reconstructed rewards");
  const Eigen::Index n = rewards.front()->size();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
  for (const auto* r : rewards) {
    if (r->size() != n) throw Error(ErrorKind::InvalidArgument, "reconstructed rewards differ in length");
    mean += *r;
  }
  mean /= static_cast<double>(rewards.size());
  Eigen::VectorXd var = Eigen::VectorXd::Zero(n);
  for (const auto* r : rewards) var += (*r - mean).cwiseAbs2();
  return var / static_cast<double>(rewards.size() - 1);
}

std::vector<TrendRow> budget_trend(const std::vector<ExperimentRecord>& records) {
  std::vector<std::pair<std::string, PolicyClass>> order;
  std::map<std::pair<std::string, PolicyClass>, std::map<double, std::vector<double>>> groups;
  for (const auto& r : records) {
    const auto key = std::make_pair(r.map_id, r.policy_class);
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    auto& per_budget = it->second[r.epsilon];
    if (r.distances) per_budget.push_back(r.distances->l2);
  }
  std::vector<TrendRow> out;
  for (const auto& key : order) {
    std::vector<double> eps, mean_l2;
    for (const auto& [e, values] : groups.at(key)) {
      if (values.empty()) continue;
      double sum = 0.0;
      for (double v : values) sum += v;
      eps.push_back(e);
      mean_l2.push_back(sum / static_cast<double>(values.size()));
    }
    TrendRow row{key.first, key.second, static_cast<int>(eps.size()), std::nan("")};
    if (eps.size() >= 2) row.spearman_l2 = spearman_correlation(eps, mean_l2);
    out.push_back(row);
  }
  return out;
}

void write_sweep_outputs(const ExperimentConfig& config, const std::vector<ExperimentRecord>& records) {
  const fs::path root(config.output_dir);
  fs::create_directories(root / "heatmaps");
  emit_results(records, (root / "results.csv").string());

  CsvTable rewards{{"map_id", "policy_class", "epsilon", "repeat", "state", "reward"}, {}};
  for (const auto& r : records) {
    for (Eigen::Index s = 0; s < r.reward_hat.size(); ++s) {
      rewards.rows.push_back({r.map_id, std::string(class_name(r.policy_class)), format_double(r.epsilon),
                              std::to_string(r.repeat), std::to_string(s), format_double(r.reward_hat(s))});
    }
  }
  write_text_file((root / "rewards.csv").string(), to_csv(rewards));

  if (!records.empty()) {
    const std::vector<GroupKey> keys = {GroupKey::GridSize, GroupKey::PolicyClass, GroupKey::Epsilon};
    write_text_file((root / "aggregate.csv").string(), aggregate_csv(aggregate_by(records, keys), keys));
  }

  CsvTable trend{{"map_id", "policy_class", "budgets", "spearman_l2"}, {}};
  for (const auto& t : budget_trend(records)) {
    trend.rows.push_back(
        {t.map_id, std::string(class_name(t.policy_class)), std::to_string(t.budgets), field_or_empty(t.spearman_l2)});
  }
  write_text_file((root / "trend.csv").string(), to_csv(trend));

  // Cell families in canonical order, for variances and mean heatmaps.
  std::vector<std::vector<const ExperimentRecord*>> families;
  for (const auto& r : records) {
    const ExperimentRecord* head = families.empty() ? nullptr : families.back().front();
    if (head && head->map_id == r.map_id && head->policy_class == r.policy_class && head->epsilon == r.epsilon) {
      families.back().push_back(&r);
    } else {
      families.push_back({&r});
    }
  }

  CsvTable variance{{"map_id", "policy_class", "epsilon", "state", "variance"}, {}};
  std::map<std::string, GridMap> grids;
  for (const auto& path : config.maps) grids.emplace(fs::path(path).stem().string(), load_map(path));
  std::set<std::string> truth_written;
  for (const auto& family : families) {
    const ExperimentRecord& head = *family.front();
    const auto grid = grids.find(head.map_id);
    std::vector<ExperimentRecord> members;
    Eigen::VectorXd sum;
    int with_reward = 0;
    for (const auto* r : family) {
      members.push_back(*r);
      if (r->reward_hat.size() == 0) continue;
      sum = with_reward == 0 ? r->reward_hat : Eigen::VectorXd(sum + r->reward_hat);
      ++with_reward;
    }
    if (with_reward >= 2) {
      const Eigen::VectorXd v = per_state_variance(members);
      for (Eigen::Index s = 0; s < v.size(); ++s) {
        variance.rows.push_back({head.map_id, std::string(class_name(head.policy_class)), format_double(head.epsilon),
                                 std::to_string(s), format_double(v(s))});
      }
    }
    if (grid == grids.end()) continue;
    if (truth_written.insert(head.map_id).second) {
      const Mdp mdp = build_mdp<double>(grid->second, config.wind, config.rewards, config.gamma);
      emit_heatmap(mdp.reward, grid->second, (root / "heatmaps" / (head.map_id + "_true.pgm")).string());
    }
    if (with_reward > 0) {
      const std::string name =
          head.map_id + "_" + std::string(class_name(head.policy_class)) + "_eps" + format_double(head.epsilon) + ".pgm";
      emit_heatmap(sum / with_reward, grid->second, (root / "heatmaps" / name).string());
    }
  }
  write_text_file((root / "variance.csv").string(), to_csv(variance));
}

}  // namespace pril
