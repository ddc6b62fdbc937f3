#include "pril/privacy.hpp"

#include <algorithm>
#include <string>

#include "pril/error.hpp"

namespace pril {

namespace {

// Standard deviations published for each family, in kPublishedBudgets order.
constexpr std::array<double, 9> kViSigmas = {2080.08, 1886.69, 520.02, 83.20, 20.80, 5.20, 0.83, 0.21, 0.0};
constexpr std::array<double, 9> kDeepSigmas = {94229.0, 150.0, 22.75, 9.89, 5.38, 3.03, 1.55, 1.0, 0.0};

}  // namespace

double family_sensitivity(PolicyFamily family) {
  switch (family) {
    case PolicyFamily::ValueIteration: return 1.05;
    case PolicyFamily::Dqn: return 1.0;
    case PolicyFamily::Ppo: return 1.0;
  }
  return 1.0;
}

double bellman_sensitivity(int n_states) {
  if (n_states < 2) {
    throw Error(ErrorKind::TooFewStates, "sensitivity needs at least 2 states, got " + std::to_string(n_states));
  }
  const double n = static_cast<double>(n_states);
  return n / (n - 1.0);
}

double sigma_from_table(PolicyFamily family, double epsilon) {
  const auto& sigmas = family == PolicyFamily::ValueIteration ? kViSigmas : kDeepSigmas;
  for (std::size_t i = 0; i < kPublishedBudgets.size(); ++i) {
    if (kPublishedBudgets[i] == epsilon) return sigmas[i];
  }
  throw Error(ErrorKind::UnknownBudget, "no published sigma for epsilon " + std::to_string(epsilon));
}

const std::vector<double>& RdpAccountant::default_orders() {
  static const std::vector<double> orders = [] {
    std::vector<double> o = {1.25, 1.5, 1.75};
    for (int a = 2; a <= 10; ++a) o.push_back(a);
    for (int a = 12; a <= 64; a += 4) o.push_back(a);
    return o;
  }();
  return orders;
}

RdpAccountant::RdpAccountant() : orders_(default_orders()) {}

RdpAccountant::RdpAccountant(std::vector<double> orders) : orders_(std::move(orders)) {
  if (orders_.empty()) throw Error(ErrorKind::InvalidArgument, "accountant needs at least one order");
  for (double a : orders_) {
    if (!(a > 1.0)) throw Error(ErrorKind::InvalidArgument, "RDP orders must exceed 1");
  }
}

void RdpAccountant::record_gaussian(double sigma, double sensitivity, std::int64_t count) {
  if (count <= 0) return;
  mechanisms_[{sigma, sensitivity}] += count;
  steps_ += count;
}

std::vector<double> RdpAccountant::rdp() const {
  std::vector<double> out(orders_.size(), 0.0);
  for (const auto& [key, count] : mechanisms_) {
    const auto [sigma, sensitivity] = key;
    for (std::size_t i = 0; i < orders_.size(); ++i) {
      const double per_step = sigma == 0.0 ? kInfinity : gaussian_rdp(orders_[i], sigma, sensitivity);
      out[i] += static_cast<double>(count) * per_step;
    }
  }
  return out;
}

double RdpAccountant::epsilon(double delta) const {
  if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorKind::InvalidArgument, "delta must lie in (0, 1)");
  const std::vector<double> total = rdp();
  double best = kInfinity;
  for (std::size_t i = 0; i < orders_.size(); ++i) {
    best = std::min(best, total[i] + std::log(1.0 / delta) / (orders_[i] - 1.0));
  }
  return best;
}

double rdp_epsilon_of_gaussian(double sigma, double sensitivity, std::int64_t steps, double delta) {
  if (!(sigma > 0.0)) throw Error(ErrorKind::InvalidArgument, "sigma must be positive");
  if (steps < 1) throw Error(ErrorKind::InvalidArgument, "steps must be at least 1");
  RdpAccountant accountant;
  accountant.record_gaussian(sigma, sensitivity, steps);
  return accountant.epsilon(delta);
}

double rdp_calibrate(const PrivacyBudget& budget, double sensitivity, std::int64_t steps,
                     const CalibrationOptions& options) {
  if (budget.is_infinite()) return 0.0;
  if (!(budget.epsilon > 0.0)) throw Error(ErrorKind::InvalidArgument, "epsilon must be positive");
  auto eps_at = [&](double sigma) { return rdp_epsilon_of_gaussian(sigma, sensitivity, steps, budget.delta); };

  if (eps_at(options.sigma_cap) > budget.epsilon) {
    throw Error(ErrorKind::BudgetTooSmall, "no sigma below " + std::to_string(options.sigma_cap) +
                                               " reaches epsilon " + std::to_string(budget.epsilon));
  }
  // Bracket: eps_at(hi) <= target < eps_at(lo).
  double hi = options.sigma_cap;
  double lo = hi;
  while (lo > 1e-12 && eps_at(lo) <= budget.epsilon) lo *= 0.5;
  if (eps_at(lo) <= budget.epsilon) return lo;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (eps_at(mid) <= budget.epsilon) {
      hi = mid;
    } else {
      lo = mid;
    }
    if (eps_at(hi) >= budget.epsilon * (1.0 - options.relative_slack) && (hi - lo) <= 1e-12 * hi) break;
    if ((hi - lo) <= 1e-15 * hi) break;
  }
  return hi;
}

double clip_to_norm(Eigen::VectorXd& g, double clip_norm) {
  const double norm = g.norm();
  if (norm <= clip_norm) return 1.0;
  const double scale = clip_norm / norm;
  g *= scale;
  return scale;
}

Eigen::VectorXd mean_gradient(std::span<const Eigen::VectorXd> grads) {
  if (grads.empty()) throw Error(ErrorKind::InvalidArgument, "no gradients to average");
  Eigen::VectorXd sum = grads[0];
  for (std::size_t i = 1; i < grads.size(); ++i) sum += grads[i];
  return sum / static_cast<double>(grads.size());
}

Eigen::VectorXd dp_optimizer_step(std::span<const Eigen::VectorXd> per_example_grads,
                                  const DpSgdConfig& config, Rng& rng, RdpAccountant* accountant) {
  if (per_example_grads.empty()) throw Error(ErrorKind::InvalidArgument, "no gradients to privatize");
  if (!(config.clip_norm > 0.0)) throw Error(ErrorKind::InvalidArgument, "clip_norm must be positive");
  if (!(config.sigma >= 0.0)) throw Error(ErrorKind::InvalidArgument, "sigma must be non-negative");

  std::vector<Eigen::VectorXd> clipped(per_example_grads.begin(), per_example_grads.end());
  for (std::size_t i = 0; i < clipped.size(); ++i) {
    if (!clipped[i].allFinite()) {
      throw Error(ErrorKind::NonFiniteGradient, "gradient of example " + std::to_string(i) + " is not finite");
    }
    clip_to_norm(clipped[i], config.clip_norm);
  }
  Eigen::VectorXd sum = clipped[0];
  for (std::size_t i = 1; i < clipped.size(); ++i) sum += clipped[i];
  if (config.sigma > 0.0) {
    const double std_dev = config.sigma * config.clip_norm;
    for (Eigen::Index j = 0; j < sum.size(); ++j) sum(j) += gaussian_sample(std_dev, rng);
  }
  if (accountant != nullptr) accountant->record_gaussian(config.sigma, 1.0);
  return sum / static_cast<double>(clipped.size());
}

}  // namespace pril
