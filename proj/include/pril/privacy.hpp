#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "pril/random.hpp"

namespace pril {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct PrivacyBudget {
  double epsilon = kInfinity;
  double delta = 1e-5;

  bool is_infinite() const { return std::isinf(epsilon); }
};

/// Gaussian noise parameters. sigma is the standard deviation itself,
/// not a multiplier of the sensitivity.
struct NoiseSpec {
  double sigma = 0.0;
  double sensitivity = 1.0;
};

enum class OptimizerKind { Sgd, Adam };
enum class Activation { Relu, Tanh };

struct DpSgdConfig {
  double clip_norm = 1.0;
  double sigma = 0.0;
  OptimizerKind optimizer = OptimizerKind::Sgd;
  Activation activation = Activation::Relu;
};

enum class PolicyFamily { ValueIteration, Dqn, Ppo };

/// The nine budgets with published noise levels, infinity last.
inline constexpr std::array<double, 9> kPublishedBudgets = {0.1, 0.105, 0.2, 0.5, 1.0,
                                                            2.0, 5.0, 10.0, kInfinity};

/// l2-sensitivity used for each policy family in the experiments.
double family_sensitivity(PolicyFamily family);

/// |S| / (|S| - 1): l2-sensitivity of the Bellman value update to an
/// adjacent reward function.
double bellman_sensitivity(int n_states);

/// Zero-mean Gaussian draw. sigma == 0 returns exactly 0 and leaves the
/// generator untouched, so noiseless runs share the stream of their
/// non-private twins.
inline double gaussian_sample(double sigma, Rng& rng) {
  if (sigma == 0.0) return 0.0;
  std::normal_distribution<double> normal(0.0, sigma);
  return normal(rng);
}

/// Published noise standard deviation for a (family, epsilon) pair.
/// Throws UnknownBudget for epsilons outside the table.
double sigma_from_table(PolicyFamily family, double epsilon);

/// Rényi-DP accounting for compositions of Gaussian mechanisms.
class RdpAccountant {
 public:
  RdpAccountant();
  explicit RdpAccountant(std::vector<double> orders);

  static const std::vector<double>& default_orders();

  /// Adds `count` applications of a Gaussian mechanism with the given
  /// noise std and l2-sensitivity.
  void record_gaussian(double sigma, double sensitivity, std::int64_t count = 1);

  std::int64_t steps() const { return steps_; }
  const std::vector<double>& orders() const { return orders_; }

  /// Accumulated RDP epsilon at each order. Homogeneous compositions are
  /// stored as counts, so k steps give exactly k times one step.
  std::vector<double> rdp() const;

  /// (epsilon, delta)-DP guarantee via min over orders of
  /// rdp(alpha) + ln(1/delta) / (alpha - 1).
  double epsilon(double delta) const;

 private:
  std::vector<double> orders_;
  std::map<std::pair<double, double>, std::int64_t> mechanisms_;
  std::int64_t steps_ = 0;
};

/// Per-order RDP of one Gaussian mechanism: alpha * sens^2 / (2 sigma^2).
inline double gaussian_rdp(double alpha, double sigma, double sensitivity) {
  return alpha * sensitivity * sensitivity / (2.0 * sigma * sigma);
}

double rdp_epsilon_of_gaussian(double sigma, double sensitivity, std::int64_t steps, double delta);

struct CalibrationOptions {
  double sigma_cap = 1e7;
  double relative_slack = 1e-3;
};

/// Smallest sigma (to the requested slack) whose composed guarantee fits
/// inside the budget. epsilon == inf returns 0.
double rdp_calibrate(const PrivacyBudget& budget, double sensitivity, std::int64_t steps,
                     const CalibrationOptions& options = {});

/// Clips every per-example (or per-micro-batch) gradient to clip_norm,
/// averages, and adds N(0, sigma * clip_norm / batch) per coordinate.
/// Records one mechanism application on the accountant when given.
Eigen::VectorXd dp_optimizer_step(std::span<const Eigen::VectorXd> per_example_grads,
                                  const DpSgdConfig& config, Rng& rng,
                                  RdpAccountant* accountant = nullptr);

/// Plain average of gradients, summed in index order. The DP step with
/// infinite clip and zero noise reduces to exactly this computation.
Eigen::VectorXd mean_gradient(std::span<const Eigen::VectorXd> grads);

/// Scales g in place so that |g|_2 <= clip_norm; returns the factor used.
double clip_to_norm(Eigen::VectorXd& g, double clip_norm);

}  // namespace pril
