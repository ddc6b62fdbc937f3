#include <doctest.h>

#include <cmath>
#include <vector>

#include "pril/privacy.hpp"
#include "pril/error.hpp"

using namespace pril;

TEST_CASE("published sigma table") {
  const std::vector<double> vi = {2080.08, 1886.69, 520.02, 83.20, 20.80, 5.20, 0.83, 0.21, 0.0};
  const std::vector<double> deep = {94229.0, 150.0, 22.75, 9.89, 5.38, 3.03, 1.55, 1.0, 0.0};
  for (std::size_t i = 0; i < kPublishedBudgets.size(); ++i) {
    CHECK(sigma_from_table(PolicyFamily::ValueIteration, kPublishedBudgets[i]) == vi[i]);
    CHECK(sigma_from_table(PolicyFamily::Dqn, kPublishedBudgets[i]) == deep[i]);
    CHECK(sigma_from_table(PolicyFamily::Ppo, kPublishedBudgets[i]) == deep[i]);
  }
  try {
    sigma_from_table(PolicyFamily::Dqn, 0.3);
    FAIL("unpublished budget accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnknownBudget);
  }
}

TEST_CASE("bellman sensitivity is n over n minus one") {
  CHECK(bellman_sensitivity(25) == doctest::Approx(25.0 / 24.0));
  CHECK(bellman_sensitivity(2) == 2.0);
  CHECK_THROWS_AS(bellman_sensitivity(1), Error);
  CHECK(family_sensitivity(PolicyFamily::ValueIteration) == 1.05);
}

TEST_CASE("gaussian samples have the requested moments") {
  Rng rng(42);
  const int n = 100000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = gaussian_sample(83.2, rng);
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  const double sd = std::sqrt((sq - n * mean * mean) / (n - 1));
  CHECK(std::abs(mean) < 4 * 83.2 / std::sqrt(n));
  CHECK(std::abs(sd - 83.2) / 83.2 < 0.02);
  CHECK(gaussian_sample(0.0, rng) == 0.0);
}

TEST_CASE("clip_to_norm scales only long vectors") {
  Eigen::VectorXd g(2);
  g << 3.0, 4.0;
  CHECK(clip_to_norm(g, 1.0) == doctest::Approx(0.2));
  CHECK(g.norm() == doctest::Approx(1.0));
  Eigen::VectorXd h(2);
  h << 0.3, 0.4;
  CHECK(clip_to_norm(h, 1.0) == 1.0);
  CHECK(h(0) == 0.3);
}

TEST_CASE("noiseless unclipped dp step equals the plain mean") {
  Rng rng(0);
  std::vector<Eigen::VectorXd> grads;
  for (int i = 0; i < 5; ++i) grads.push_back(Eigen::VectorXd::Random(7) * 10.0);
  const DpSgdConfig dp{kInfinity, 0.0, OptimizerKind::Sgd, Activation::Relu};
  CHECK(dp_optimizer_step(grads, dp, rng) == mean_gradient(grads));
}

TEST_CASE("dp step noise scale is sigma times clip over batch") {
  Rng rng(9);
  const std::vector<Eigen::VectorXd> grads(4, Eigen::VectorXd::Zero(20000));
  const DpSgdConfig dp{2.0, 3.0, OptimizerKind::Sgd, Activation::Relu};
  const Eigen::VectorXd g = dp_optimizer_step(grads, dp, rng);
  const double sd = std::sqrt(g.squaredNorm() / static_cast<double>(g.size()));
  CHECK(sd == doctest::Approx(3.0 * 2.0 / 4.0).epsilon(0.03));
}

TEST_CASE("dp step rejects bad configs and non-finite gradients") {
  Rng rng(0);
  std::vector<Eigen::VectorXd> grads(2, Eigen::VectorXd::Ones(3));
  CHECK_THROWS_AS(dp_optimizer_step(grads, DpSgdConfig{0.0, 1.0}, rng), Error);
  CHECK_THROWS_AS(dp_optimizer_step(grads, DpSgdConfig{1.0, -1.0}, rng), Error);
  grads[1](0) = std::nan("");
  CHECK_THROWS_AS(dp_optimizer_step(grads, DpSgdConfig{1.0, 1.0}, rng), Error);
}

TEST_CASE("rdp epsilon decreases with sigma and grows with steps") {
  const double a = rdp_epsilon_of_gaussian(1.0, 1.0, 100, 1e-5);
  const double b = rdp_epsilon_of_gaussian(2.0, 1.0, 100, 1e-5);
  const double c = rdp_epsilon_of_gaussian(1.0, 1.0, 1000, 1e-5);
  CHECK(b < a);
  CHECK(c > a);
}

TEST_CASE("rdp of a single gaussian matches the closed form") {
  RdpAccountant acc({2.0, 8.0});
  acc.record_gaussian(2.0, 1.0, 3);
  const auto rdp = acc.rdp();
  CHECK(rdp[0] == doctest::Approx(3 * 2.0 / 8.0));
  CHECK(rdp[1] == doctest::Approx(3 * 8.0 / 8.0));
  CHECK(acc.steps() == 3);
  const double expected = std::min(rdp[0] + std::log(1e5) / 1.0, rdp[1] + std::log(1e5) / 7.0);
  CHECK(acc.epsilon(1e-5) == doctest::Approx(expected));
}

TEST_CASE("zero-noise mechanisms have unbounded epsilon") {
  RdpAccountant acc;
  acc.record_gaussian(0.0, 1.0);
  CHECK(std::isinf(acc.epsilon(1e-5)));
}

TEST_CASE("rdp calibration hits the target budget") {
  const PrivacyBudget budget{1.0, 1e-5};
  const double sigma = rdp_calibrate(budget, 1.0, 500);
  CHECK(rdp_epsilon_of_gaussian(sigma, 1.0, 500, 1e-5) <= 1.0);
  CHECK(rdp_epsilon_of_gaussian(sigma, 1.0, 500, 1e-5) >= 0.99);
  CHECK(rdp_calibrate(PrivacyBudget{kInfinity, 1e-5}, 1.0, 500) == 0.0);
  CHECK_THROWS_AS(rdp_calibrate(PrivacyBudget{1e-9, 1e-5}, 1.0, 500), Error);
}
