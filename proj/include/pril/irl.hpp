#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "pril/error.hpp"
#include "pril/gridworld.hpp"
#include "pril/policy.hpp"
#include "pril/simplex.hpp"

namespace pril {

struct IrlConfig {
  double r_max = 1.0;
  double l1_penalty = 0.1;
  double gamma = 0.99;
};

enum class IrlStatus { Optimal, Infeasible, IterationLimit };

template <typename Scalar>
struct ReconstructedReward {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> reward;
  Scalar lp_objective = Scalar(0);
  IrlStatus status = IrlStatus::Optimal;
  int lp_iterations = 0;
  int margin_rows = 0;
};

/// (I - gamma P_pi)^{-1} for a deterministic policy's transition matrix.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> occupancy_matrix(
    const std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>& transitions,
    const std::vector<int>& actions, Scalar gamma) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (!(gamma >= Scalar(0) && gamma < Scalar(1))) throw Error(ErrorKind::InvalidArgument, "gamma must lie in [0, 1)");
  const int n = static_cast<int>(actions.size());
  Matrix p_pi(n, n);
  for (int s = 0; s < n; ++s) p_pi.row(s) = transitions[static_cast<std::size_t>(actions[static_cast<std::size_t>(s)])].row(s);
  Eigen::PartialPivLU<Matrix> lu(Matrix::Identity(n, n) - gamma * p_pi);
  Matrix inv = lu.inverse();
  if (!inv.allFinite()) throw Error(ErrorKind::SingularSystem, "occupancy system is singular");
  return inv;
}

/// Rows (P_{a*}(s) - P_a(s)) (I - gamma P_{a*})^{-1} for every state and
/// every non-chosen action whose transition row differs from the chosen
/// one. Row r belongs to state `owner[r]`.
template <typename Scalar>
struct MarginRows {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> rows;
  std::vector<int> owner;
};

template <typename Scalar>
MarginRows<Scalar> margin_rows(const std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>& transitions,
                               const std::vector<int>& actions, Scalar gamma) {
  const int n = static_cast<int>(actions.size());
  const auto occupancy = occupancy_matrix(transitions, actions, gamma);
  std::vector<Eigen::Matrix<Scalar, 1, Eigen::Dynamic>> rows;
  MarginRows<Scalar> out;
  for (int s = 0; s < n; ++s) {
    const int chosen = actions[static_cast<std::size_t>(s)];
    for (int a = 0; a < static_cast<int>(transitions.size()); ++a) {
      if (a == chosen) continue;
      const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> diff =
          transitions[static_cast<std::size_t>(chosen)].row(s) - transitions[static_cast<std::size_t>(a)].row(s);
      // Identical transition rows give an identically zero margin.
      if (diff.cwiseAbs().maxCoeff() <= Scalar(1e-15)) continue;
      rows.push_back(diff * occupancy);
      out.owner.push_back(s);
    }
  }
  out.rows.resize(static_cast<Eigen::Index>(rows.size()), n);
  for (std::size_t r = 0; r < rows.size(); ++r) out.rows.row(static_cast<Eigen::Index>(r)) = rows[r];
  return out;
}

/// sum_s min_{a != a*(s)} margin - penalty * |R|_1; states without margin
/// rows contribute nothing to the first sum.
template <typename Scalar, typename Derived>
Scalar irl_objective(const MarginRows<Scalar>& margins, const Eigen::MatrixBase<Derived>& reward, Scalar penalty) {
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> values = margins.rows * reward;
  std::vector<Scalar> best(static_cast<std::size_t>(reward.size()), std::numeric_limits<Scalar>::infinity());
  for (std::size_t r = 0; r < margins.owner.size(); ++r) {
    auto& b = best[static_cast<std::size_t>(margins.owner[r])];
    b = std::min(b, values(static_cast<Eigen::Index>(r)));
  }
  Scalar total = Scalar(0);
  for (Scalar b : best) {
    if (std::isfinite(b)) total += b;
  }
  return total - penalty * reward.template lpNorm<1>();
}

/// Finite-state linear-programming inverse RL: the reward under which the
/// given deterministic policy is optimal by the largest summed margin,
/// minus an L1 penalty, inside the box |R| <= r_max.
///
/// LP variables are [R+ (n), R- (n), t (one per state with margin rows)]
/// with R = R+ - R- and 0 <= R+-, R- <= r_max. t_s <= margin rows of s
/// together with t_s >= 0 encode both the optimality constraints and the
/// min terms.
template <typename Scalar>
ReconstructedReward<Scalar> reconstruct_reward(
    const std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>& transitions,
    const std::vector<int>& actions, const IrlConfig& config, const SimplexOptions& options = {}) {
  if (!(config.r_max > 0.0) || !std::isfinite(config.r_max)) throw Error(ErrorKind::InvalidArgument, "r_max must be finite and positive");
  if (!(config.l1_penalty >= 0.0) || !std::isfinite(config.l1_penalty)) {
    throw Error(ErrorKind::InvalidArgument, "l1 penalty must be finite and non-negative");
  }
  const int n = static_cast<int>(actions.size());
  const Scalar gamma = static_cast<Scalar>(config.gamma);
  const Scalar penalty = static_cast<Scalar>(config.l1_penalty);
  const MarginRows<Scalar> margins = margin_rows(transitions, actions, gamma);

  std::vector<int> slot(static_cast<std::size_t>(n), -1);
  int n_t = 0;
  for (int s : margins.owner) {
    if (slot[static_cast<std::size_t>(s)] < 0) slot[static_cast<std::size_t>(s)] = n_t++;
  }

  LinearProgram<Scalar> lp(2 * n + n_t);
  lp.objective.head(2 * n).setConstant(-penalty);
  lp.objective.tail(n_t).setConstant(Scalar(1));
  Eigen::Matrix<Scalar, 1, Eigen::Dynamic> row(2 * n + n_t);
  for (Eigen::Index r = 0; r < margins.rows.rows(); ++r) {
    row.setZero();
    row.head(n) = -margins.rows.row(r);
    row.segment(n, n) = margins.rows.row(r);
    row(2 * n + slot[static_cast<std::size_t>(margins.owner[static_cast<std::size_t>(r)])]) = Scalar(1);
    lp.add_constraint(row, ConstraintSense::LessEqual, Scalar(0));
  }
  lp.upper.head(2 * n).setConstant(static_cast<Scalar>(config.r_max));

  const LpSolution<Scalar> solution = solve_lp(lp, options);
  ReconstructedReward<Scalar> out;
  out.lp_iterations = solution.iterations;
  out.margin_rows = static_cast<int>(margins.rows.rows());
  switch (solution.status) {
    case LpStatus::Optimal: out.status = IrlStatus::Optimal; break;
    case LpStatus::IterationLimit: out.status = IrlStatus::IterationLimit; break;
    // Every variable is bounded, so an unbounded report is an assembly bug.
    case LpStatus::Unbounded:
    case LpStatus::Infeasible: out.status = IrlStatus::Infeasible; break;
  }
  if (out.status != IrlStatus::Optimal) {
    out.reward = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(n);
    return out;
  }
  out.reward = solution.x.head(n) - solution.x.segment(n, n);
  out.lp_objective = solution.objective;
  return out;
}

/// Attack on a grid MDP: the adversary knows the dynamics and sees the
/// policy. Stochastic policies are determinized by greedy argmax.
template <typename Scalar>
ReconstructedReward<Scalar> reconstruct_reward(const TabularMdp<Scalar>& mdp, const Policy& policy,
                                               const IrlConfig& config, const SimplexOptions& options = {}) {
  if (policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions()) {
    throw Error(ErrorKind::InvalidArgument, "policy shape does not match the MDP");
  }
  return reconstruct_reward(mdp.continuation(), policy.greedy(), config, options);
}

}  // namespace pril
