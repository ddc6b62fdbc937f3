#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <vector>

#include "pril/gridworld.hpp"
#include "pril/policy.hpp"
#include "pril/privacy.hpp"
#include "pril/random.hpp"

namespace pril {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
struct ValueIterationResult {
  VectorX<Scalar> values;
  Policy policy;
  int sweeps = 0;
  bool converged = false;
  /// Max-norm change of each sweep, in order.
  std::vector<Scalar> residuals;
};

/// Q(s, a) = R(s) + gamma * sum_s' P(s, a, s') V(s') for every state;
/// terminal rows carry no continuation.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> q_values(const TabularMdp<Scalar>& mdp,
                                                               const VectorX<Scalar>& values) {
  const int n = mdp.n_states();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> q(n, mdp.n_actions());
  for (int a = 0; a < mdp.n_actions(); ++a) {
    q.col(a) = mdp.reward + mdp.gamma * (mdp.transitions[static_cast<std::size_t>(a)] * values);
  }
  for (int s = 0; s < n; ++s) {
    if (mdp.is_terminal(s)) q.row(s).setConstant(mdp.reward(s));
  }
  return q;
}

/// One-hot greedy policy; ties (within a relative 1e-12) go to the lowest
/// action index, and terminal states pick action 0.
template <typename Scalar>
Policy greedy_policy(const TabularMdp<Scalar>& mdp, const VectorX<Scalar>& values) {
  const auto q = q_values(mdp, values);
  std::vector<int> actions(static_cast<std::size_t>(mdp.n_states()), 0);
  for (int s = 0; s < mdp.n_states(); ++s) {
    if (mdp.is_terminal(s)) continue;
    const Scalar best = q.row(s).maxCoeff();
    const Scalar tol = Scalar(1e-12) * (Scalar(1) + std::abs(best));
    for (int a = 0; a < mdp.n_actions(); ++a) {
      if (q(s, a) >= best - tol) {
        actions[static_cast<std::size_t>(s)] = a;
        break;
      }
    }
  }
  return Policy::from_actions(actions, mdp.n_actions());
}

/// Synchronous value iteration. With noise, every non-terminal state gets
/// an independent N(0, sigma) draw per sweep; terminal states stay at R(s).
/// Hitting max_iters is a normal stop, reported via `converged`.
template <typename Scalar>
ValueIterationResult<Scalar> value_iteration(const TabularMdp<Scalar>& mdp, Scalar conv_threshold, int max_iters,
                                             const std::optional<NoiseSpec>& noise, Rng& rng) {
  if (!(conv_threshold > Scalar(0))) throw Error(ErrorKind::InvalidArgument, "convergence threshold must be positive");
  if (max_iters < 1) throw Error(ErrorKind::InvalidArgument, "max_iters must be at least 1");
  const double sigma = noise ? noise->sigma : 0.0;
  if (!(sigma >= 0.0)) throw Error(ErrorKind::InvalidArgument, "noise sigma must be non-negative");

  const int n = mdp.n_states();
  ValueIterationResult<Scalar> result;
  VectorX<Scalar> v = VectorX<Scalar>::Zero(n);
  for (int s = 0; s < n; ++s) {
    if (mdp.is_terminal(s)) v(s) = mdp.reward(s);
  }
  VectorX<Scalar> next(n);
  VectorX<Scalar> best(n);
  for (int sweep = 0; sweep < max_iters; ++sweep) {
    best = mdp.transitions[0] * v;
    for (int a = 1; a < mdp.n_actions(); ++a) {
      best = best.cwiseMax(mdp.transitions[static_cast<std::size_t>(a)] * v);
    }
    next = mdp.reward + mdp.gamma * best;
    for (int s = 0; s < n; ++s) {
      if (mdp.is_terminal(s)) {
        next(s) = mdp.reward(s);
      } else {
        next(s) += static_cast<Scalar>(gaussian_sample(sigma, rng));
      }
    }
    const Scalar residual = (next - v).cwiseAbs().maxCoeff();
    v.swap(next);
    result.residuals.push_back(residual);
    result.sweeps = sweep + 1;
    if (residual < conv_threshold) {
      result.converged = true;
      break;
    }
  }
  result.values = v;
  result.policy = greedy_policy(mdp, v);
  return result;
}

/// P_pi(s, s') = sum_a pi(a|s) P(s, a, s'), terminal rows zeroed.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> policy_transition(const TabularMdp<Scalar>& mdp,
                                                                        const Policy& policy) {
  const int n = mdp.n_states();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> p = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(n, n);
  for (int s = 0; s < n; ++s) {
    if (mdp.is_terminal(s)) continue;
    for (int a = 0; a < mdp.n_actions(); ++a) {
      const Scalar w = static_cast<Scalar>(policy.probs(s, a));
      if (w != Scalar(0)) p.row(s) += w * mdp.transitions[static_cast<std::size_t>(a)].row(s);
    }
  }
  return p;
}

/// Exact policy value from the dense system (I - gamma P_pi) V = R.
template <typename Scalar>
VectorX<Scalar> policy_evaluation_exact(const TabularMdp<Scalar>& mdp, const Policy& policy) {
  if (!(mdp.gamma < Scalar(1))) throw Error(ErrorKind::InvalidArgument, "exact evaluation needs gamma < 1");
  if (policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions()) {
    throw Error(ErrorKind::InvalidArgument, "policy shape does not match the MDP");
  }
  const int n = mdp.n_states();
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Matrix system = Matrix::Identity(n, n) - mdp.gamma * policy_transition(mdp, policy);
  Eigen::FullPivLU<Matrix> lu(system);
  if (!lu.isInvertible()) throw Error(ErrorKind::SingularSystem, "policy evaluation system is singular");
  VectorX<Scalar> v = lu.solve(mdp.reward);
  if (!v.allFinite()) throw Error(ErrorKind::SingularSystem, "policy evaluation produced non-finite values");
  return v;
}

/// Mean discounted return of Monte-Carlo episodes from the start
/// distribution. Rewards are collected on occupying a state; an episode
/// stops after collecting the goal reward or after max_steps rewards.
template <typename Scalar>
double evaluate_return(const TabularMdp<Scalar>& mdp, const Policy& policy, int episodes, double gamma,
                       int max_steps, Rng& rng) {
  if (episodes < 1 || max_steps < 1) throw Error(ErrorKind::InvalidArgument, "episodes and max_steps must be positive");
  double total = 0.0;
  for (int e = 0; e < episodes; ++e) {
    int s = sample_categorical(mdp.start_dist, rng);
    double discount = 1.0;
    double ret = 0.0;
    for (int t = 0; t < max_steps; ++t) {
      ret += discount * static_cast<double>(mdp.reward(s));
      if (mdp.is_terminal(s)) break;
      const int a = sample_categorical(policy.probs.row(s), rng);
      s = sample_categorical(mdp.transitions[static_cast<std::size_t>(a)].row(s), rng);
      discount *= gamma;
    }
    total += ret;
  }
  return total / episodes;
}

/// Step cap used for evaluation and training episodes.
inline int default_max_steps(int n_states) { return 4 * n_states; }

}  // namespace pril
