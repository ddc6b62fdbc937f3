#pragma once

#include <Eigen/Dense>

#include <vector>

#include "pril/error.hpp"

namespace pril {

/// Per-state action distribution (rows sum to one).
struct Policy {
  Eigen::MatrixXd probs;

  int n_states() const { return static_cast<int>(probs.rows()); }
  int n_actions() const { return static_cast<int>(probs.cols()); }

  /// Argmax per state, ties to the lowest action index.
  int greedy_action(int s) const {
    int best = 0;
    for (int a = 1; a < n_actions(); ++a) {
      if (probs(s, a) > probs(s, best)) best = a;
    }
    return best;
  }

  std::vector<int> greedy() const {
    std::vector<int> out(static_cast<std::size_t>(n_states()));
    for (int s = 0; s < n_states(); ++s) out[static_cast<std::size_t>(s)] = greedy_action(s);
    return out;
  }

  Policy determinized() const { return from_actions(greedy(), n_actions()); }

  double max_row_error() const { return (probs.rowwise().sum().array() - 1.0).abs().maxCoeff(); }

  static Policy from_actions(const std::vector<int>& actions, int n_actions) {
    Policy p;
    p.probs = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(actions.size()), n_actions);
    for (std::size_t s = 0; s < actions.size(); ++s) {
      if (actions[s] < 0 || actions[s] >= n_actions) throw Error(ErrorKind::InvalidArgument, "action out of range");
      p.probs(static_cast<Eigen::Index>(s), actions[s]) = 1.0;
    }
    return p;
  }

  static Policy uniform(int n_states, int n_actions) {
    Policy p;
    p.probs = Eigen::MatrixXd::Constant(n_states, n_actions, 1.0 / n_actions);
    return p;
  }
};

/// Fraction of masked states on which the greedy actions coincide. An
/// empty mask means every state.
inline double policy_agreement(const Policy& a, const Policy& b, const std::vector<bool>& mask = {}) {
  if (a.n_states() != b.n_states() || a.n_actions() != b.n_actions()) {
    throw Error(ErrorKind::InvalidArgument, "policy shapes differ");
  }
  int considered = 0;
  int agree = 0;
  for (int s = 0; s < a.n_states(); ++s) {
    if (!mask.empty() && !mask[static_cast<std::size_t>(s)]) continue;
    ++considered;
    if (a.greedy_action(s) == b.greedy_action(s)) ++agree;
  }
  if (considered == 0) return 1.0;
  return static_cast<double>(agree) / considered;
}

}  // namespace pril
