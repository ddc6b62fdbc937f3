#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "pril/error.hpp"

namespace pril {

enum class ConstraintSense { LessEqual, GreaterEqual, Equal };

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

/// maximize c'x subject to A x (<=|>=|=) b and 0 <= x <= upper.
template <typename Scalar>
struct LinearProgram {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

  struct Constraint {
    RowVector coefficients;
    ConstraintSense sense;
    Scalar rhs;
  };

  Vector objective;
  /// Per-variable upper bounds, +infinity when unbounded above.
  Vector upper;
  std::vector<Constraint> constraints;

  explicit LinearProgram(int n_variables = 0)
      : objective(Vector::Zero(n_variables)),
        upper(Vector::Constant(n_variables, std::numeric_limits<Scalar>::infinity())) {}

  int n_variables() const { return static_cast<int>(objective.size()); }
  int n_constraints() const { return static_cast<int>(constraints.size()); }

  template <typename Derived>
  void add_constraint(const Eigen::MatrixBase<Derived>& row, ConstraintSense sense, Scalar b) {
    if (row.size() != n_variables()) throw Error(ErrorKind::InvalidArgument, "constraint row has the wrong width");
    constraints.push_back({RowVector(row.reshaped().transpose()), sense, b});
  }
};

template <typename Scalar>
struct LpSolution {
  LpStatus status = LpStatus::IterationLimit;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x;
  Scalar objective = Scalar(0);
  int iterations = 0;
};

struct SimplexOptions {
  int max_iterations = 200000;
  /// Optimality and feasibility tolerance on row-scaled data.
  double tolerance = 1e-9;
  /// Smallest pivot magnitude the ratio test accepts.
  double pivot_tolerance = 1e-7;
  /// Consecutive degenerate pivots before switching to Bland's rule.
  int degenerate_switch = 500;
  /// Pivots between rebuilds of the tableau from the original data.
  int refactor_interval = 100;
};

namespace detail {

/// Bounded-variable primal simplex on a dense tableau T = B^{-1} A.
/// Nonbasic variables rest at zero or at their upper bound.
template <typename Scalar>
class BoundedTableau {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

  Matrix a;  // original constraint matrix, slack and artificial columns included
  Vector b;
  Vector upper;
  std::vector<bool> allowed;

  Matrix t;
  Vector beta;  // basic variable values
  RowVector d;  // reduced costs
  RowVector c;
  std::vector<int> basis;
  std::vector<int> row_of;  // -1 when nonbasic
  std::vector<bool> at_upper;

  int rows() const { return static_cast<int>(a.rows()); }
  int cols() const { return static_cast<int>(a.cols()); }

  Scalar value(int j) const {
    const int r = row_of[static_cast<std::size_t>(j)];
    if (r >= 0) return beta(r);
    return at_upper[static_cast<std::size_t>(j)] ? upper(j) : Scalar(0);
  }

  void set_objective(const RowVector& objective) {
    c = objective;
    refresh_costs();
  }

  void refresh_costs() {
    RowVector cb(rows());
    for (int i = 0; i < rows(); ++i) cb(i) = c(basis[static_cast<std::size_t>(i)]);
    d = c - cb * t;
    for (int i = 0; i < rows(); ++i) d(basis[static_cast<std::size_t>(i)]) = Scalar(0);
  }

  /// Recomputes T, the basic values and the reduced costs from scratch.
  void refactor() {
    Matrix bmat(rows(), rows());
    for (int i = 0; i < rows(); ++i) bmat.col(i) = a.col(basis[static_cast<std::size_t>(i)]);
    Eigen::PartialPivLU<Matrix> lu(bmat);
    t = lu.solve(a);
    Vector rhs = b;
    for (int j = 0; j < cols(); ++j) {
      if (row_of[static_cast<std::size_t>(j)] < 0 && at_upper[static_cast<std::size_t>(j)]) rhs -= upper(j) * a.col(j);
    }
    beta = lu.solve(rhs);
    clamp_basics();
    refresh_costs();
  }

  void clamp_basics() {
    for (int i = 0; i < rows(); ++i) beta(i) = std::clamp(beta(i), Scalar(0), upper(basis[static_cast<std::size_t>(i)]));
  }

  void pivot(int row, int col) {
    t.row(row) /= t(row, col);
    for (int i = 0; i < rows(); ++i) {
      if (i == row) continue;
      const Scalar f = t(i, col);
      if (f != Scalar(0)) t.row(i) -= f * t.row(row);
    }
    const Scalar f = d(col);
    if (f != Scalar(0)) d -= f * t.row(row);
    d(col) = Scalar(0);
    row_of[static_cast<std::size_t>(basis[static_cast<std::size_t>(row)])] = -1;
    basis[static_cast<std::size_t>(row)] = col;
    row_of[static_cast<std::size_t>(col)] = row;
    at_upper[static_cast<std::size_t>(col)] = false;
  }

  LpStatus optimize(const SimplexOptions& options, int& iterations) {
    const Scalar tol = static_cast<Scalar>(options.tolerance);
    const Scalar piv_tol = static_cast<Scalar>(options.pivot_tolerance);
    const Scalar inf = std::numeric_limits<Scalar>::infinity();
    int degenerate = 0;
    int since_refactor = 0;
    while (true) {
      if (iterations >= options.max_iterations) return LpStatus::IterationLimit;
      if (since_refactor >= options.refactor_interval) {
        refactor();
        since_refactor = 0;
      }
      const bool bland = degenerate >= options.degenerate_switch;

      int enter = -1;
      Scalar best = Scalar(0);
      for (int j = 0; j < cols(); ++j) {
        const auto ju = static_cast<std::size_t>(j);
        if (!allowed[ju] || row_of[ju] >= 0) continue;
        const Scalar gain = at_upper[ju] ? -d(j) : d(j);
        if (gain <= tol) continue;
        if (bland) {
          enter = j;
          break;
        }
        if (gain > best) {
          best = gain;
          enter = j;
        }
      }
      if (enter < 0) return LpStatus::Optimal;
      const Scalar dir = at_upper[static_cast<std::size_t>(enter)] ? Scalar(-1) : Scalar(1);

      // Harris ratio test: bound the step with relaxed limits, then take the
      // largest pivot among the rows that block within that bound.
      Scalar bound = upper(enter);
      for (int i = 0; i < rows(); ++i) {
        const Scalar alpha = dir * t(i, enter);
        const Scalar ub = upper(basis[static_cast<std::size_t>(i)]);
        if (alpha > piv_tol) {
          bound = std::min(bound, (beta(i) + tol) / alpha);
        } else if (alpha < -piv_tol && ub < inf) {
          bound = std::min(bound, (ub - beta(i) + tol) / -alpha);
        }
      }
      int leave = -1;
      bool leave_to_upper = false;
      Scalar theta = Scalar(0);
      Scalar largest = Scalar(0);
      for (int i = 0; i < rows(); ++i) {
        const Scalar alpha = dir * t(i, enter);
        const Scalar ub = upper(basis[static_cast<std::size_t>(i)]);
        Scalar ratio;
        bool to_upper = false;
        if (alpha > piv_tol) {
          ratio = beta(i) / alpha;
        } else if (alpha < -piv_tol && ub < inf) {
          ratio = (ub - beta(i)) / -alpha;
          to_upper = true;
        } else {
          continue;
        }
        if (ratio <= bound && std::abs(alpha) > largest) {
          largest = std::abs(alpha);
          leave = i;
          leave_to_upper = to_upper;
          theta = std::max(ratio, Scalar(0));
        }
      }

      if (leave < 0 && !(upper(enter) < inf)) {
        // Accumulated error can hide a blocking row; decide on fresh data.
        if (since_refactor > 0) {
          refactor();
          since_refactor = 0;
          continue;
        }
        return LpStatus::Unbounded;
      }

      ++iterations;
      ++since_refactor;
      if (leave < 0 || upper(enter) <= theta) {
        // The entering variable hits its own bound first.
        beta -= (dir * upper(enter)) * t.col(enter);
        at_upper[static_cast<std::size_t>(enter)] = !at_upper[static_cast<std::size_t>(enter)];
        clamp_basics();
        degenerate = 0;
        continue;
      }

      const Scalar start = at_upper[static_cast<std::size_t>(enter)] ? upper(enter) : Scalar(0);
      const int old = basis[static_cast<std::size_t>(leave)];
      beta -= (dir * theta) * t.col(enter);
      pivot(leave, enter);
      beta(leave) = start + dir * theta;
      at_upper[static_cast<std::size_t>(old)] = leave_to_upper;
      clamp_basics();
      degenerate = theta <= tol ? degenerate + 1 : 0;
    }
  }
};

}  // namespace detail

/// Dense two-phase bounded-variable primal simplex. Rows are scaled to unit
/// max-norm; phase one minimizes the sum of artificial variables.
template <typename Scalar>
LpSolution<Scalar> solve_lp(const LinearProgram<Scalar>& lp, const SimplexOptions& options = {}) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
  const int n = lp.n_variables();
  const int m = lp.n_constraints();
  const Scalar tol = static_cast<Scalar>(options.tolerance);
  const Scalar inf = std::numeric_limits<Scalar>::infinity();
  if (lp.upper.size() != n) throw Error(ErrorKind::InvalidArgument, "upper bound vector has the wrong size");
  for (int j = 0; j < n; ++j) {
    if (!(lp.upper(j) >= Scalar(0))) throw Error(ErrorKind::InvalidArgument, "upper bounds must be non-negative");
  }

  // Column layout: structural | slack and surplus | artificial.
  std::vector<ConstraintSense> senses(static_cast<std::size_t>(m));
  std::vector<Scalar> scale(static_cast<std::size_t>(m), Scalar(1));
  int n_slack = 0;
  int n_artificial = 0;
  for (int i = 0; i < m; ++i) {
    const auto& con = lp.constraints[static_cast<std::size_t>(i)];
    ConstraintSense sense = con.sense;
    const Scalar norm = n > 0 ? con.coefficients.cwiseAbs().maxCoeff() : Scalar(0);
    Scalar s = norm > Scalar(0) ? Scalar(1) / norm : Scalar(1);
    if (con.rhs < Scalar(0)) {
      s = -s;
      if (sense == ConstraintSense::LessEqual) {
        sense = ConstraintSense::GreaterEqual;
      } else if (sense == ConstraintSense::GreaterEqual) {
        sense = ConstraintSense::LessEqual;
      }
    }
    senses[static_cast<std::size_t>(i)] = sense;
    scale[static_cast<std::size_t>(i)] = s;
    if (sense != ConstraintSense::Equal) ++n_slack;
    if (sense != ConstraintSense::LessEqual) ++n_artificial;
  }
  const int total = n + n_slack + n_artificial;

  detail::BoundedTableau<Scalar> tab;
  tab.a = Matrix::Zero(m, total);
  tab.b = Vector::Zero(m);
  tab.upper = Vector::Constant(total, inf);
  tab.upper.head(n) = lp.upper;
  tab.allowed.assign(static_cast<std::size_t>(total), true);
  tab.basis.assign(static_cast<std::size_t>(m), -1);
  tab.row_of.assign(static_cast<std::size_t>(total), -1);
  tab.at_upper.assign(static_cast<std::size_t>(total), false);
  int slack_col = n;
  int art_col = n + n_slack;
  for (int i = 0; i < m; ++i) {
    const auto& con = lp.constraints[static_cast<std::size_t>(i)];
    const Scalar s = scale[static_cast<std::size_t>(i)];
    tab.a.row(i).head(n) = s * con.coefficients;
    tab.b(i) = s * con.rhs;
    int basic = -1;
    switch (senses[static_cast<std::size_t>(i)]) {
      case ConstraintSense::LessEqual:
        tab.a(i, slack_col) = Scalar(1);
        basic = slack_col++;
        break;
      case ConstraintSense::GreaterEqual:
        tab.a(i, slack_col++) = Scalar(-1);
        tab.a(i, art_col) = Scalar(1);
        basic = art_col++;
        break;
      case ConstraintSense::Equal:
        tab.a(i, art_col) = Scalar(1);
        basic = art_col++;
        break;
    }
    tab.basis[static_cast<std::size_t>(i)] = basic;
    tab.row_of[static_cast<std::size_t>(basic)] = i;
  }
  tab.t = tab.a;
  tab.beta = tab.b;

  LpSolution<Scalar> solution;
  if (n_artificial > 0) {
    RowVector phase_one = RowVector::Zero(total);
    phase_one.tail(n_artificial).setConstant(Scalar(-1));
    tab.set_objective(phase_one);
    const LpStatus status = tab.optimize(options, solution.iterations);
    if (status == LpStatus::IterationLimit) {
      solution.status = status;
      return solution;
    }
    tab.refactor();
    Scalar infeasibility = Scalar(0);
    for (int j = n + n_slack; j < total; ++j) infeasibility += tab.value(j);
    if (infeasibility > tol * Scalar(10) * Scalar(std::max(1, m))) {
      solution.status = LpStatus::Infeasible;
      return solution;
    }
    // Drive zero-valued artificials out of the basis; rows where no pivot
    // exists are redundant and keep a pinned artificial.
    for (int i = 0; i < m; ++i) {
      if (tab.basis[static_cast<std::size_t>(i)] < n + n_slack) continue;
      int best = -1;
      for (int j = 0; j < n + n_slack; ++j) {
        if (tab.row_of[static_cast<std::size_t>(j)] >= 0) continue;
        if (std::abs(tab.t(i, j)) > static_cast<Scalar>(options.pivot_tolerance) &&
            (best < 0 || std::abs(tab.t(i, j)) > std::abs(tab.t(i, best)))) {
          best = j;
        }
      }
      if (best >= 0) {
        const Scalar v = tab.value(best);
        tab.pivot(i, best);
        tab.beta(i) = v;
      }
    }
    for (int j = n + n_slack; j < total; ++j) {
      tab.allowed[static_cast<std::size_t>(j)] = false;
      tab.upper(j) = Scalar(0);
    }
    tab.refactor();
  }

  RowVector phase_two = RowVector::Zero(total);
  phase_two.head(n) = lp.objective.transpose();
  tab.set_objective(phase_two);
  solution.status = tab.optimize(options, solution.iterations);
  if (solution.status == LpStatus::Optimal) {
    // Confirm optimality on a freshly rebuilt tableau.
    tab.refactor();
    solution.status = tab.optimize(options, solution.iterations);
  }

  solution.x.resize(n);
  for (int j = 0; j < n; ++j) solution.x(j) = std::clamp(tab.value(j), Scalar(0), lp.upper(j));
  solution.objective = lp.objective.dot(solution.x);
  return solution;
}

}  // namespace pril
