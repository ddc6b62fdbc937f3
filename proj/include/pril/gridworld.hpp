#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "pril/error.hpp"

namespace pril {

enum class TileKind { Safe, Frozen, Hole, HighReward, Goal };

enum Action : int { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };
inline constexpr int kNumGridActions = 4;

/// Row-major tile grid. The start cell is stored separately and always
/// carries a Safe tile.
struct GridMap {
  int width = 0;
  int height = 0;
  std::vector<TileKind> tiles;
  int start_index = 0;

  int n_cells() const { return width * height; }
  int row_of(int index) const { return index / width; }
  int col_of(int index) const { return index % width; }
  TileKind tile(int index) const { return tiles[static_cast<std::size_t>(index)]; }
  int goal_index() const;

  bool operator==(const GridMap&) const = default;
};

/// Parses rows over {S,F,H,A,G,Y}; 'Y' marks the start and is Safe.
GridMap parse_map(std::string_view text);
std::string serialize_map(const GridMap& map);
GridMap load_map(const std::string& path);

struct RewardTable {
  double safe = 0.0;
  double frozen = -0.1;
  double hole = -1.0;
  double high_reward = 0.5;
  double goal = 1.0;

  double operator[](TileKind kind) const {
    switch (kind) {
      case TileKind::Safe: return safe;
      case TileKind::Frozen: return frozen;
      case TileKind::Hole: return hole;
      case TileKind::HighReward: return high_reward;
      case TileKind::Goal: return goal;
    }
    return 0.0;
  }

  bool all_finite() const {
    return std::isfinite(safe) && std::isfinite(frozen) && std::isfinite(hole) &&
           std::isfinite(high_reward) && std::isfinite(goal);
  }
};

/// Dense tabular MDP. transitions[a](s, s') is P(s, a, s').
template <typename Scalar>
struct TabularMdp {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  std::vector<Matrix> transitions;
  Vector reward;
  Scalar gamma = Scalar(0.99);
  Vector start_dist;
  std::vector<bool> terminal;

  int n_states() const { return static_cast<int>(reward.size()); }
  int n_actions() const { return static_cast<int>(transitions.size()); }
  Scalar p(int s, int a, int next) const { return transitions[static_cast<std::size_t>(a)](s, next); }
  bool is_terminal(int s) const { return terminal[static_cast<std::size_t>(s)]; }

  /// Transition matrix of action a with terminal rows zeroed: a terminal
  /// state's value is its own reward with no continuation.
  Matrix continuation(int a) const {
    Matrix out = transitions[static_cast<std::size_t>(a)];
    for (int s = 0; s < n_states(); ++s) {
      if (is_terminal(s)) out.row(s).setZero();
    }
    return out;
  }

  std::vector<Matrix> continuation() const {
    std::vector<Matrix> out;
    out.reserve(transitions.size());
    for (int a = 0; a < n_actions(); ++a) out.push_back(continuation(a));
    return out;
  }

  TabularMdp with_reward(Vector r) const {
    TabularMdp out = *this;
    out.reward = std::move(r);
    return out;
  }

  /// Largest deviation from row-stochasticity across all (s, a) rows and
  /// the start distribution.
  Scalar stochasticity_error() const {
    Scalar worst = std::abs(start_dist.sum() - Scalar(1));
    for (const auto& m : transitions) {
      if (m.minCoeff() < Scalar(0)) return std::numeric_limits<Scalar>::infinity();
      worst = std::max(worst, (m.rowwise().sum().array() - Scalar(1)).abs().maxCoeff());
    }
    return worst;
  }
};

using Mdp = TabularMdp<double>;

namespace detail {

/// Destination cell of a deterministic move; off-grid moves stay put.
inline int move_target(const GridMap& map, int index, int action) {
  int r = map.row_of(index);
  int c = map.col_of(index);
  switch (action) {
    case kUp: r -= 1; break;
    case kDown: r += 1; break;
    case kLeft: c -= 1; break;
    case kRight: c += 1; break;
    default: break;
  }
  if (r < 0 || r >= map.height || c < 0 || c >= map.width) return index;
  return r * map.width + c;
}

inline std::array<int, 2> perpendicular(int action) {
  if (action == kUp || action == kDown) return {kLeft, kRight};
  return {kUp, kDown};
}

}  // namespace detail

/// Slippery grid dynamics: 1-wind on the intended move, wind/2 on each
/// perpendicular move. Holes send the agent back to the start; the goal
/// is absorbing.
template <typename Scalar = double>
TabularMdp<Scalar> build_mdp(const GridMap& map, Scalar wind, const RewardTable& rewards, Scalar gamma) {
  if (!(wind >= Scalar(0) && wind < Scalar(1))) {
    throw Error(ErrorKind::InvalidArgument, "wind must lie in [0, 1)");
  }
  if (!(gamma >= Scalar(0) && gamma < Scalar(1))) {
    throw Error(ErrorKind::InvalidArgument, "gamma must lie in [0, 1)");
  }
  if (!rewards.all_finite()) throw Error(ErrorKind::InvalidArgument, "reward table has non-finite values");

  const int n = map.n_cells();
  TabularMdp<Scalar> mdp;
  mdp.gamma = gamma;
  mdp.transitions.assign(kNumGridActions, TabularMdp<Scalar>::Matrix::Zero(n, n));
  mdp.reward.resize(n);
  mdp.start_dist = TabularMdp<Scalar>::Vector::Zero(n);
  mdp.start_dist(map.start_index) = Scalar(1);
  mdp.terminal.assign(static_cast<std::size_t>(n), false);

  for (int s = 0; s < n; ++s) {
    const TileKind kind = map.tile(s);
    mdp.reward(s) = static_cast<Scalar>(rewards[kind]);
    for (int a = 0; a < kNumGridActions; ++a) {
      auto& P = mdp.transitions[static_cast<std::size_t>(a)];
      if (kind == TileKind::Goal) {
        P(s, s) = Scalar(1);
      } else if (kind == TileKind::Hole) {
        P(s, map.start_index) = Scalar(1);
      } else {
        P(s, detail::move_target(map, s, a)) += Scalar(1) - wind;
        for (int side : detail::perpendicular(a)) {
          P(s, detail::move_target(map, s, side)) += wind / Scalar(2);
        }
      }
    }
    if (kind == TileKind::Goal) mdp.terminal[static_cast<std::size_t>(s)] = true;
  }
  return mdp;
}

/// Adjacent reward vector: R + u * direction / |direction|, u in (0, 1].
template <typename Derived, typename Direction>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> neighboring_reward(
    const Eigen::MatrixBase<Derived>& reward, const Eigen::MatrixBase<Direction>& direction,
    typename Derived::Scalar u) {
  using Scalar = typename Derived::Scalar;
  const Scalar norm = direction.norm();
  if (norm == Scalar(0)) return reward;
  return reward + (u / norm) * direction;
}

template <typename Derived, typename Rng>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> neighboring_reward(
    const Eigen::MatrixBase<Derived>& reward, Rng& rng) {
  using Scalar = typename Derived::Scalar;
  std::normal_distribution<Scalar> normal(Scalar(0), Scalar(1));
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> direction(reward.size());
  for (Eigen::Index i = 0; i < direction.size(); ++i) direction(i) = normal(rng);
  // (0, 1]: 1 - U[0, 1)
  std::uniform_real_distribution<Scalar> uniform(Scalar(0), Scalar(1));
  const Scalar u = Scalar(1) - uniform(rng);
  return neighboring_reward(reward, direction, u);
}

}  // namespace pril
