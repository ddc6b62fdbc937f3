#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pril {

enum class ErrorKind {
  RaggedRows,
  BadChar,
  MissingGoal,
  MultipleGoals,
  MissingStart,
  MultipleStarts,
  EmptyMap,
  InvalidArgument,
  SingularSystem,
  TooFewStates,
  UnknownBudget,
  BudgetTooSmall,
  NonFiniteGradient,
  DivergedLoss,
  DegenerateBatch,
  ZeroVector,
  EmptyGroup,
  TooFewRuns,
  IoError,
  ConfigError,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::RaggedRows: return "ragged_rows";
    case ErrorKind::BadChar: return "bad_char";
    case ErrorKind::MissingGoal: return "missing_goal";
    case ErrorKind::MultipleGoals: return "multiple_goals";
    case ErrorKind::MissingStart: return "missing_start";
    case ErrorKind::MultipleStarts: return "multiple_starts";
    case ErrorKind::EmptyMap: return "empty_map";
    case ErrorKind::InvalidArgument: return "invalid_argument";
    case ErrorKind::SingularSystem: return "singular_system";
    case ErrorKind::TooFewStates: return "too_few_states";
    case ErrorKind::UnknownBudget: return "unknown_budget";
    case ErrorKind::BudgetTooSmall: return "budget_too_small";
    case ErrorKind::NonFiniteGradient: return "non_finite_gradient";
    case ErrorKind::DivergedLoss: return "diverged_loss";
    case ErrorKind::DegenerateBatch: return "degenerate_batch";
    case ErrorKind::ZeroVector: return "zero_vector";
    case ErrorKind::EmptyGroup: return "empty_group";
    case ErrorKind::TooFewRuns: return "too_few_runs";
    case ErrorKind::IoError: return "io_error";
    case ErrorKind::ConfigError: return "config_error";
  }
  return "unknown";
}

/// Exception carrying a machine-readable kind alongside the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Parse error that remembers the 1-based location of the offending character.
class BadCharError : public Error {
 public:
  BadCharError(int row, int col, char c)
      : Error(ErrorKind::BadChar, "unexpected character '" + std::string(1, c) + "' at row " +
                                      std::to_string(row) + ", col " + std::to_string(col)),
        row_(row),
        col_(col) {}

  int row() const noexcept { return row_; }
  int col() const noexcept { return col_; }

 private:
  int row_;
  int col_;
};

}  // namespace pril
