#pragma once

#include <optional>

#include <Eigen/Dense>

#include "thp/conic/cone_program.h"

namespace thp::conic {

enum class SolveStatus {
  kOptimal,
  kInfeasible,
  kUnbounded,
  kNumericalFailure,
};

const char* to_string(SolveStatus status);

struct SolverOptions {
  /// Relative primal/dual residual and relative gap tolerance.
  double tol = 1e-7;
  int max_iterations = 100;
  /// Looser tolerance for infeasibility and unboundedness certificates,
  /// applied only when the method stalls or runs out of iterations.
  double inaccurate_tol = 1e-4;
};

struct SolveOutcome {
  SolveStatus status = SolveStatus::kNumericalFailure;
  /// Present iff status == kOptimal.
  std::optional<Eigen::VectorXd> primal;
  double objective = 0.0;
  int iterations = 0;
};

/// Primal-dual interior-point method on the homogeneous self-dual embedding
/// with Nesterov-Todd scaling and Mehrotra correction.
///
/// Deterministic: equal programs and options give bitwise-equal outcomes.
SolveOutcome solve(const ConeProgram& program, const SolverOptions& options = {});

}  // namespace thp::conic
