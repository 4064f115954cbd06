#pragma once

#include <string>
#include <vector>

#include "thp/conic/solver.h"
#include "thp/system.h"

namespace thp {

enum class Termination {
  kThreshold,      // |objective change| below threshold
  kMaxIterations,
  kSolverFailure,  // a subproblem returned a non-optimal status
  kInfeasible,     // first subproblem infeasible at the first iteration
};

const char* to_string(Termination t);

/// Per-iteration record of an alternating design run. Entry 0 of
/// `objective` is the starting point and entry n the state after iteration n,
/// except for the MSE-constrained design, which has no feasible start: there
/// entry 0 follows the first B/G solve of iteration 1.
struct DesignTrace {
  /// Exact objective of the design (averaged SMSE, worst-case SMSE, transmit
  /// power or worst-case maximum user MSE).
  std::vector<double> objective;
  /// Solver-certified bound matching `objective` where one exists.
  std::vector<double> certified;
  /// Subproblem statuses in call order.
  std::vector<conic::SolveStatus> statuses;
  /// Subproblem results that were rejected because they did not improve the
  /// exact objective.
  int rejected_steps = 0;
  Termination termination = Termination::kMaxIterations;
  /// Completed iterations.
  int iterations = 0;

  double final_objective() const { return objective.back(); }
};

struct DesignResult {
  Transceiver tx;
  DesignTrace trace;
};

}  // namespace thp
