#include "thp/design.h"

namespace thp {

const char* to_string(Termination t) {
  switch (t) {
    case Termination::kThreshold:
      return "threshold";
    case Termination::kMaxIterations:
      return "max_iterations";
    case Termination::kSolverFailure:
      return "solver_failure";
    case Termination::kInfeasible:
      return "infeasible";
  }
  return "unknown";
}

}  // namespace thp
