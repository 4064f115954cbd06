#pragma once

#include <optional>
#include <vector>

#include "thp/conic/affine.h"
#include "thp/conic/solver.h"
#include "thp/design.h"
#include "thp/system.h"

namespace thp {

struct NbeDesignParams {
  /// Uncertainty radius delta_k per user.
  std::vector<double> delta;
  /// Total power budget (SMSE and balancing designs).
  std::optional<double> power_limit;
  /// Per-antenna budgets P_1..P_Nt (per-antenna SMSE design). Zero entries
  /// switch the antenna off.
  std::vector<double> per_antenna_limits;
  /// MSE targets eta_k (constrained design).
  std::vector<double> mse_targets;
  double threshold = 1e-3;
  int max_iterations = 50;
  conic::SolverOptions solver;

  void validate(const SystemConfig& config) const;
};

/// Solver values of one subproblem. Entries that a subproblem does not use
/// stay empty or zero.
struct SubproblemSlacks {
  std::vector<double> t;     // per-user worst-case MSE bounds
  double r = 0.0;            // shared bound or power norm
  std::vector<double> s;     // receive-side bounds
  std::vector<double> beta;  // B/G multipliers
  std::vector<double> mu;    // C multipliers
};

/// Lifted robust bound
///   ||w + Gamma e||^2 <= bound  for all ||e|| <= delta
/// as [[bound - m, w^H, 0], [w, I, -delta Gamma], [0, -delta Gamma^H, m I]]
/// with m = x[multiplier]. For delta = 0 the plain Schur form [[bound, w^H],
/// [w, I]] is returned and `multiplier` is ignored.
conic::AffineMatrix robust_residual_lmi(const conic::AffineMatrix& w,
                                        const conic::AffineMatrix& gamma,
                                        const conic::AffineMatrix& bound,
                                        double delta, int multiplier);

/// B/G-side block of user k: w = vec(C_k H_k B - Gbar_k) with D_k = B^T kron C_k,
/// stacked with sigma_n vec(C_k) when noise_std > 0. `b` and `gbar` are
/// affine in the decision variables, C_k is fixed.
conic::AffineMatrix build_Mk(const conic::AffineMatrix& b,
                             const conic::AffineMatrix& gbar,
                             const Eigen::MatrixXcd& c, const Eigen::MatrixXcd& h_hat,
                             double delta, double noise_std,
                             const conic::AffineMatrix& bound, int multiplier);

/// C-side block of user k with B and Gbar_k fixed and C_k affine. Gamma is
/// compressed to B^T V kron C_k, V spanning the row space of B^T, which leaves
/// the worst case unchanged.
conic::AffineMatrix build_Nk(const Eigen::MatrixXcd& b, const Eigen::MatrixXcd& gbar,
                             const conic::AffineMatrix& c, const Eigen::MatrixXcd& h_hat,
                             double delta, double noise_std,
                             const conic::AffineMatrix& bound, int multiplier);

/// How the per-user worst-case MSEs enter the B/G subproblem.
enum class BoundKind {
  kPerUser,  // t_k each, minimize sum t_k
  kFixed,    // eta_k given
  kShared,   // one r for all users, minimized
};

enum class PowerKind {
  kTotal,       // ||b|| <= sqrt(P_max)
  kPerAntenna,  // ||row_i B|| <= sqrt(P_i)
  kObjective,   // minimize r with ||b|| <= r
};

struct BgProblem {
  BoundKind bound = BoundKind::kPerUser;
  PowerKind power = PowerKind::kTotal;
  /// Adds sigma_n vec(C_k) to the residual.
  bool include_noise = false;
};

struct SubproblemResult {
  conic::SolveStatus status = conic::SolveStatus::kNumericalFailure;
  /// Input transceiver with the optimized blocks replaced.
  Transceiver tx;
  SubproblemSlacks slacks;
};

/// Optimizes B and G for fixed C.
SubproblemResult solve_bg_subproblem(const Transceiver& tx, const Channel& h_hat,
                                     double noise_var, const NbeDesignParams& params,
                                     const BgProblem& problem);

/// Minimizes each user's certified worst-case MSE (noise included) over C_k for
/// fixed B and G. The users decouple, so one program is solved per user;
/// the status is the first non-optimal one, if any.
SubproblemResult solve_c_subproblem(const Transceiver& tx, const Channel& h_hat,
                                    double noise_var, const NbeDesignParams& params);

/// Min-max SMSE under the total power budget. The trace objective is the exact
/// worst-case SMSE; `certified` holds sum t_k + sigma_n^2 sum ||C_k||^2 after
/// each B/G step.
DesignResult nbe_smse_design(const Channel& h_hat, const SystemConfig& config,
                             const NbeDesignParams& params);

/// Same with per-antenna budgets in place of the total budget.
DesignResult nbe_smse_design_per_antenna(const Channel& h_hat,
                                         const SystemConfig& config,
                                         const NbeDesignParams& params);

struct ConstrainedDesignResult {
  Transceiver tx;
  DesignTrace trace;
  bool feasible = false;
};

/// Minimum transmit power with worst-case user MSE <= eta_k. The trace
/// objective is ||B||_F^2. Infeasible only when the first B/G solve, made with
/// the identity-pattern C, returns an infeasibility certificate.
ConstrainedDesignResult mse_constrained_design(const Channel& h_hat,
                                               const SystemConfig& config,
                                               const NbeDesignParams& params);

/// Status of the first B/G solve of mse_constrained_design alone; kInfeasible
/// exactly when that design reports the targets infeasible.
conic::SolveStatus mse_constrained_first_status(const Channel& h_hat,
                                                const SystemConfig& config,
                                                const NbeDesignParams& params);

/// Minimizes the largest worst-case user MSE under the total power budget.
/// The trace objective is that largest MSE.
DesignResult mse_balancing_design(const Channel& h_hat, const SystemConfig& config,
                                  const NbeDesignParams& params);

struct FeasibilityReport {
  std::vector<bool> feasible;

  void add(bool ok) { feasible.push_back(ok); }
  /// Fraction of infeasible entries; 0 for an empty report.
  double infeasible_fraction() const;
};

}  // namespace thp
