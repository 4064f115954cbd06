#include "thp/nbe_design.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "thp/conic/lmi.h"
#include "thp/oracle.h"

namespace thp {

using conic::AffineMatrix;
using conic::SolveStatus;

namespace {

// Slack on the MSE targets when accepting a B/G step of the constrained
// design; covers the interior-point feasibility tolerance.
constexpr double kTargetSlack = 1e-6;

AffineMatrix Constant(double v) {
  return AffineMatrix(Eigen::MatrixXcd::Constant(1, 1, v));
}

bool Positive(double v) { return v > 0.0 && std::isfinite(v); }

std::vector<double> WorstCase(const Transceiver& tx, const Channel& h_hat,
                              const NbeDesignParams& params, double noise_var) {
  return worst_case_smse(tx, h_hat, params.delta, noise_var).per_user;
}

double Sum(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0);
}

double Max(const std::vector<double>& v) {
  return *std::max_element(v.begin(), v.end());
}

// Gbar_k = [G_k1 .. G_k,k-1, I, 0] over the feedback variables.
AffineMatrix AugmentedFeedback(const Transceiver& tx, int k,
                               const std::vector<std::vector<conic::ComplexMatrixVar>>& g) {
  std::vector<AffineMatrix> row;
  for (int j = 0; j < k; ++j) row.push_back(g[k][j].expr);
  const int lk = tx.streams(k);
  row.emplace_back(Eigen::MatrixXcd::Identity(lk, lk));
  const int rest = tx.precoder().cols() - tx.stream_offset(k) - lk;
  if (rest > 0) row.emplace_back(lk, rest);
  return conic::assemble({row});
}

// Scales B back onto the budget the solver met only to its tolerance.
void EnforcePower(Eigen::MatrixXcd& b, const NbeDesignParams& params, PowerKind kind) {
  if (kind == PowerKind::kTotal) {
    const double power = b.squaredNorm();
    if (power > *params.power_limit) b *= std::sqrt(*params.power_limit / power);
  } else if (kind == PowerKind::kPerAntenna) {
    for (Eigen::Index i = 0; i < b.rows(); ++i) {
      const double limit = params.per_antenna_limits[i];
      const double power = b.row(i).squaredNorm();
      if (limit == 0.0) {
        b.row(i).setZero();
      } else if (power > limit) {
        b.row(i) *= std::sqrt(limit / power);
      }
    }
  }
}

Transceiver InitialTransceiver(const SystemConfig& config, const NbeDesignParams& params,
                               PowerKind kind) {
  if (kind != PowerKind::kPerAntenna) {
    return identity_transceiver(config, params.power_limit.value_or(1.0));
  }
  const double total = Sum(params.per_antenna_limits);
  Transceiver tx = identity_transceiver(config, total > 0.0 ? total : 1.0);
  EnforcePower(tx.precoder(), params, kind);
  return tx;
}

// Keeps, per user, whichever receive filter has the smaller exact worst case.
// Returns the number of users whose new filter was rejected.
int MergeReceivers(Transceiver& current, std::vector<double>& current_wc,
                   std::vector<double>& bound, const SubproblemResult& step,
                   const Channel& h_hat, const NbeDesignParams& params,
                   double noise_var) {
  const std::vector<double> wc = WorstCase(step.tx, h_hat, params, noise_var);
  int rejected = 0;
  for (int k = 0; k < current.num_users(); ++k) {
    if (wc[k] <= current_wc[k]) {
      current.receive_filter(k) = step.tx.receive_filter(k);
      current_wc[k] = wc[k];
      bound[k] = step.slacks.s[k];
    } else {
      ++rejected;
    }
  }
  return rejected;
}

// (B, C_k) -> (a B, C_k / a) leaves every C_k H_k B and every D_k unchanged
// and scales the noise term by 1 / a^2, so pushing B onto its budget can only
// lower each worst case. Bounds shrink by the noise reduction.
void Rescale(Transceiver& tx, std::vector<double>& bound, const NbeDesignParams& params,
             PowerKind kind, double noise_var) {
  double a = std::numeric_limits<double>::infinity();
  if (kind == PowerKind::kTotal) {
    a = std::sqrt(*params.power_limit / tx.transmit_power());
  } else if (kind == PowerKind::kPerAntenna) {
    for (int i = 0; i < tx.n_tx(); ++i) {
      const double row = tx.precoder().row(i).squaredNorm();
      if (row > 0.0) a = std::min(a, std::sqrt(params.per_antenna_limits[i] / row));
    }
  }
  if (!std::isfinite(a) || a <= 1.0) return;
  tx.precoder() *= a;
  for (int k = 0; k < tx.num_users(); ++k) {
    const double before = tx.receive_filter(k).squaredNorm();
    tx.receive_filter(k) /= a;
    bound[k] -= noise_var * (before - tx.receive_filter(k).squaredNorm());
  }
}

// (B / a, a C_k) again leaves every residual unchanged while the power drops
// by a^2 and each noise term grows by a^2; a is the largest factor that keeps
// every worst case within its target.
void ShrinkPower(Transceiver& tx, std::vector<double>& wc, const NbeDesignParams& params,
                 double noise_var) {
  double a2 = std::numeric_limits<double>::infinity();
  for (int k = 0; k < tx.num_users(); ++k) {
    const double noise = noise_var * tx.receive_filter(k).squaredNorm();
    if (noise > 0.0) a2 = std::min(a2, (params.mse_targets[k] - (wc[k] - noise)) / noise);
  }
  if (!std::isfinite(a2) || a2 <= 1.0) return;
  const double a = std::sqrt(a2);
  tx.precoder() /= a;
  for (int k = 0; k < tx.num_users(); ++k) {
    const double noise = noise_var * tx.receive_filter(k).squaredNorm();
    tx.receive_filter(k) *= a;
    wc[k] += (a2 - 1.0) * noise;
  }
}

}  // namespace

void NbeDesignParams::validate(const SystemConfig& config) const {
  if (static_cast<int>(delta.size()) != config.num_users()) {
    throw std::invalid_argument("one uncertainty radius per user is required");
  }
  for (double d : delta) {
    if (!(d >= 0.0) || !std::isfinite(d)) throw std::invalid_argument("delta >= 0 violated");
  }
  if (power_limit && !Positive(*power_limit)) {
    throw std::invalid_argument("power_limit > 0 violated");
  }
  if (!per_antenna_limits.empty()) {
    if (static_cast<int>(per_antenna_limits.size()) != config.n_tx()) {
      throw std::invalid_argument("one per-antenna limit per transmit antenna is required");
    }
    for (double p : per_antenna_limits) {
      if (!(p >= 0.0) || !std::isfinite(p)) {
        throw std::invalid_argument("per-antenna limit >= 0 violated");
      }
    }
  }
  if (!mse_targets.empty()) {
    if (static_cast<int>(mse_targets.size()) != config.num_users()) {
      throw std::invalid_argument("one MSE target per user is required");
    }
    for (double e : mse_targets) {
      if (!Positive(e)) throw std::invalid_argument("MSE target > 0 violated");
    }
  }
  if (!(threshold > 0.0)) throw std::invalid_argument("threshold > 0 violated");
  if (max_iterations < 1) throw std::invalid_argument("max_iterations >= 1 violated");
}

AffineMatrix robust_residual_lmi(const AffineMatrix& w, const AffineMatrix& gamma,
                                 const AffineMatrix& bound, double delta, int multiplier) {
  const AffineMatrix a = conic::schur_lift(bound, w);
  if (delta == 0.0) return a;
  const Eigen::Index m = w.rows();
  const Eigen::Index n = gamma.cols();
  conic::RobustLmiSpec spec;
  spec.a = a;
  spec.p = conic::assemble({{AffineMatrix(n, 1), gamma.adjoint()}});
  spec.q = Eigen::MatrixXcd::Zero(1, m + 1);
  spec.q(0, 0) = -1.0;
  spec.rho = delta;
  spec.multiplier = multiplier;
  return conic::s_lemma_lift(spec);
}

AffineMatrix build_Mk(const AffineMatrix& b, const AffineMatrix& gbar,
                      const Eigen::MatrixXcd& c, const Eigen::MatrixXcd& h_hat,
                      double delta, double noise_std, const AffineMatrix& bound,
                      int multiplier) {
  AffineMatrix w = ((c * h_hat) * b - gbar).vec();
  AffineMatrix gamma = conic::kron(b.transpose(), c);
  if (noise_std > 0.0) {
    const Eigen::Index extra = c.size();
    w = conic::vstack({w, AffineMatrix(Eigen::MatrixXcd(noise_std * c.reshaped()))});
    gamma = conic::vstack({gamma, AffineMatrix(extra, gamma.cols())});
  }
  return robust_residual_lmi(w, gamma, bound, delta, multiplier);
}

AffineMatrix build_Nk(const Eigen::MatrixXcd& b, const Eigen::MatrixXcd& gbar,
                      const AffineMatrix& c, const Eigen::MatrixXcd& h_hat,
                      double delta, double noise_std, const AffineMatrix& bound,
                      int multiplier) {
  AffineMatrix w = (c * Eigen::MatrixXcd(h_hat * b) - AffineMatrix(gbar)).vec();
  const Eigen::MatrixXcd bt = b.transpose();
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(bt, Eigen::ComputeThinV);
  AffineMatrix gamma = conic::kron(Eigen::MatrixXcd(bt * svd.matrixV()), c);
  if (noise_std > 0.0) {
    w = conic::vstack({w, noise_std * c.vec()});
    gamma = conic::vstack({gamma, AffineMatrix(c.rows() * c.cols(), gamma.cols())});
  }
  return robust_residual_lmi(w, gamma, bound, delta, multiplier);
}

SubproblemResult solve_bg_subproblem(const Transceiver& tx, const Channel& h_hat,
                                     double noise_var, const NbeDesignParams& params,
                                     const BgProblem& problem) {
  const int users = tx.num_users();
  conic::ConeProgram prog;
  const conic::ComplexMatrixVar b =
      conic::add_complex_matrix(prog, tx.n_tx(), tx.precoder().cols());
  std::vector<std::vector<conic::ComplexMatrixVar>> g(users);
  for (int k = 0; k < users; ++k) {
    for (int j = 0; j < k; ++j) {
      g[k].push_back(conic::add_complex_matrix(prog, tx.streams(k), tx.streams(j)));
    }
  }

  int shared = -1;
  if (problem.bound == BoundKind::kShared) {
    shared = prog.add_variable();
    prog.set_objective(shared, 1.0);
  }
  std::vector<int> t(users, -1), beta(users, -1);
  const double noise_std = problem.include_noise ? std::sqrt(noise_var) : 0.0;
  for (int k = 0; k < users; ++k) {
    AffineMatrix bound;
    switch (problem.bound) {
      case BoundKind::kPerUser:
        t[k] = prog.add_variable();
        prog.set_objective(t[k], 1.0);
        bound = AffineMatrix::Scalar(t[k]);
        break;
      case BoundKind::kFixed:
        bound = Constant(params.mse_targets.at(k));
        break;
      case BoundKind::kShared:
        bound = AffineMatrix::Scalar(shared);
        break;
    }
    beta[k] = prog.add_variable();
    conic::add_lmi(prog, build_Mk(b.expr, AugmentedFeedback(tx, k, g), tx.receive_filter(k),
                                  h_hat.block(k), params.delta[k], noise_std, bound,
                                  beta[k]));
  }

  int power = -1;
  switch (problem.power) {
    case PowerKind::kTotal:
      conic::add_soc(prog, Constant(std::sqrt(*params.power_limit)), b.expr);
      break;
    case PowerKind::kPerAntenna:
      for (int i = 0; i < tx.n_tx(); ++i) {
        const AffineMatrix row = b.expr.block(i, 0, 1, b.cols);
        const double limit = params.per_antenna_limits.at(i);
        if (limit == 0.0) {
          conic::add_zero(prog, row);
        } else {
          conic::add_soc(prog, Constant(std::sqrt(limit)), row);
        }
      }
      break;
    case PowerKind::kObjective:
      power = prog.add_variable();
      prog.set_objective(power, 1.0);
      conic::add_soc(prog, AffineMatrix::Scalar(power), b.expr);
      break;
  }

  const conic::SolveOutcome sol = conic::solve(prog, params.solver);
  SubproblemResult out;
  out.status = sol.status;
  out.tx = tx;
  if (sol.status != SolveStatus::kOptimal) return out;
  const Eigen::VectorXd& x = *sol.primal;
  out.tx.precoder() = b.value(x);
  EnforcePower(out.tx.precoder(), params, problem.power);
  for (int k = 0; k < users; ++k) {
    for (int j = 0; j < k; ++j) out.tx.feedback(k, j) = g[k][j].value(x);
    if (t[k] >= 0) out.slacks.t.push_back(x(t[k]));
    out.slacks.beta.push_back(params.delta[k] == 0.0 ? 0.0 : x(beta[k]));
  }
  if (shared >= 0) out.slacks.r = x(shared);
  if (power >= 0) out.slacks.r = x(power);
  return out;
}

SubproblemResult solve_c_subproblem(const Transceiver& tx, const Channel& h_hat,
                                    double noise_var, const NbeDesignParams& params) {
  SubproblemResult out;
  out.status = SolveStatus::kOptimal;
  out.tx = tx;
  const double noise_std = std::sqrt(noise_var);
  for (int k = 0; k < tx.num_users(); ++k) {
    conic::ConeProgram prog;
    const conic::ComplexMatrixVar c =
        conic::add_complex_matrix(prog, tx.streams(k), h_hat.block(k).rows());
    const int s = prog.add_variable();
    const int mu = prog.add_variable();
    prog.set_objective(s, 1.0);
    conic::add_lmi(prog, build_Nk(tx.precoder(), tx.augmented_feedback(k), c.expr,
                                  h_hat.block(k), params.delta[k], noise_std,
                                  AffineMatrix::Scalar(s), mu));
    const conic::SolveOutcome sol = conic::solve(prog, params.solver);
    if (sol.status != SolveStatus::kOptimal) {
      out.status = sol.status;
      return out;
    }
    out.tx.receive_filter(k) = c.value(*sol.primal);
    out.slacks.s.push_back((*sol.primal)(s));
    out.slacks.mu.push_back(params.delta[k] == 0.0 ? 0.0 : (*sol.primal)(mu));
  }
  return out;
}

namespace {

// Shared loop of the SMSE (kPerUser) and balancing (kShared) designs, which
// differ only in how per-user worst cases are reduced to one objective.
DesignResult MinMaxLoop(const Channel& h_hat, const SystemConfig& config,
                        const NbeDesignParams& params, const BgProblem& problem) {
  const double noise_var = config.noise_var();
  const bool balance = problem.bound == BoundKind::kShared;
  auto reduce = [&](const std::vector<double>& v) { return balance ? Max(v) : Sum(v); };

  DesignResult res{InitialTransceiver(config, params, problem.power), {}};
  DesignTrace& trace = res.trace;
  std::vector<double> wc = WorstCase(res.tx, h_hat, params, noise_var);
  std::vector<double> bound = wc;
  double current = reduce(wc);
  trace.objective.push_back(current);
  trace.certified.push_back(reduce(bound));
  for (int it = 0; it < params.max_iterations; ++it) {
    const SubproblemResult bg = solve_bg_subproblem(res.tx, h_hat, noise_var, params, problem);
    trace.statuses.push_back(bg.status);
    if (bg.status != SolveStatus::kOptimal) {
      trace.termination = Termination::kSolverFailure;
      return res;
    }
    const std::vector<double> bg_wc = WorstCase(bg.tx, h_hat, params, noise_var);
    if (reduce(bg_wc) <= current) {
      res.tx = bg.tx;
      wc = bg_wc;
      for (int k = 0; k < res.tx.num_users(); ++k) {
        bound[k] = balance ? bg.slacks.r
                           : bg.slacks.t[k] +
                                 noise_var * res.tx.receive_filter(k).squaredNorm();
      }
    } else {
      ++trace.rejected_steps;
    }

    const SubproblemResult cs = solve_c_subproblem(res.tx, h_hat, noise_var, params);
    trace.statuses.push_back(cs.status);
    if (cs.status != SolveStatus::kOptimal) {
      trace.termination = Termination::kSolverFailure;
      return res;
    }
    trace.rejected_steps +=
        MergeReceivers(res.tx, wc, bound, cs, h_hat, params, noise_var);
    Transceiver scaled = res.tx;
    std::vector<double> scaled_bound = bound;
    Rescale(scaled, scaled_bound, params, problem.power, noise_var);
    const std::vector<double> scaled_wc = WorstCase(scaled, h_hat, params, noise_var);
    if (reduce(scaled_wc) <= reduce(wc)) {
      res.tx = std::move(scaled);
      wc = scaled_wc;
      bound = scaled_bound;
    }

    const double value = reduce(wc);
    trace.objective.push_back(value);
    trace.certified.push_back(reduce(bound));
    ++trace.iterations;
    const bool done = std::abs(current - value) < params.threshold;
    current = value;
    if (done) {
      trace.termination = Termination::kThreshold;
      return res;
    }
  }
  trace.termination = Termination::kMaxIterations;
  return res;
}

}  // namespace

DesignResult nbe_smse_design(const Channel& h_hat, const SystemConfig& config,
                             const NbeDesignParams& params) {
  params.validate(config);
  h_hat.check_against(config);
  if (!params.power_limit) throw std::invalid_argument("power_limit is required");
  return MinMaxLoop(h_hat, config, params, {BoundKind::kPerUser, PowerKind::kTotal, false});
}

DesignResult nbe_smse_design_per_antenna(const Channel& h_hat, const SystemConfig& config,
                                         const NbeDesignParams& params) {
  params.validate(config);
  h_hat.check_against(config);
  if (params.per_antenna_limits.empty()) {
    throw std::invalid_argument("per_antenna_limits are required");
  }
  return MinMaxLoop(h_hat, config, params,
                    {BoundKind::kPerUser, PowerKind::kPerAntenna, false});
}

DesignResult mse_balancing_design(const Channel& h_hat, const SystemConfig& config,
                                  const NbeDesignParams& params) {
  params.validate(config);
  h_hat.check_against(config);
  if (!params.power_limit) throw std::invalid_argument("power_limit is required");
  return MinMaxLoop(h_hat, config, params, {BoundKind::kShared, PowerKind::kTotal, true});
}

namespace {

const BgProblem kConstrainedProblem{BoundKind::kFixed, PowerKind::kObjective, true};

void CheckConstrainedInputs(const Channel& h_hat, const SystemConfig& config,
                            const NbeDesignParams& params) {
  params.validate(config);
  h_hat.check_against(config);
  if (params.mse_targets.empty()) throw std::invalid_argument("mse_targets are required");
}

}  // namespace

SolveStatus mse_constrained_first_status(const Channel& h_hat, const SystemConfig& config,
                                         const NbeDesignParams& params) {
  CheckConstrainedInputs(h_hat, config, params);
  return solve_bg_subproblem(identity_transceiver(config, 1.0), h_hat, config.noise_var(),
                             params, kConstrainedProblem)
      .status;
}

ConstrainedDesignResult mse_constrained_design(const Channel& h_hat,
                                               const SystemConfig& config,
                                               const NbeDesignParams& params) {
  CheckConstrainedInputs(h_hat, config, params);
  const double noise_var = config.noise_var();
  const BgProblem& problem = kConstrainedProblem;
  auto within_targets = [&](const std::vector<double>& wc) {
    for (std::size_t k = 0; k < wc.size(); ++k) {
      if (wc[k] > params.mse_targets[k] + kTargetSlack) return false;
    }
    return true;
  };

  ConstrainedDesignResult res{identity_transceiver(config, 1.0), {}, false};
  DesignTrace& trace = res.trace;
  SubproblemResult bg = solve_bg_subproblem(res.tx, h_hat, noise_var, params, problem);
  trace.statuses.push_back(bg.status);
  if (bg.status != SolveStatus::kOptimal) {
    trace.termination = bg.status == SolveStatus::kInfeasible ? Termination::kInfeasible
                                                              : Termination::kSolverFailure;
    return res;
  }
  res.feasible = true;
  res.tx = bg.tx;
  std::vector<double> wc = WorstCase(res.tx, h_hat, params, noise_var);
  std::vector<double> bound = params.mse_targets;
  double current = res.tx.transmit_power();
  trace.objective.push_back(current);
  trace.certified.push_back(bg.slacks.r * bg.slacks.r);
  trace.iterations = 1;
  while (true) {
    const SubproblemResult cs = solve_c_subproblem(res.tx, h_hat, noise_var, params);
    trace.statuses.push_back(cs.status);
    if (cs.status != SolveStatus::kOptimal) {
      trace.termination = Termination::kSolverFailure;
      return res;
    }
    trace.rejected_steps += MergeReceivers(res.tx, wc, bound, cs, h_hat, params, noise_var);
    Transceiver shrunk = res.tx;
    std::vector<double> shrunk_wc = wc;
    ShrinkPower(shrunk, shrunk_wc, params, noise_var);
    const std::vector<double> exact_wc = WorstCase(shrunk, h_hat, params, noise_var);
    if (shrunk.transmit_power() < res.tx.transmit_power() && within_targets(exact_wc)) {
      res.tx = std::move(shrunk);
      wc = exact_wc;
    }
    if (trace.iterations == params.max_iterations) break;

    bg = solve_bg_subproblem(res.tx, h_hat, noise_var, params, problem);
    trace.statuses.push_back(bg.status);
    if (bg.status != SolveStatus::kOptimal) {
      trace.termination = Termination::kSolverFailure;
      return res;
    }
    const std::vector<double> bg_wc = WorstCase(bg.tx, h_hat, params, noise_var);
    double certified = res.tx.transmit_power();
    if (bg.tx.transmit_power() <= res.tx.transmit_power() && within_targets(bg_wc)) {
      res.tx = bg.tx;
      wc = bg_wc;
      certified = bg.slacks.r * bg.slacks.r;
    } else {
      ++trace.rejected_steps;
    }
    const double value = res.tx.transmit_power();
    trace.objective.push_back(value);
    trace.certified.push_back(certified);
    ++trace.iterations;
    const bool done = std::abs(current - value) < params.threshold;
    current = value;
    if (done) {
      trace.termination = Termination::kThreshold;
      return res;
    }
  }
  trace.termination = Termination::kMaxIterations;
  return res;
}

double FeasibilityReport::infeasible_fraction() const {
  if (feasible.empty()) return 0.0;
  const auto bad = std::count(feasible.begin(), feasible.end(), false);
  return static_cast<double>(bad) / static_cast<double>(feasible.size());
}

}  // namespace thp
