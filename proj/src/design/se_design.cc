#include "thp/se_design.h"

#include <cmath>
#include <stdexcept>

#include "thp/conic/affine.h"
#include "thp/conic/lmi.h"
#include "thp/mse.h"

namespace thp {

using conic::AffineMatrix;

void SeDesignParams::validate() const {
  if (!(error_var >= 0.0) || !std::isfinite(error_var)) {
    throw std::invalid_argument("error_var >= 0 violated");
  }
  if (!(power_limit > 0.0) || !std::isfinite(power_limit)) {
    throw std::invalid_argument("power_limit > 0 violated");
  }
  if (!(threshold > 0.0)) throw std::invalid_argument("threshold > 0 violated");
  if (max_iterations < 1) throw std::invalid_argument("max_iterations >= 1 violated");
}

Transceiver se_feedback_update(const Transceiver& tx, const Channel& h_hat) {
  Transceiver out = tx;
  for (int k = 0; k < tx.num_users(); ++k) {
    const Eigen::MatrixXcd ch = tx.receive_filter(k) * h_hat.block(k);
    for (int j = 0; j < k; ++j) out.feedback(k, j) = ch * tx.precoder_block(j);
  }
  return out;
}

Transceiver se_receiver_update(const Transceiver& tx, const Channel& h_hat,
                               double error_var, double noise_var,
                               ReceiverVariant variant) {
  Transceiver out = tx;
  const double load = noise_var + error_var * tx.transmit_power();
  const Eigen::MatrixXcd& b = tx.precoder();
  for (int k = 0; k < tx.num_users(); ++k) {
    const Eigen::MatrixXcd& h = h_hat.block(k);
    const int first = tx.stream_offset(k) +
                      (variant == ReceiverVariant::kStrictlyLater ? tx.streams(k) : 0);
    const Eigen::MatrixXcd hb = h * b.rightCols(b.cols() - first);
    Eigen::MatrixXcd m = hb * hb.adjoint();
    m.diagonal().array() += load;
    const Eigen::MatrixXcd rhs = (h * tx.precoder_block(k)).adjoint();
    // C_k M = rhs  <=>  M^H C_k^H = rhs^H, with M Hermitian.
    Eigen::LDLT<Eigen::MatrixXcd> ldlt(m);
    if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-14) {
      throw std::domain_error("receive filter system matrix is singular");
    }
    out.receive_filter(k) = ldlt.solve(rhs.adjoint()).adjoint();
  }
  return out;
}

PrecoderStep se_precoder_step(const Transceiver& tx, const Channel& h_hat,
                              double noise_var, const SeDesignParams& params) {
  params.validate();
  conic::ConeProgram prog;
  const conic::ComplexMatrixVar b =
      conic::add_complex_matrix(prog, tx.n_tx(), tx.precoder().cols());
  const int r = prog.add_variable();
  double receive_energy = 0.0;
  const AffineMatrix half(Eigen::MatrixXcd::Constant(1, 1, 0.5));
  for (int k = 0; k < tx.num_users(); ++k) {
    const int t = prog.add_variable();
    prog.set_objective(t, 1.0);
    const Eigen::MatrixXcd ch = tx.receive_filter(k) * h_hat.block(k);
    const AffineMatrix w = ch * b.expr - AffineMatrix(tx.augmented_feedback(k));
    conic::add_rotated_soc(prog, AffineMatrix::Scalar(t), half, w);
    receive_energy += tx.receive_filter(k).squaredNorm();
  }
  prog.set_objective(r, params.error_var * receive_energy);
  prog.add_objective_constant(noise_var * receive_energy);
  conic::add_rotated_soc(prog, AffineMatrix::Scalar(r), half, b.expr);
  conic::add_nonnegative(
      prog, AffineMatrix(Eigen::MatrixXcd::Constant(1, 1, params.power_limit)) -
                AffineMatrix::Scalar(r));

  const conic::SolveOutcome sol = conic::solve(prog, params.solver);
  PrecoderStep out;
  out.status = sol.status;
  if (sol.status != conic::SolveStatus::kOptimal) return out;
  out.precoder = b.value(*sol.primal);
  // Absorb the solver's feasibility tolerance so the budget holds exactly.
  const double power = out.precoder.squaredNorm();
  if (power > params.power_limit) {
    out.precoder *= std::sqrt(params.power_limit / power);
  }
  Transceiver next = tx;
  next.precoder() = out.precoder;
  out.objective = averaged_smse(next, h_hat, params.error_var, noise_var);
  return out;
}

DesignResult se_design(const Channel& h_hat, const SystemConfig& config,
                       const SeDesignParams& params) {
  params.validate();
  h_hat.check_against(config);
  const double noise_var = config.noise_var();
  auto objective = [&](const Transceiver& t) {
    return averaged_smse(t, h_hat, params.error_var, noise_var);
  };

  DesignResult res{identity_transceiver(config, params.power_limit), {}};
  DesignTrace& trace = res.trace;
  double current = objective(res.tx);
  trace.objective.push_back(current);
  for (int it = 0; it < params.max_iterations; ++it) {
    const PrecoderStep step = se_precoder_step(res.tx, h_hat, noise_var, params);
    trace.statuses.push_back(step.status);
    if (step.status != conic::SolveStatus::kOptimal) {
      trace.termination = Termination::kSolverFailure;
      return res;
    }
    Transceiver next = res.tx;
    if (step.objective <= current) {
      next.precoder() = step.precoder;
    } else {
      ++trace.rejected_steps;
    }
    Transceiver updated;
    try {
      updated = se_feedback_update(
          se_receiver_update(next, h_hat, params.error_var, noise_var, params.variant),
          h_hat);
    } catch (const std::domain_error&) {
      trace.termination = Termination::kSolverFailure;
      return res;
    }
    if (objective(updated) <= objective(next)) {
      next = std::move(updated);
    } else {
      ++trace.rejected_steps;
    }
    const double value = objective(next);
    res.tx = std::move(next);
    trace.objective.push_back(value);
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

}  // namespace thp
