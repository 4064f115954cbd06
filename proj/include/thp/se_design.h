#pragma once

#include "thp/conic/solver.h"
#include "thp/design.h"
#include "thp/system.h"

namespace thp {

/// Interference term of the receive filter update.
enum class ReceiverVariant {
  /// Sum over j >= k: the joint minimizer over (C_k, G_k) for fixed B.
  kInclusive,
  /// Sum over j > k.
  kStrictlyLater,
};

struct SeDesignParams {
  double error_var = 0.0;  // sigma_E^2
  double power_limit = 1.0;
  double threshold = 1e-3;
  int max_iterations = 50;
  ReceiverVariant variant = ReceiverVariant::kInclusive;
  conic::SolverOptions solver;

  void validate() const;
};

/// G_{k,j} = C_k H_k B_j for j < k.
Transceiver se_feedback_update(const Transceiver& tx, const Channel& h_hat);

/// C_k = B_k^H H_k^H (H_k S_k H_k^H + (noise_var + error_var ||B||_F^2) I)^{-1}
/// with S_k the precoder covariance summed per `variant`. Throws
/// std::domain_error when the bracketed matrix is singular.
Transceiver se_receiver_update(const Transceiver& tx, const Channel& h_hat,
                               double error_var, double noise_var,
                               ReceiverVariant variant);

struct PrecoderStep {
  conic::SolveStatus status = conic::SolveStatus::kNumericalFailure;
  Eigen::MatrixXcd precoder;
  /// Averaged SMSE at the new precoder, including the noise term.
  double objective = 0.0;
};

/// Minimizes the averaged SMSE over B with ||B||_F^2 <= power_limit for fixed
/// C and G, as an SOCP with rotated cones.
PrecoderStep se_precoder_step(const Transceiver& tx, const Channel& h_hat,
                              double noise_var, const SeDesignParams& params);

/// Alternates precoder step, receive filter update and feedback update from
/// the identity pattern. error_var = 0 gives the non-robust design.
DesignResult se_design(const Channel& h_hat, const SystemConfig& config,
                       const SeDesignParams& params);

}  // namespace thp
