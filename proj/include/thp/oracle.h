#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "thp/sampling.h"
#include "thp/system.h"

namespace thp {

enum class WorstCaseMethod { kExact, kSampled };

struct WorstCaseResult {
  double value = 0.0;
  Eigen::VectorXcd e;  // maximizing error vector, ||e|| <= delta
  WorstCaseMethod method = WorstCaseMethod::kExact;
  /// Lagrange multiplier of the ball constraint (exact method only).
  double nu = 0.0;
};

/// max_{||e|| <= delta} ||D (h_hat + e) - gbar||^2 + noise_var ||c||^2.
///
/// The maximum of a convex quadratic over a ball sits on the sphere; it is
/// found from (D^H D - nu I) e = -D^H b with nu >= lambda_max(D^H D) by
/// bisection on ||e(nu)|| = delta, with eigenvector completion when b has no
/// component along the top eigenspace.
WorstCaseResult worst_case_user_mse(const Eigen::MatrixXcd& d,
                                    const Eigen::VectorXcd& h_hat,
                                    const Eigen::VectorXcd& gbar,
                                    const Eigen::VectorXcd& c, double noise_var,
                                    double delta);

/// Best of `samples` uniform points on the sphere of radius delta.
WorstCaseResult sampled_worst_case_user_mse(const Eigen::MatrixXcd& d,
                                            const Eigen::VectorXcd& h_hat,
                                            const Eigen::VectorXcd& gbar,
                                            const Eigen::VectorXcd& c,
                                            double noise_var, double delta,
                                            int samples, Rng& rng);

/// Exact worst-case MSE of every user of `tx` at the nominal channel.
MseReport worst_case_smse(const Transceiver& tx, const Channel& h_hat,
                          const std::vector<double>& delta, double noise_var);

struct MonteCarloEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  int samples = 0;
};

/// Sample mean of the SMSE at true channels h_hat + E, entries of E i.i.d.
/// circular Gaussian with variance `per_entry_var`; with that variance the
/// expectation equals averaged_smse(tx, h_hat, per_entry_var, noise_var).
MonteCarloEstimate mc_expected_smse(const Transceiver& tx, const Channel& h_hat,
                                    double per_entry_var, double noise_var,
                                    int samples, std::uint64_t seed);

}  // namespace thp
