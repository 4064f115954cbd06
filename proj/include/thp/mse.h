#pragma once

#include <Eigen/Dense>

#include "thp/system.h"

namespace thp {

/// Column-stacking vectorization.
Eigen::VectorXcd vec(const Eigen::MatrixXcd& m);
/// Inverse of vec for a rows x cols matrix.
Eigen::MatrixXcd unvec(const Eigen::VectorXcd& v, Eigen::Index rows,
                       Eigen::Index cols);

/// eps_k = ||C_k H_k B - Gbar_k||_F^2 + noise_var ||C_k||_F^2. Modulo loss is
/// not modelled.
double per_user_mse(const Transceiver& tx, const Eigen::MatrixXcd& h_k, int k,
                    double noise_var);

MseReport smse(const Transceiver& tx, const Channel& h, double noise_var);

/// SMSE averaged over a Gaussian channel error with E{E_k E_k^H} scaling such
/// that the error contribution is error_var * ||B||_F^2 * ||C_k||_F^2.
double averaged_smse(const Transceiver& tx, const Channel& h_hat,
                     double error_var, double noise_var);

/// Vector form of user k's residual.
///
///   D = B^T (x) C_k,  h = vec(H_k),  gbar = vec(Gbar_k),  c = vec(C_k),
///   residual = D h - gbar = vec(C_k H_k B - Gbar_k).
struct VectorizedResidual {
  Eigen::MatrixXcd d;
  Eigen::VectorXcd h;
  Eigen::VectorXcd gbar;
  Eigen::VectorXcd c;
  Eigen::VectorXcd residual;
};

VectorizedResidual vectorized_residual(const Transceiver& tx,
                                       const Eigen::MatrixXcd& h_k, int k);

}  // namespace thp
