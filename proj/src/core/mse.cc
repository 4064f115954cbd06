#include "thp/mse.h"

#include <stdexcept>
#include <unsupported/Eigen/KroneckerProduct>

namespace thp {
namespace {

void check_user(const Transceiver& tx, const Eigen::MatrixXcd& h_k, int k) {
  if (k < 0 || k >= tx.num_users()) {
    throw std::out_of_range("user index out of range");
  }
  if (h_k.cols() != tx.n_tx() || h_k.rows() != tx.receive_filter(k).cols()) {
    throw std::invalid_argument("channel block shape differs from transceiver");
  }
}

void check_channel(const Transceiver& tx, const Channel& h) {
  if (h.num_users() != tx.num_users()) {
    throw std::invalid_argument("channel user count differs from transceiver");
  }
}

}  // namespace

Eigen::VectorXcd vec(const Eigen::MatrixXcd& m) {
  return Eigen::Map<const Eigen::VectorXcd>(m.data(), m.size());
}

Eigen::MatrixXcd unvec(const Eigen::VectorXcd& v, Eigen::Index rows,
                       Eigen::Index cols) {
  if (v.size() != rows * cols) throw std::invalid_argument("unvec size");
  return Eigen::Map<const Eigen::MatrixXcd>(v.data(), rows, cols);
}

double per_user_mse(const Transceiver& tx, const Eigen::MatrixXcd& h_k, int k,
                    double noise_var) {
  check_user(tx, h_k, k);
  const Eigen::MatrixXcd& c = tx.receive_filter(k);
  const Eigen::MatrixXcd r = c * h_k * tx.precoder() - tx.augmented_feedback(k);
  return r.squaredNorm() + noise_var * c.squaredNorm();
}

MseReport smse(const Transceiver& tx, const Channel& h, double noise_var) {
  check_channel(tx, h);
  MseReport out;
  for (int k = 0; k < tx.num_users(); ++k) {
    out.per_user.push_back(per_user_mse(tx, h.block(k), k, noise_var));
    out.smse += out.per_user.back();
  }
  return out;
}

double averaged_smse(const Transceiver& tx, const Channel& h_hat,
                     double error_var, double noise_var) {
  if (error_var < 0.0) throw std::invalid_argument("error_var >= 0 violated");
  return smse(tx, h_hat, error_var * tx.transmit_power() + noise_var).smse;
}

VectorizedResidual vectorized_residual(const Transceiver& tx,
                                       const Eigen::MatrixXcd& h_k, int k) {
  check_user(tx, h_k, k);
  VectorizedResidual out;
  out.d = Eigen::kroneckerProduct(tx.precoder().transpose(),
                                  tx.receive_filter(k))
              .eval();
  out.h = vec(h_k);
  out.gbar = vec(tx.augmented_feedback(k));
  out.c = vec(tx.receive_filter(k));
  out.residual = out.d * out.h - out.gbar;
  return out;
}

}  // namespace thp
