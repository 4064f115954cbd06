#include "thp/modulo.h"

#include <cmath>
#include <stdexcept>

namespace thp {
namespace {

double fold(double x, double a) { return x - a * std::floor(x / a + 0.5); }

}  // namespace

Complex modulo(Complex x, const ModuloConfig& cfg) {
  return {fold(x.real(), cfg.base), fold(x.imag(), cfg.base)};
}

Eigen::VectorXcd modulo(const Eigen::VectorXcd& x, const ModuloConfig& cfg) {
  Eigen::VectorXcd out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out(i) = modulo(x(i), cfg);
  return out;
}

ThpEncoding thp_encode(const Eigen::VectorXcd& u, const Transceiver& tx,
                       const ModuloConfig& cfg) {
  cfg.validate();
  if (u.size() != tx.precoder().cols()) {
    throw std::invalid_argument("symbol vector length differs from L");
  }
  ThpEncoding out;
  out.v = Eigen::VectorXcd::Zero(u.size());
  for (int k = 0; k < tx.num_users(); ++k) {
    Eigen::VectorXcd w = u.segment(tx.stream_offset(k), tx.streams(k));
    for (int j = 0; j < k; ++j) {
      w -= tx.feedback(k, j) * out.v.segment(tx.stream_offset(j), tx.streams(j));
    }
    out.v.segment(tx.stream_offset(k), tx.streams(k)) = modulo(w, cfg);
  }
  out.x = tx.precoder() * out.v;
  return out;
}

}  // namespace thp
