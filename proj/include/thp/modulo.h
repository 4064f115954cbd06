#pragma once

#include <Eigen/Dense>

#include "thp/system.h"

namespace thp {

/// Componentwise THP modulo: real and imaginary parts are folded into
/// [-a/2, a/2).
Complex modulo(Complex x, const ModuloConfig& cfg);
Eigen::VectorXcd modulo(const Eigen::VectorXcd& x, const ModuloConfig& cfg);

struct ThpEncoding {
  Eigen::VectorXcd v;  // modulo outputs, stacked per user
  Eigen::VectorXcd x;  // transmit vector B v
};

/// Successive interference pre-subtraction in user order 1..M followed by
/// linear precoding.
ThpEncoding thp_encode(const Eigen::VectorXcd& u, const Transceiver& tx,
                       const ModuloConfig& cfg);

}  // namespace thp
