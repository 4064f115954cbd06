#pragma once

#include <Eigen/Dense>

#include "thp/conic/affine.h"
#include "thp/conic/cone_program.h"

namespace thp::conic {

/// [[t, r^H], [r, I]], which is PSD exactly when ||r||^2 <= t. `t` must be
/// 1x1 and real-valued, `r` a column.
AffineMatrix schur_lift(const AffineMatrix& t, const AffineMatrix& r);

/// Robust matrix inequality
///   A >= P^H X Q + Q^H X^H P   for all ||X|| <= rho,
/// with A Hermitian affine, P affine (p x n), Q constant (q x n).
struct RobustLmiSpec {
  AffineMatrix a;
  AffineMatrix p;
  Eigen::MatrixXcd q;
  double rho = 0.0;
  /// Decision variable holding the nonnegative multiplier.
  int multiplier = -1;
};

/// [[A - lambda Q^H Q, -rho P^H], [-rho P, lambda I]]. Feasibility of this LMI
/// together with lambda >= 0 certifies the robust inequality.
AffineMatrix s_lemma_lift(const RobustLmiSpec& spec);

/// [[Re A, -Im A], [Im A, Re A]]. Throws std::invalid_argument if A is not
/// Hermitian to 1e-12 relative.
Eigen::MatrixXd embed_complex(const Eigen::MatrixXcd& a);
/// Same embedding applied to the constant and every coefficient.
AffineMatrix embed_complex(const AffineMatrix& a);

/// Adds `a >= 0` for a Hermitian affine matrix through the real embedding.
void add_lmi(ConeProgram& program, const AffineMatrix& a);

/// t >= ||w||_F, with t real 1x1 and w any complex shape.
void add_soc(ConeProgram& program, const AffineMatrix& t, const AffineMatrix& w);
/// 2 u v >= ||w||_F^2, u, v >= 0.
void add_rotated_soc(ConeProgram& program, const AffineMatrix& u,
                     const AffineMatrix& v, const AffineMatrix& w);
/// Real parts of every entry of `a` are >= 0.
void add_nonnegative(ConeProgram& program, const AffineMatrix& a);
/// Real and imaginary parts of every entry of `a` vanish.
void add_zero(ConeProgram& program, const AffineMatrix& a);

}  // namespace thp::conic
