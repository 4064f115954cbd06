#pragma once

#include <complex>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include "thp/conic/cone_program.h"

namespace thp::conic {

using Complex = std::complex<double>;

/// Complex matrix-valued affine function of the real decision variables:
///   constant + sum_i x_i * term_i.
class AffineMatrix {
 public:
  AffineMatrix() = default;
  /// Zero expression of the given shape.
  AffineMatrix(Eigen::Index rows, Eigen::Index cols);
  explicit AffineMatrix(const Eigen::MatrixXcd& constant);

  /// 1x1 expression equal to variable `var`.
  static AffineMatrix Scalar(int var);

  Eigen::Index rows() const { return constant_.rows(); }
  Eigen::Index cols() const { return constant_.cols(); }
  const Eigen::MatrixXcd& constant() const { return constant_; }
  const std::map<int, Eigen::MatrixXcd>& terms() const { return terms_; }

  void add_term(int var, const Eigen::MatrixXcd& coefficient);

  Eigen::MatrixXcd evaluate(const Eigen::VectorXd& x) const;

  AffineMatrix adjoint() const;
  AffineMatrix transpose() const;
  /// Column-stacking vectorization.
  AffineMatrix vec() const;
  AffineMatrix block(Eigen::Index row, Eigen::Index col, Eigen::Index rows,
                     Eigen::Index cols) const;

  AffineMatrix& operator+=(const AffineMatrix& other);
  AffineMatrix& operator-=(const AffineMatrix& other);
  AffineMatrix& operator*=(Complex scale);

  friend AffineMatrix operator+(AffineMatrix a, const AffineMatrix& b) {
    return a += b;
  }
  friend AffineMatrix operator-(AffineMatrix a, const AffineMatrix& b) {
    return a -= b;
  }
  friend AffineMatrix operator-(AffineMatrix a) { return a *= -1.0; }
  friend AffineMatrix operator*(AffineMatrix a, Complex s) { return a *= s; }
  friend AffineMatrix operator*(Complex s, AffineMatrix a) { return a *= s; }
  friend AffineMatrix operator*(const Eigen::MatrixXcd& m, const AffineMatrix& a);
  friend AffineMatrix operator*(const AffineMatrix& a, const Eigen::MatrixXcd& m);

 private:
  template <typename F>
  AffineMatrix map(F&& f) const;

  Eigen::MatrixXcd constant_;
  std::map<int, Eigen::MatrixXcd> terms_;
};

AffineMatrix kron(const AffineMatrix& a, const Eigen::MatrixXcd& m);
AffineMatrix kron(const Eigen::MatrixXcd& m, const AffineMatrix& a);

/// Block matrix from a grid of expressions. Rows of the grid must agree in
/// height and columns in width.
AffineMatrix assemble(const std::vector<std::vector<AffineMatrix>>& grid);
AffineMatrix vstack(const std::vector<AffineMatrix>& parts);

/// Fresh complex matrix of decision variables, real and imaginary parts
/// stored column-major as (re, im) pairs.
struct ComplexMatrixVar {
  int first = 0;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  AffineMatrix expr;

  int real_index(Eigen::Index i, Eigen::Index j) const {
    return first + 2 * static_cast<int>(i + rows * j);
  }
  int imag_index(Eigen::Index i, Eigen::Index j) const {
    return real_index(i, j) + 1;
  }
  Eigen::MatrixXcd value(const Eigen::VectorXd& x) const;
};

ComplexMatrixVar add_complex_matrix(ConeProgram& program, Eigen::Index rows,
                                    Eigen::Index cols);

}  // namespace thp::conic
