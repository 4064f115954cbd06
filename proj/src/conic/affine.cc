#include "thp/conic/affine.h"

#include <stdexcept>
#include <unsupported/Eigen/KroneckerProduct>

namespace thp::conic {
namespace {

void require_same_shape(const AffineMatrix& a, const AffineMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("affine expression shapes differ");
  }
}

}  // namespace

AffineMatrix::AffineMatrix(Eigen::Index rows, Eigen::Index cols)
    : constant_(Eigen::MatrixXcd::Zero(rows, cols)) {}

AffineMatrix::AffineMatrix(const Eigen::MatrixXcd& constant)
    : constant_(constant) {}

AffineMatrix AffineMatrix::Scalar(int var) {
  AffineMatrix out(1, 1);
  out.add_term(var, Eigen::MatrixXcd::Ones(1, 1));
  return out;
}

void AffineMatrix::add_term(int var, const Eigen::MatrixXcd& coefficient) {
  if (coefficient.rows() != rows() || coefficient.cols() != cols()) {
    throw std::invalid_argument("affine term shape differs from expression");
  }
  auto [it, inserted] = terms_.try_emplace(var, coefficient);
  if (!inserted) it->second += coefficient;
}

Eigen::MatrixXcd AffineMatrix::evaluate(const Eigen::VectorXd& x) const {
  Eigen::MatrixXcd out = constant_;
  for (const auto& [var, coef] : terms_) out += x(var) * coef;
  return out;
}

template <typename F>
AffineMatrix AffineMatrix::map(F&& f) const {
  AffineMatrix out(f(constant_));
  for (const auto& [var, coef] : terms_) out.terms_.emplace(var, f(coef));
  return out;
}

AffineMatrix AffineMatrix::adjoint() const {
  return map([](const Eigen::MatrixXcd& m) -> Eigen::MatrixXcd { return m.adjoint(); });
}

AffineMatrix AffineMatrix::transpose() const {
  return map(
      [](const Eigen::MatrixXcd& m) -> Eigen::MatrixXcd { return m.transpose(); });
}

AffineMatrix AffineMatrix::vec() const {
  return map([](const Eigen::MatrixXcd& m) -> Eigen::MatrixXcd {
    return Eigen::Map<const Eigen::VectorXcd>(m.data(), m.size());
  });
}

AffineMatrix AffineMatrix::block(Eigen::Index row, Eigen::Index col,
                                 Eigen::Index rows, Eigen::Index cols) const {
  return map([&](const Eigen::MatrixXcd& m) -> Eigen::MatrixXcd {
    return m.block(row, col, rows, cols);
  });
}

AffineMatrix& AffineMatrix::operator+=(const AffineMatrix& other) {
  require_same_shape(*this, other);
  constant_ += other.constant_;
  for (const auto& [var, coef] : other.terms_) add_term(var, coef);
  return *this;
}

AffineMatrix& AffineMatrix::operator-=(const AffineMatrix& other) {
  require_same_shape(*this, other);
  constant_ -= other.constant_;
  for (const auto& [var, coef] : other.terms_) add_term(var, -coef);
  return *this;
}

AffineMatrix& AffineMatrix::operator*=(Complex scale) {
  constant_ *= scale;
  for (auto& [var, coef] : terms_) coef *= scale;
  return *this;
}

AffineMatrix operator*(const Eigen::MatrixXcd& m, const AffineMatrix& a) {
  if (m.cols() != a.rows()) throw std::invalid_argument("product shapes");
  return a.map([&](const Eigen::MatrixXcd& c) -> Eigen::MatrixXcd { return m * c; });
}

AffineMatrix operator*(const AffineMatrix& a, const Eigen::MatrixXcd& m) {
  if (a.cols() != m.rows()) throw std::invalid_argument("product shapes");
  return a.map([&](const Eigen::MatrixXcd& c) -> Eigen::MatrixXcd { return c * m; });
}

AffineMatrix kron(const AffineMatrix& a, const Eigen::MatrixXcd& m) {
  AffineMatrix out(Eigen::MatrixXcd(Eigen::kroneckerProduct(a.constant(), m)));
  for (const auto& [var, coef] : a.terms()) {
    out.add_term(var, Eigen::kroneckerProduct(coef, m).eval());
  }
  return out;
}

AffineMatrix kron(const Eigen::MatrixXcd& m, const AffineMatrix& a) {
  AffineMatrix out(Eigen::MatrixXcd(Eigen::kroneckerProduct(m, a.constant())));
  for (const auto& [var, coef] : a.terms()) {
    out.add_term(var, Eigen::kroneckerProduct(m, coef).eval());
  }
  return out;
}

AffineMatrix assemble(const std::vector<std::vector<AffineMatrix>>& grid) {
  if (grid.empty() || grid.front().empty()) return AffineMatrix(0, 0);
  const std::size_t nc = grid.front().size();
  std::vector<Eigen::Index> heights, widths, row_at{0}, col_at{0};
  for (const auto& row : grid) {
    if (row.size() != nc) throw std::invalid_argument("ragged block grid");
    heights.push_back(row.front().rows());
    row_at.push_back(row_at.back() + heights.back());
  }
  for (const auto& cell : grid.front()) {
    widths.push_back(cell.cols());
    col_at.push_back(col_at.back() + widths.back());
  }
  AffineMatrix out(row_at.back(), col_at.back());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t j = 0; j < nc; ++j) {
      const AffineMatrix& cell = grid[i][j];
      if (cell.rows() != heights[i] || cell.cols() != widths[j]) {
        throw std::invalid_argument("block grid shapes disagree");
      }
      Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(out.rows(), out.cols());
      c.block(row_at[i], col_at[j], heights[i], widths[j]) = cell.constant();
      AffineMatrix placed(c);
      for (const auto& [var, coef] : cell.terms()) {
        Eigen::MatrixXcd t = Eigen::MatrixXcd::Zero(out.rows(), out.cols());
        t.block(row_at[i], col_at[j], heights[i], widths[j]) = coef;
        placed.add_term(var, t);
      }
      out += placed;
    }
  }
  return out;
}

AffineMatrix vstack(const std::vector<AffineMatrix>& parts) {
  std::vector<std::vector<AffineMatrix>> grid;
  for (const auto& p : parts) grid.push_back({p});
  return assemble(grid);
}

Eigen::MatrixXcd ComplexMatrixVar::value(const Eigen::VectorXd& x) const {
  Eigen::MatrixXcd out(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      out(i, j) = Complex(x(real_index(i, j)), x(imag_index(i, j)));
    }
  }
  return out;
}

ComplexMatrixVar add_complex_matrix(ConeProgram& program, Eigen::Index rows,
                                    Eigen::Index cols) {
  ComplexMatrixVar v;
  v.rows = rows;
  v.cols = cols;
  v.first = program.add_variables(static_cast<int>(2 * rows * cols));
  v.expr = AffineMatrix(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      Eigen::MatrixXcd e = Eigen::MatrixXcd::Zero(rows, cols);
      e(i, j) = 1.0;
      v.expr.add_term(v.real_index(i, j), e);
      e(i, j) = Complex(0.0, 1.0);
      v.expr.add_term(v.imag_index(i, j), e);
    }
  }
  return v;
}

}  // namespace thp::conic
