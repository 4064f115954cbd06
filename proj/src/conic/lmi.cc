#include "thp/conic/lmi.h"

#include <stdexcept>

namespace thp::conic {
namespace {

void require_hermitian(const Eigen::MatrixXcd& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("matrix is not square");
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw std::invalid_argument("matrix is not Hermitian");
  }
}

void require_scalar(const AffineMatrix& t) {
  if (t.rows() != 1 || t.cols() != 1) {
    throw std::invalid_argument("expected a 1x1 expression");
  }
}

// Appends real parts (and imaginary parts when `with_imag`) of vec(a) as rows
// starting at `row0`.
void append_rows(ConeConstraint& c, int row0, const AffineMatrix& a,
                 bool with_imag) {
  const Eigen::Index n = a.rows() * a.cols();
  auto put = [&](const Eigen::MatrixXcd& m, int var) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const Complex v = m(i % a.rows(), i / a.rows());
      const int re_row = row0 + static_cast<int>(i);
      const int im_row = row0 + static_cast<int>(n + i);
      if (var < 0) {
        c.constant(re_row) = v.real();
        if (with_imag) c.constant(im_row) = v.imag();
        continue;
      }
      if (v.real() != 0.0) c.terms.push_back({re_row, var, v.real()});
      if (with_imag && v.imag() != 0.0) c.terms.push_back({im_row, var, v.imag()});
    }
  };
  put(a.constant(), -1);
  for (const auto& [var, coef] : a.terms()) put(coef, var);
}

}  // namespace

AffineMatrix schur_lift(const AffineMatrix& t, const AffineMatrix& r) {
  require_scalar(t);
  if (r.cols() != 1) throw std::invalid_argument("schur_lift expects a column");
  const Eigen::Index m = r.rows();
  return assemble({{t, r.adjoint()},
                   {r, AffineMatrix(Eigen::MatrixXcd::Identity(m, m))}});
}

AffineMatrix s_lemma_lift(const RobustLmiSpec& spec) {
  if (spec.rho < 0.0) throw std::invalid_argument("rho >= 0 violated");
  if (spec.multiplier < 0) throw std::invalid_argument("missing multiplier");
  const Eigen::Index n = spec.a.rows();
  const Eigen::Index p = spec.p.rows();
  if (spec.a.cols() != n || spec.p.cols() != n || spec.q.cols() != n) {
    throw std::invalid_argument("robust LMI shapes disagree");
  }
  AffineMatrix top_left = spec.a;
  top_left.add_term(spec.multiplier, -spec.q.adjoint() * spec.q);
  AffineMatrix bottom_right(p, p);
  bottom_right.add_term(spec.multiplier, Eigen::MatrixXcd::Identity(p, p));
  const AffineMatrix off = -spec.rho * spec.p;
  return assemble({{top_left, off.adjoint()}, {off, bottom_right}});
}

Eigen::MatrixXd embed_complex(const Eigen::MatrixXcd& a) {
  require_hermitian(a);
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd out(2 * n, 2 * n);
  out << a.real(), -a.imag(), a.imag(), a.real();
  return out;
}

AffineMatrix embed_complex(const AffineMatrix& a) {
  AffineMatrix out(embed_complex(a.constant()).cast<Complex>().eval());
  for (const auto& [var, coef] : a.terms()) {
    out.add_term(var, embed_complex(coef).cast<Complex>());
  }
  return out;
}

void add_lmi(ConeProgram& program, const AffineMatrix& a) {
  const AffineMatrix e = embed_complex(a);
  const int n = static_cast<int>(e.rows());
  ConeConstraint c;
  c.kind = ConeKind::kPsd;
  c.size = n;
  c.constant.setZero(n * (n + 1) / 2);
  auto put = [&](const Eigen::MatrixXcd& m, int var) {
    for (int j = 0; j < n; ++j) {
      for (int i = j; i < n; ++i) {
        const double v = m(i, j).real();
        if (var < 0) {
          c.constant(packed_index(i, j, n)) = v;
        } else if (v != 0.0) {
          c.terms.push_back({packed_index(i, j, n), var, v});
        }
      }
    }
  };
  put(e.constant(), -1);
  for (const auto& [var, coef] : e.terms()) put(coef, var);
  program.add_constraint(std::move(c));
}

void add_soc(ConeProgram& program, const AffineMatrix& t, const AffineMatrix& w) {
  require_scalar(t);
  const int n = static_cast<int>(w.rows() * w.cols());
  ConeConstraint c;
  c.kind = ConeKind::kSecondOrder;
  c.size = 1 + 2 * n;
  c.constant.setZero(c.size);
  append_rows(c, 0, t, false);
  append_rows(c, 1, w, true);
  program.add_constraint(std::move(c));
}

void add_rotated_soc(ConeProgram& program, const AffineMatrix& u,
                     const AffineMatrix& v, const AffineMatrix& w) {
  require_scalar(u);
  require_scalar(v);
  const int n = static_cast<int>(w.rows() * w.cols());
  ConeConstraint c;
  c.kind = ConeKind::kRotatedSecondOrder;
  c.size = 2 + 2 * n;
  c.constant.setZero(c.size);
  append_rows(c, 0, u, false);
  append_rows(c, 1, v, false);
  append_rows(c, 2, w, true);
  program.add_constraint(std::move(c));
}

void add_nonnegative(ConeProgram& program, const AffineMatrix& a) {
  ConeConstraint c;
  c.kind = ConeKind::kNonnegative;
  c.size = static_cast<int>(a.rows() * a.cols());
  c.constant.setZero(c.size);
  append_rows(c, 0, a, false);
  program.add_constraint(std::move(c));
}

void add_zero(ConeProgram& program, const AffineMatrix& a) {
  ConeConstraint c;
  c.kind = ConeKind::kZero;
  c.size = static_cast<int>(2 * a.rows() * a.cols());
  c.constant.setZero(c.size);
  append_rows(c, 0, a, true);
  program.add_constraint(std::move(c));
}

}  // namespace thp::conic
