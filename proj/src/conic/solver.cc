#include "thp/conic/solver.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Sparse>

namespace thp::conic {

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kOptimal:
      return "optimal";
    case SolveStatus::kInfeasible:
      return "infeasible";
    case SolveStatus::kUnbounded:
      return "unbounded";
    case SolveStatus::kNumericalFailure:
      return "numerical_failure";
  }
  return "unknown";
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;
using ConstSeg = Eigen::Ref<const VectorXd>;

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class BlockKind { kNonneg, kSoc, kPsd };

// Cone block of the standard form  G x + s = h,  s in K. PSD blocks use the
// full n*n column-major layout with the trace inner product.
struct Block {
  BlockKind kind;
  int offset = 0;
  int dim = 0;
  int order = 0;
  SpMat g;
};

struct StandardForm {
  int n = 0;
  int m = 0;
  int degree = 0;
  VectorXd c;
  VectorXd h;
  std::vector<Block> blocks;
  SpMat a;
  VectorXd b;
};

StandardForm standardize(const ConeProgram& program) {
  StandardForm sf;
  sf.n = program.num_variables();
  sf.c = program.objective();
  std::vector<Eigen::Triplet<double>> a_trip;
  std::vector<double> b_vals;
  std::vector<double> h_vals;
  const double r2 = 1.0 / std::sqrt(2.0);

  for (const ConeConstraint& con : program.constraints()) {
    if (con.kind == ConeKind::kZero) {
      const int row0 = static_cast<int>(b_vals.size());
      for (int i = 0; i < con.size; ++i) b_vals.push_back(-con.constant(i));
      for (const Triplet& t : con.terms) {
        a_trip.emplace_back(row0 + t.row, t.var, t.value);
      }
      continue;
    }
    Block blk;
    std::vector<Eigen::Triplet<double>> trip;
    VectorXd h;
    switch (con.kind) {
      case ConeKind::kNonnegative:
        blk.kind = BlockKind::kNonneg;
        blk.dim = con.size;
        sf.degree += con.size;
        h = con.constant;
        for (const Triplet& t : con.terms) trip.emplace_back(t.row, t.var, -t.value);
        break;
      case ConeKind::kSecondOrder:
        blk.kind = BlockKind::kSoc;
        blk.dim = con.size;
        sf.degree += 1;
        h = con.constant;
        for (const Triplet& t : con.terms) trip.emplace_back(t.row, t.var, -t.value);
        break;
      case ConeKind::kRotatedSecondOrder: {
        // (u, v, w) -> ((u + v)/sqrt2, (u - v)/sqrt2, w).
        blk.kind = BlockKind::kSoc;
        blk.dim = con.size;
        sf.degree += 1;
        h = con.constant;
        h(0) = r2 * (con.constant(0) + con.constant(1));
        h(1) = r2 * (con.constant(0) - con.constant(1));
        for (const Triplet& t : con.terms) {
          if (t.row == 0) {
            trip.emplace_back(0, t.var, -r2 * t.value);
            trip.emplace_back(1, t.var, -r2 * t.value);
          } else if (t.row == 1) {
            trip.emplace_back(0, t.var, -r2 * t.value);
            trip.emplace_back(1, t.var, r2 * t.value);
          } else {
            trip.emplace_back(t.row, t.var, -t.value);
          }
        }
        break;
      }
      case ConeKind::kPsd: {
        const int n = con.size;
        blk.kind = BlockKind::kPsd;
        blk.order = n;
        blk.dim = n * n;
        sf.degree += n;
        h = unpack_symmetric(con.constant, n).reshaped();
        std::vector<std::pair<int, int>> ij(con.rows());
        for (int j = 0; j < n; ++j) {
          for (int i = j; i < n; ++i) ij[packed_index(i, j, n)] = {i, j};
        }
        for (const Triplet& t : con.terms) {
          const auto [i, j] = ij[t.row];
          trip.emplace_back(i + n * j, t.var, -t.value);
          if (i != j) trip.emplace_back(j + n * i, t.var, -t.value);
        }
        break;
      }
      case ConeKind::kZero:
        break;
    }
    blk.offset = sf.m;
    blk.g.resize(blk.dim, sf.n);
    blk.g.setFromTriplets(trip.begin(), trip.end());
    blk.g.makeCompressed();
    h_vals.insert(h_vals.end(), h.data(), h.data() + h.size());
    sf.m += blk.dim;
    sf.blocks.push_back(std::move(blk));
  }
  sf.h = Eigen::Map<VectorXd>(h_vals.data(), static_cast<Eigen::Index>(h_vals.size()));
  sf.b = Eigen::Map<VectorXd>(b_vals.data(), static_cast<Eigen::Index>(b_vals.size()));
  sf.a.resize(static_cast<Eigen::Index>(b_vals.size()), sf.n);
  sf.a.setFromTriplets(a_trip.begin(), a_trip.end());
  sf.a.makeCompressed();
  return sf;
}

// Nesterov-Todd scaling of one block; lambda = W z = W^{-T} s.
struct BlockScaling {
  VectorXd d;            // nonnegative: W = diag(d)
  double beta = 1.0;     // second-order: W = beta (2 v v^T - J)
  VectorXd v;
  MatrixXd r;            // PSD: W(Z) = R^T Z R
  MatrixXd rinv;
  VectorXd lambda;       // full layout
  VectorXd lambda_diag;  // PSD eigenvalues of the scaled point
};

using Scaling = std::vector<BlockScaling>;

VectorXd soc_j(ConstSeg u) {
  VectorXd out = -u;
  out(0) = u(0);
  return out;
}

Eigen::Map<const MatrixXd> as_matrix(ConstSeg u, int n) {
  return Eigen::Map<const MatrixXd>(u.data(), n, n);
}

VectorXd as_vector(const MatrixXd& m) { return m.reshaped(); }

enum class Op { kW, kWt, kWinv, kWinvT };

VectorXd apply(const Block& blk, const BlockScaling& w, ConstSeg u, Op op) {
  switch (blk.kind) {
    case BlockKind::kNonneg:
      if (op == Op::kW || op == Op::kWt) return w.d.cwiseProduct(u);
      return u.cwiseQuotient(w.d);
    case BlockKind::kSoc: {
      if (op == Op::kW || op == Op::kWt) {
        return w.beta * (2.0 * w.v.dot(u) * w.v - soc_j(u));
      }
      const VectorXd jv = soc_j(w.v);
      return (2.0 * jv.dot(u) * jv - soc_j(u)) / w.beta;
    }
    case BlockKind::kPsd: {
      const auto m = as_matrix(u, blk.order);
      switch (op) {
        case Op::kW:
          return as_vector(w.r.transpose() * m * w.r);
        case Op::kWt:
          return as_vector(w.r * m * w.r.transpose());
        case Op::kWinv:
          return as_vector(w.rinv.transpose() * m * w.rinv);
        case Op::kWinvT:
          return as_vector(w.rinv * m * w.rinv.transpose());
      }
    }
  }
  return {};
}

VectorXd apply_all(const StandardForm& sf, const Scaling& w, const VectorXd& u,
                   Op op) {
  VectorXd out(sf.m);
  for (std::size_t i = 0; i < sf.blocks.size(); ++i) {
    const Block& blk = sf.blocks[i];
    out.segment(blk.offset, blk.dim) =
        apply(blk, w[i], u.segment(blk.offset, blk.dim), op);
  }
  return out;
}

VectorXd identity_element(const StandardForm& sf) {
  VectorXd e = VectorXd::Zero(sf.m);
  for (const Block& blk : sf.blocks) {
    switch (blk.kind) {
      case BlockKind::kNonneg:
        e.segment(blk.offset, blk.dim).setOnes();
        break;
      case BlockKind::kSoc:
        e(blk.offset) = 1.0;
        break;
      case BlockKind::kPsd:
        for (int i = 0; i < blk.order; ++i) e(blk.offset + i * (blk.order + 1)) = 1.0;
        break;
    }
  }
  return e;
}

// Jordan product u o v.
VectorXd jordan(const StandardForm& sf, const VectorXd& u, const VectorXd& v) {
  VectorXd out(sf.m);
  for (const Block& blk : sf.blocks) {
    const auto us = u.segment(blk.offset, blk.dim);
    const auto vs = v.segment(blk.offset, blk.dim);
    auto os = out.segment(blk.offset, blk.dim);
    switch (blk.kind) {
      case BlockKind::kNonneg:
        os = us.cwiseProduct(vs);
        break;
      case BlockKind::kSoc:
        os(0) = us.dot(vs);
        os.tail(blk.dim - 1) = us(0) * vs.tail(blk.dim - 1) + vs(0) * us.tail(blk.dim - 1);
        break;
      case BlockKind::kPsd: {
        const auto um = as_matrix(us, blk.order);
        const auto vm = as_matrix(vs, blk.order);
        const MatrixXd p = um * vm;
        os = (0.5 * (p + p.transpose())).reshaped();
        break;
      }
    }
  }
  return out;
}

// Solves lambda o q = r for q.
VectorXd divide_by_lambda(const StandardForm& sf, const Scaling& w,
                          const VectorXd& r) {
  VectorXd out(sf.m);
  for (std::size_t b = 0; b < sf.blocks.size(); ++b) {
    const Block& blk = sf.blocks[b];
    const VectorXd& l = w[b].lambda;
    const auto rs = r.segment(blk.offset, blk.dim);
    auto os = out.segment(blk.offset, blk.dim);
    switch (blk.kind) {
      case BlockKind::kNonneg:
        os = rs.cwiseQuotient(l);
        break;
      case BlockKind::kSoc: {
        const auto l1 = l.tail(blk.dim - 1);
        const double det = l(0) * l(0) - l1.squaredNorm();
        const double q0 = (l(0) * rs(0) - l1.dot(rs.tail(blk.dim - 1))) / det;
        os(0) = q0;
        os.tail(blk.dim - 1) = (rs.tail(blk.dim - 1) - q0 * l1) / l(0);
        break;
      }
      case BlockKind::kPsd: {
        const int n = blk.order;
        const VectorXd& ld = w[b].lambda_diag;
        const auto rm = as_matrix(rs, n);
        MatrixXd q(n, n);
        for (int j = 0; j < n; ++j) {
          for (int i = 0; i < n; ++i) q(i, j) = 2.0 * rm(i, j) / (ld(i) + ld(j));
        }
        os = q.reshaped();
        break;
      }
    }
  }
  return out;
}

double smallest_root_step(double a, double b, double c) {
  // Smallest positive root of a t^2 + 2 b t + c with c > 0.
  const double scale = std::max({std::abs(a), std::abs(b), std::abs(c)});
  if (std::abs(a) <= 1e-300 + 1e-15 * scale) {
    return b < 0.0 ? -c / (2.0 * b) : kInf;
  }
  const double disc = b * b - a * c;
  if (disc < 0.0) return kInf;
  const double sq = std::sqrt(disc);
  const double q = -(b + std::copysign(sq, b));
  double best = kInf;
  for (double root : {q / a, q != 0.0 ? c / q : kInf}) {
    if (root > 0.0) best = std::min(best, root);
  }
  return best;
}

// Largest alpha with lambda + alpha d in the cone (lambda interior).
double max_step(const StandardForm& sf, const Scaling& w, const VectorXd& d) {
  double alpha = kInf;
  for (std::size_t b = 0; b < sf.blocks.size(); ++b) {
    const Block& blk = sf.blocks[b];
    const VectorXd& l = w[b].lambda;
    const auto ds = d.segment(blk.offset, blk.dim);
    switch (blk.kind) {
      case BlockKind::kNonneg:
        for (int i = 0; i < blk.dim; ++i) {
          if (ds(i) < 0.0) alpha = std::min(alpha, -l(i) / ds(i));
        }
        break;
      case BlockKind::kSoc: {
        const auto l1 = l.tail(blk.dim - 1);
        const auto d1 = ds.tail(blk.dim - 1);
        const double qa = ds(0) * ds(0) - d1.squaredNorm();
        const double qb = l(0) * ds(0) - l1.dot(d1);
        const double qc = l(0) * l(0) - l1.squaredNorm();
        alpha = std::min(alpha, smallest_root_step(qa, qb, qc));
        break;
      }
      case BlockKind::kPsd: {
        const int n = blk.order;
        const VectorXd inv_sqrt = w[b].lambda_diag.cwiseSqrt().cwiseInverse();
        const MatrixXd m =
            inv_sqrt.asDiagonal() * as_matrix(ds, n) * inv_sqrt.asDiagonal();
        const double lmin = Eigen::SelfAdjointEigenSolver<MatrixXd>(
                                0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly)
                                .eigenvalues()(0);
        if (lmin < 0.0) alpha = std::min(alpha, -1.0 / lmin);
        break;
      }
    }
  }
  return alpha;
}

// Largest violation -min eig(u) over blocks.
double max_violation(const StandardForm& sf, const VectorXd& u) {
  double t = -kInf;
  for (const Block& blk : sf.blocks) {
    const auto us = u.segment(blk.offset, blk.dim);
    switch (blk.kind) {
      case BlockKind::kNonneg:
        t = std::max(t, -us.minCoeff());
        break;
      case BlockKind::kSoc:
        t = std::max(t, us.tail(blk.dim - 1).norm() - us(0));
        break;
      case BlockKind::kPsd: {
        const MatrixXd m = as_matrix(us, blk.order);
        t = std::max(t, -Eigen::SelfAdjointEigenSolver<MatrixXd>(
                             0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly)
                             .eigenvalues()(0));
        break;
      }
    }
  }
  return t;
}

bool compute_scaling(const StandardForm& sf, const VectorXd& s,
                     const VectorXd& z, Scaling& out) {
  out.assign(sf.blocks.size(), {});
  for (std::size_t b = 0; b < sf.blocks.size(); ++b) {
    const Block& blk = sf.blocks[b];
    BlockScaling& w = out[b];
    const auto ss = s.segment(blk.offset, blk.dim);
    const auto zs = z.segment(blk.offset, blk.dim);
    switch (blk.kind) {
      case BlockKind::kNonneg:
        if ((ss.array() <= 0.0).any() || (zs.array() <= 0.0).any()) return false;
        w.d = (ss.array() / zs.array()).sqrt();
        w.lambda = (ss.array() * zs.array()).sqrt();
        break;
      case BlockKind::kSoc: {
        const int k = blk.dim - 1;
        const double sjs = (ss(0) - ss.tail(k).norm()) * (ss(0) + ss.tail(k).norm());
        const double zjz = (zs(0) - zs.tail(k).norm()) * (zs(0) + zs.tail(k).norm());
        if (!(ss(0) > 0.0 && zs(0) > 0.0 && sjs > 0.0 && zjz > 0.0)) return false;
        const VectorXd sb = ss / std::sqrt(sjs);
        const VectorXd zb = zs / std::sqrt(zjz);
        const double gamma = std::sqrt(0.5 * (1.0 + sb.dot(zb)));
        VectorXd wv = (sb + soc_j(zb)) / (2.0 * gamma);
        w.beta = std::pow(sjs / zjz, 0.25);
        w.v = wv;
        w.v(0) += 1.0;
        w.v /= std::sqrt(2.0 * (wv(0) + 1.0));
        w.lambda = apply(blk, w, zs, Op::kW);
        break;
      }
      case BlockKind::kPsd: {
        const int n = blk.order;
        const MatrixXd sm = as_matrix(ss, n);
        const MatrixXd zm = as_matrix(zs, n);
        Eigen::LLT<MatrixXd> ls(0.5 * (sm + sm.transpose()));
        Eigen::LLT<MatrixXd> lz(0.5 * (zm + zm.transpose()));
        if (ls.info() != Eigen::Success || lz.info() != Eigen::Success) return false;
        const MatrixXd lsm = ls.matrixL();
        const MatrixXd lzm = lz.matrixL();
        Eigen::BDCSVD<MatrixXd> svd(lzm.transpose() * lsm,
                                       Eigen::ComputeFullU | Eigen::ComputeFullV);
        const VectorXd sig = svd.singularValues();
        if (!(sig.minCoeff() > 0.0)) return false;
        const VectorXd isq = sig.cwiseSqrt().cwiseInverse();
        w.r = lsm * svd.matrixV() * isq.asDiagonal();
        w.rinv = isq.asDiagonal() * svd.matrixU().transpose() * lzm.transpose();
        w.lambda_diag = sig;
        w.lambda = as_vector(MatrixXd(sig.asDiagonal()));
        break;
      }
    }
  }
  return true;
}

Scaling identity_scaling(const StandardForm& sf) {
  Scaling out(sf.blocks.size());
  for (std::size_t b = 0; b < sf.blocks.size(); ++b) {
    const Block& blk = sf.blocks[b];
    BlockScaling& w = out[b];
    switch (blk.kind) {
      case BlockKind::kNonneg:
        w.d = VectorXd::Ones(blk.dim);
        break;
      case BlockKind::kSoc:
        w.beta = 1.0;
        w.v = VectorXd::Zero(blk.dim);
        w.v(0) = 1.0;
        break;
      case BlockKind::kPsd:
        w.r = MatrixXd::Identity(blk.order, blk.order);
        w.rinv = w.r;
        break;
    }
  }
  return out;
}

// Reduced KKT system for
//   [0 A' G'; A 0 0; G 0 -W'W] [x; y; z] = [bx; by; bz]
// with X = W^{-T} G and H = X' X.
class Kkt {
 public:
  bool factor(const StandardForm& sf, const Scaling& w) {
    sf_ = &sf;
    x_.setZero(sf.m, sf.n);
    for (std::size_t b = 0; b < sf.blocks.size(); ++b) {
      fill_scaled_block(sf.blocks[b], w[b]);
    }
    h_.setZero(sf.n, sf.n);
    h_.selfadjointView<Eigen::Lower>().rankUpdate(x_.transpose());
    h_ = h_.selfadjointView<Eigen::Lower>();
    MatrixXd k = h_;
    if (sf.a.rows() > 0) k += MatrixXd(sf.a.transpose() * sf.a);
    if (!robust_llt(k, k_llt_)) return false;
    if (sf.a.rows() > 0) {
      kinv_at_ = k_llt_.solve(MatrixXd(sf.a.transpose()));
      const MatrixXd schur = sf.a * kinv_at_;
      if (!robust_llt(schur, s_llt_)) return false;
    }
    return true;
  }

  // bz is passed pre-scaled as W^{-T} bz; returns z as W z.
  void solve(const VectorXd& bx, const VectorXd& by, const VectorXd& bz_scaled,
             VectorXd& x, VectorXd& y, VectorXd& z_scaled) const {
    const VectorXd r1 = bx + x_.transpose() * bz_scaled;
    solve_reduced(r1, by, x, y);
    // Iterative refinement with residuals from X rather than the squared H.
    for (int step = 0; step < 3; ++step) {
      VectorXd e1 = r1 - x_.transpose() * (x_ * x);
      VectorXd e2 = by;
      if (sf_->a.rows() > 0) {
        e1 -= sf_->a.transpose() * y;
        e2 -= sf_->a * x;
      }
      VectorXd cx, cy;
      solve_reduced(e1, e2, cx, cy);
      x += cx;
      y += cy;
    }
    z_scaled = x_ * x - bz_scaled;
  }

 private:
  static bool robust_llt(const MatrixXd& m, Eigen::LLT<MatrixXd>& llt) {
    llt.compute(m);
    if (llt.info() == Eigen::Success) return true;
    const double base = std::max(1.0, m.diagonal().cwiseAbs().maxCoeff());
    for (double reg = 1e-13; reg < 1e-4; reg *= 100.0) {
      llt.compute(m + reg * base * MatrixXd::Identity(m.rows(), m.cols()));
      if (llt.info() == Eigen::Success) return true;
    }
    return false;
  }

  void solve_reduced(const VectorXd& r1, const VectorXd& by, VectorXd& x,
                     VectorXd& y) const {
    if (sf_->a.rows() == 0) {
      x = k_llt_.solve(r1);
      y.resize(0);
      return;
    }
    const VectorXd rhs = r1 + sf_->a.transpose() * by;
    y = s_llt_.solve(kinv_at_.transpose() * rhs - by);
    x = k_llt_.solve(rhs - sf_->a.transpose() * y);
  }

  void fill_scaled_block(const Block& blk, const BlockScaling& w) {
    auto xb = x_.middleRows(blk.offset, blk.dim);
    switch (blk.kind) {
      case BlockKind::kNonneg:
        xb = w.d.cwiseInverse().asDiagonal() * MatrixXd(blk.g);
        break;
      case BlockKind::kSoc: {
        const MatrixXd gd(blk.g);
        const VectorXd jv = soc_j(w.v);
        MatrixXd jg = -gd;
        jg.row(0) = gd.row(0);
        xb = (2.0 * jv * (jv.transpose() * gd) - jg) / w.beta;
        break;
      }
      case BlockKind::kPsd: {
        const int n = blk.order;
        std::vector<int> support;
        std::vector<int> where(n, -1);
        for (int j = 0; j < blk.g.outerSize(); ++j) {
          support.clear();
          for (SpMat::InnerIterator it(blk.g, j); it; ++it) {
            const int i = static_cast<int>(it.row()) % n;
            if (where[i] < 0) {
              where[i] = static_cast<int>(support.size());
              support.push_back(i);
            }
          }
          if (support.empty()) continue;
          const int k = static_cast<int>(support.size());
          MatrixXd f = MatrixXd::Zero(k, k);
          for (SpMat::InnerIterator it(blk.g, j); it; ++it) {
            const int i = static_cast<int>(it.row()) % n;
            const int l = static_cast<int>(it.row()) / n;
            f(where[i], where[l]) += it.value();
          }
          MatrixXd rs(n, k);
          for (int a = 0; a < k; ++a) rs.col(a) = w.rinv.col(support[a]);
          const MatrixXd p = rs * f * rs.transpose();
          xb.col(j) = p.reshaped();
          for (int i : support) where[i] = -1;
        }
        break;
      }
    }
  }

  const StandardForm* sf_ = nullptr;
  MatrixXd x_;
  MatrixXd h_;
  Eigen::LLT<MatrixXd> k_llt_;
  Eigen::LLT<MatrixXd> s_llt_;
  MatrixXd kinv_at_;
};

VectorXd g_times(const StandardForm& sf, const VectorXd& x) {
  VectorXd out(sf.m);
  for (const Block& blk : sf.blocks) out.segment(blk.offset, blk.dim) = blk.g * x;
  return out;
}

VectorXd gt_times(const StandardForm& sf, const VectorXd& z) {
  VectorXd out = VectorXd::Zero(sf.n);
  for (const Block& blk : sf.blocks) {
    out += blk.g.transpose() * z.segment(blk.offset, blk.dim);
  }
  return out;
}

bool all_finite(const VectorXd& v) { return v.allFinite(); }

}  // namespace

SolveOutcome solve(const ConeProgram& program, const SolverOptions& options) {
  const StandardForm sf = standardize(program);
  if (sf.blocks.empty()) {
    throw std::invalid_argument("cone program has no inequality cone blocks");
  }
  const int n = sf.n;
  const int p = static_cast<int>(sf.b.size());
  const double tol = options.tol;
  SolveOutcome outcome;

  const VectorXd e = identity_element(sf);
  Kkt kkt;
  {
    const Scaling w0 = identity_scaling(sf);
    if (!kkt.factor(sf, w0)) return outcome;
  }
  VectorXd x, y, s, z, tmp_x, tmp_y;
  kkt.solve(VectorXd::Zero(n), sf.b, sf.h, x, y, s);
  s = -s;
  kkt.solve(-sf.c, VectorXd::Zero(p), VectorXd::Zero(sf.m), tmp_x, y, z);
  {
    const double ts = max_violation(sf, s);
    if (ts >= -1e-8 * std::max(s.norm(), 1.0)) s += (1.0 + ts) * e;
    const double tz = max_violation(sf, z);
    if (tz >= -1e-8 * std::max(z.norm(), 1.0)) z += (1.0 + tz) * e;
  }
  double tau = 1.0;
  double kappa = 1.0;

  const double resx0 = std::max(1.0, sf.c.norm());
  const double resy0 = std::max(1.0, sf.b.norm());
  const double resz0 = std::max(1.0, sf.h.norm());

  // Certificate measures of the latest iterate. When the method cannot reach
  // `tol`, a certificate met to `inaccurate_tol` still decides the status.
  double pinf = std::numeric_limits<double>::infinity();
  double dinf = std::numeric_limits<double>::infinity();
  auto stalled = [&]() {
    if (pinf <= options.inaccurate_tol) {
      outcome.status = SolveStatus::kInfeasible;
    } else if (dinf <= options.inaccurate_tol) {
      outcome.status = SolveStatus::kUnbounded;
    }
    return outcome;
  };
  Scaling w;
  for (int iter = 0; iter <= options.max_iterations; ++iter) {
    outcome.iterations = iter;
    const VectorXd gx = g_times(sf, x);
    const VectorXd gtz = gt_times(sf, z);
    VectorXd aty = VectorXd::Zero(n);
    VectorXd ax = VectorXd::Zero(p);
    if (p > 0) {
      aty = sf.a.transpose() * y;
      ax = sf.a * x;
    }
    const VectorXd rx = aty + gtz + tau * sf.c;
    const VectorXd ry = ax - tau * sf.b;
    const VectorXd rz = s + gx - tau * sf.h;
    const double cx = sf.c.dot(x);
    const double by = p > 0 ? sf.b.dot(y) : 0.0;
    const double hz = sf.h.dot(z);
    const double rt = kappa + cx + by + hz;
    const double gap = s.dot(z);
    const double pcost = cx / tau;
    const double dcost = -(by + hz) / tau;
    const double pres = std::max(ry.norm() / resy0, rz.norm() / resz0) / tau;
    const double dres = rx.norm() / resx0 / tau;
    const double relgap = gap / (tau * tau) /
                          std::max(1.0, std::min(std::abs(pcost), std::abs(dcost)));
    if (!std::isfinite(pres) || !std::isfinite(dres) || !std::isfinite(relgap)) {
      return stalled();
    }
    if (pres <= tol && dres <= tol && relgap <= tol) {
      outcome.status = SolveStatus::kOptimal;
      outcome.primal = x / tau;
      outcome.objective = pcost + program.objective_constant();
      return outcome;
    }
    if (by + hz < 0.0) {
      pinf = (aty + gtz).norm() / resx0 / -(by + hz);
      if (pinf <= tol) {
        outcome.status = SolveStatus::kInfeasible;
        return outcome;
      }
    }
    if (cx < 0.0) {
      dinf = std::max(ax.norm() / resy0, (s + gx).norm() / resz0) / -cx;
      if (dinf <= tol) {
        outcome.status = SolveStatus::kUnbounded;
        return outcome;
      }
    }
    if (iter == options.max_iterations) return stalled();

    if (!compute_scaling(sf, s, z, w)) return stalled();
    if (!kkt.factor(sf, w)) return stalled();
    const double mu = (gap + tau * kappa) / (sf.degree + 1);
    VectorXd lambda(sf.m);
    for (std::size_t b = 0; b < sf.blocks.size(); ++b) {
      lambda.segment(sf.blocks[b].offset, sf.blocks[b].dim) = w[b].lambda;
    }
    const VectorXd lambda_sq = jordan(sf, lambda, lambda);
    const VectorXd wh = apply_all(sf, w, sf.h, Op::kWinvT);
    const VectorXd wrz = apply_all(sf, w, rz, Op::kWinvT);

    VectorXd x1, y1, z1;
    kkt.solve(-sf.c, sf.b, wh, x1, y1, z1);
    const double a1 = sf.c.dot(x1) + (p > 0 ? sf.b.dot(y1) : 0.0) + wh.dot(z1);

    VectorXd dx, dy, dz, ds;
    double dtau = 0.0, dkappa = 0.0, alpha = 0.0;
    VectorXd ds_aff, dz_aff;
    double dtau_aff = 0.0, dkappa_aff = 0.0, sigma = 0.0;
    for (int pass = 0; pass < 2; ++pass) {
      VectorXd rhs_s;
      double rhs_k;
      double eta;
      if (pass == 0) {
        rhs_s = -lambda_sq;
        rhs_k = -tau * kappa;
        eta = 0.0;
      } else {
        rhs_s = -lambda_sq - jordan(sf, ds_aff, dz_aff) + sigma * mu * e;
        rhs_k = -tau * kappa - dtau_aff * dkappa_aff + sigma * mu;
        eta = sigma;
      }
      const VectorXd q = divide_by_lambda(sf, w, rhs_s);
      VectorXd x0, y0, z0;
      kkt.solve(-(1.0 - eta) * rx, -(1.0 - eta) * ry, -(1.0 - eta) * wrz - q, x0,
                y0, z0);
      const double a0 = sf.c.dot(x0) + (p > 0 ? sf.b.dot(y0) : 0.0) + wh.dot(z0);
      dtau = (rhs_k + tau * ((1.0 - eta) * rt + a0)) / (kappa - tau * a1);
      dkappa = -(1.0 - eta) * rt - a0 - dtau * a1;
      dx = x0 + dtau * x1;
      dy = y0 + dtau * y1;
      dz = z0 + dtau * z1;
      ds = q - dz;
      double amax = std::min(max_step(sf, w, ds), max_step(sf, w, dz));
      if (dtau < 0.0) amax = std::min(amax, -tau / dtau);
      if (dkappa < 0.0) amax = std::min(amax, -kappa / dkappa);
      if (pass == 0) {
        const double alpha_aff = std::min(1.0, amax);
        sigma = std::pow(1.0 - alpha_aff, 3);
        ds_aff = ds;
        dz_aff = dz;
        dtau_aff = dtau;
        dkappa_aff = dkappa;
      } else {
        alpha = std::min(1.0, 0.99 * amax);
      }
    }
    if (!(alpha > 0.0) || !all_finite(dx) || !all_finite(dz) || !all_finite(ds)) {
      return stalled();
    }
    x += alpha * dx;
    if (p > 0) y += alpha * dy;
    z += alpha * apply_all(sf, w, dz, Op::kWinv);
    s += alpha * apply_all(sf, w, ds, Op::kWt);
    tau += alpha * dtau;
    kappa += alpha * dkappa;
  }
  return stalled();
}

}  // namespace thp::conic
