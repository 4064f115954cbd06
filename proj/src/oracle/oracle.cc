#include "thp/oracle.h"

#include <cmath>
#include <stdexcept>

#include "thp/mse.h"

namespace thp {
namespace {

double residual_value(const Eigen::MatrixXcd& d, const Eigen::VectorXcd& b0,
                      const Eigen::VectorXcd& e, double noise_term) {
  return (b0 + d * e).squaredNorm() + noise_term;
}

}  // namespace

WorstCaseResult worst_case_user_mse(const Eigen::MatrixXcd& d,
                                    const Eigen::VectorXcd& h_hat,
                                    const Eigen::VectorXcd& gbar,
                                    const Eigen::VectorXcd& c, double noise_var,
                                    double delta) {
  if (!(delta >= 0.0)) throw std::invalid_argument("delta >= 0 violated");
  if (d.cols() != h_hat.size() || d.rows() != gbar.size()) {
    throw std::invalid_argument("worst-case residual shapes disagree");
  }
  const Eigen::VectorXcd b0 = d * h_hat - gbar;
  const double noise_term = noise_var * c.squaredNorm();
  WorstCaseResult out;
  out.method = WorstCaseMethod::kExact;
  const Eigen::Index n = h_hat.size();
  if (delta == 0.0) {
    out.e = Eigen::VectorXcd::Zero(n);
    out.value = residual_value(d, b0, out.e, noise_term);
    return out;
  }

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(d.adjoint() * d);
  const Eigen::VectorXd lam = eig.eigenvalues().cwiseMax(0.0);
  const Eigen::MatrixXcd& u = eig.eigenvectors();
  const Eigen::VectorXcd g_hat = u.adjoint() * (d.adjoint() * b0);
  const double lmax = lam(n - 1);
  const double eps = 1e-12 * (1.0 + lmax);

  auto e_norm = [&](double nu) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      acc += std::norm(g_hat(i)) / ((nu - lam(i)) * (nu - lam(i)));
    }
    return std::sqrt(acc);
  };
  auto e_of = [&](double nu) {
    Eigen::VectorXcd coef(n);
    for (Eigen::Index i = 0; i < n; ++i) coef(i) = g_hat(i) / (nu - lam(i));
    return Eigen::VectorXcd(u * coef);
  };

  double lo = lmax + eps;
  if (e_norm(lo) <= delta) {
    // Top eigenspace carries (numerically) no gradient component: take the
    // stationary point outside it and complete along the top eigenvector.
    const double top_tol = 1e-10 * (1.0 + lmax);
    Eigen::VectorXcd coef = Eigen::VectorXcd::Zero(n);
    Eigen::Index top = n - 1;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (lmax - lam(i) > top_tol) coef(i) = g_hat(i) / (lmax - lam(i));
    }
    const double rest = coef.squaredNorm();
    const double fill = std::sqrt(std::max(0.0, delta * delta - rest));
    // Align the completion phase with any residual top component.
    const Complex phase =
        std::abs(g_hat(top)) > 0.0 ? g_hat(top) / std::abs(g_hat(top)) : Complex(1.0);
    coef(top) += fill * phase;
    out.e = u * coef;
    out.nu = lmax;
  } else {
    double hi = lmax + (d.adjoint() * b0).norm() / delta + eps;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if (e_norm(mid) > delta) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    out.nu = 0.5 * (lo + hi);
    out.e = e_of(out.nu);
    // Remove the bisection residual by radial projection onto the sphere.
    out.e *= delta / out.e.norm();
  }
  out.value = residual_value(d, b0, out.e, noise_term);
  return out;
}

WorstCaseResult sampled_worst_case_user_mse(const Eigen::MatrixXcd& d,
                                            const Eigen::VectorXcd& h_hat,
                                            const Eigen::VectorXcd& gbar,
                                            const Eigen::VectorXcd& c,
                                            double noise_var, double delta,
                                            int samples, Rng& rng) {
  const Eigen::VectorXcd b0 = d * h_hat - gbar;
  const double noise_term = noise_var * c.squaredNorm();
  WorstCaseResult out;
  out.method = WorstCaseMethod::kSampled;
  out.e = Eigen::VectorXcd::Zero(h_hat.size());
  out.value = residual_value(d, b0, out.e, noise_term);
  for (int i = 0; i < samples; ++i) {
    const Eigen::VectorXcd e = sample_sphere(h_hat.size(), delta, rng);
    const double v = residual_value(d, b0, e, noise_term);
    if (v > out.value) {
      out.value = v;
      out.e = e;
    }
  }
  return out;
}

MseReport worst_case_smse(const Transceiver& tx, const Channel& h_hat,
                          const std::vector<double>& delta, double noise_var) {
  if (static_cast<int>(delta.size()) != tx.num_users()) {
    throw std::invalid_argument("one uncertainty radius per user is required");
  }
  MseReport out;
  for (int k = 0; k < tx.num_users(); ++k) {
    const VectorizedResidual vr = vectorized_residual(tx, h_hat.block(k), k);
    out.per_user.push_back(
        worst_case_user_mse(vr.d, vr.h, vr.gbar, vr.c, noise_var, delta[k]).value);
    out.smse += out.per_user.back();
  }
  return out;
}

MonteCarloEstimate mc_expected_smse(const Transceiver& tx, const Channel& h_hat,
                                    double per_entry_var, double noise_var,
                                    int samples, std::uint64_t seed) {
  if (samples < 1) throw std::invalid_argument("samples >= 1 violated");
  Rng rng = make_rng(seed, 0);
  // Welford running mean and squared deviation.
  double mean = 0.0, m2 = 0.0;
  for (int i = 0; i < samples; ++i) {
    std::vector<Eigen::MatrixXcd> errors;
    for (int k = 0; k < h_hat.num_users(); ++k) {
      errors.push_back(complex_gaussian(h_hat.block(k).rows(), h_hat.block(k).cols(),
                                        per_entry_var, rng));
    }
    const double v = smse(tx, h_hat + errors, noise_var).smse;
    const double delta = v - mean;
    mean += delta / (i + 1);
    m2 += delta * (v - mean);
  }
  MonteCarloEstimate out;
  out.samples = samples;
  out.mean = mean;
  if (samples > 1) out.std_error = std::sqrt(m2 / (samples - 1) / samples);
  return out;
}

}  // namespace thp
