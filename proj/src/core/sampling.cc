#include "thp/sampling.h"

#include <cmath>
#include <stdexcept>

namespace thp {

Rng make_rng(std::uint64_t base_seed, std::uint64_t index,
             std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(base_seed),
                    static_cast<std::uint32_t>(base_seed >> 32),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

Eigen::MatrixXcd complex_gaussian(Eigen::Index rows, Eigen::Index cols,
                                  double var, Rng& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(var / 2.0));
  Eigen::MatrixXcd m(rows, cols);
  // Column-major fill order; part of the reproducibility contract.
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      m(i, j) = Complex(re, im);
    }
  }
  return m;
}

Channel sample_channel(const SystemConfig& config, Rng& rng) {
  std::vector<Eigen::MatrixXcd> blocks;
  for (int k = 0; k < config.num_users(); ++k) {
    blocks.push_back(
        complex_gaussian(config.user(k).n_rx, config.n_tx(), 1.0, rng));
  }
  return Channel(std::move(blocks));
}

Channel sample_channel(const SystemConfig& config, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0);
  return sample_channel(config, rng);
}

double per_entry_error_var(const SystemConfig& config, double error_var,
                           ErrorConvention convention) {
  if (convention == ErrorConvention::kPerEntry) return error_var;
  return error_var / config.n_tx();
}

std::vector<Eigen::MatrixXcd> sample_se_error(const SystemConfig& config,
                                              double error_var, Rng& rng,
                                              ErrorConvention convention) {
  if (!(error_var >= 0.0)) throw std::invalid_argument("error_var >= 0 violated");
  const double var = per_entry_error_var(config, error_var, convention);
  std::vector<Eigen::MatrixXcd> out;
  for (int k = 0; k < config.num_users(); ++k) {
    out.push_back(complex_gaussian(config.user(k).n_rx, config.n_tx(), var, rng));
  }
  return out;
}

std::vector<Eigen::MatrixXcd> sample_se_error(const SystemConfig& config,
                                              double error_var,
                                              std::uint64_t seed,
                                              ErrorConvention convention) {
  Rng rng = make_rng(seed, 0);
  return sample_se_error(config, error_var, rng, convention);
}

Eigen::VectorXcd sample_sphere(Eigen::Index n, double radius, Rng& rng) {
  Eigen::VectorXcd v = complex_gaussian(n, 1, 1.0, rng);
  const double norm = v.norm();
  if (norm == 0.0) {
    v.setZero();
    v(0) = radius;
    return v;
  }
  return v * (radius / norm);
}

std::vector<Eigen::MatrixXcd> sample_nbe_error(const SystemConfig& config,
                                               const std::vector<double>& delta,
                                               Rng& rng, bool surface_only) {
  if (static_cast<int>(delta.size()) != config.num_users()) {
    throw std::invalid_argument("one uncertainty radius per user is required");
  }
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<Eigen::MatrixXcd> out;
  for (int k = 0; k < config.num_users(); ++k) {
    if (!(delta[k] >= 0.0)) throw std::invalid_argument("delta_k >= 0 violated");
    const Eigen::Index rows = config.user(k).n_rx;
    const Eigen::Index n = rows * config.n_tx();
    double radius = delta[k];
    if (!surface_only) {
      // Radial law of a uniform point in a real ball of dimension 2n.
      radius *= std::pow(uniform(rng), 1.0 / (2.0 * static_cast<double>(n)));
    }
    Eigen::VectorXcd e = sample_sphere(n, radius, rng);
    out.push_back(Eigen::Map<Eigen::MatrixXcd>(e.data(), rows, config.n_tx()));
  }
  return out;
}

std::vector<Eigen::MatrixXcd> sample_nbe_error(const SystemConfig& config,
                                               const std::vector<double>& delta,
                                               std::uint64_t seed,
                                               bool surface_only) {
  Rng rng = make_rng(seed, 0);
  return sample_nbe_error(config, delta, rng, surface_only);
}

}  // namespace thp
