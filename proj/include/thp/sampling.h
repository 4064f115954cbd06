#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "thp/system.h"

namespace thp {

using Rng = std::mt19937_64;

/// Independent generator for (base seed, index, stream). Distinct streams keep
/// channel draws stable when other draws are added.
Rng make_rng(std::uint64_t base_seed, std::uint64_t index,
             std::uint64_t stream = 0);

/// Circular complex Gaussian matrix with per-entry variance `var`.
Eigen::MatrixXcd complex_gaussian(Eigen::Index rows, Eigen::Index cols,
                                  double var, Rng& rng);

/// Unit-variance i.i.d. entries.
Channel sample_channel(const SystemConfig& config, Rng& rng);
Channel sample_channel(const SystemConfig& config, std::uint64_t seed);

enum class ErrorConvention {
  /// Per-entry variance error_var / n_tx, so that E{E_k E_k^H} = error_var I.
  kCovarianceNormalized,
  /// Per-entry variance error_var.
  kPerEntry,
};

double per_entry_error_var(const SystemConfig& config, double error_var,
                           ErrorConvention convention);

std::vector<Eigen::MatrixXcd> sample_se_error(const SystemConfig& config,
                                              double error_var, Rng& rng,
                                              ErrorConvention convention =
                                                  ErrorConvention::kCovarianceNormalized);
std::vector<Eigen::MatrixXcd> sample_se_error(
    const SystemConfig& config, double error_var, std::uint64_t seed,
    ErrorConvention convention = ErrorConvention::kCovarianceNormalized);

/// ||E_k||_F <= delta[k]; uniform in the ball, or on the sphere when
/// `surface_only`.
std::vector<Eigen::MatrixXcd> sample_nbe_error(const SystemConfig& config,
                                               const std::vector<double>& delta,
                                               Rng& rng, bool surface_only);
std::vector<Eigen::MatrixXcd> sample_nbe_error(const SystemConfig& config,
                                               const std::vector<double>& delta,
                                               std::uint64_t seed,
                                               bool surface_only);

/// Uniform point on the sphere of radius `radius` in C^n.
Eigen::VectorXcd sample_sphere(Eigen::Index n, double radius, Rng& rng);

}  // namespace thp
