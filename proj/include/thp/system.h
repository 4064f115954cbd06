#pragma once

#include <complex>
#include <cstdint>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace thp {

using Complex = std::complex<double>;

struct UserDims {
  int n_rx = 1;
  int n_streams = 1;
};

/// Antenna, user and stream dimensions of the multiuser downlink.
///
/// Construction validates the dimensional invariants and throws
/// std::invalid_argument with a message naming the violated one.
class SystemConfig {
 public:
  SystemConfig(int n_tx, std::vector<UserDims> users, double noise_var);

  /// Every user gets the same receive-antenna and stream count.
  static SystemConfig Uniform(int n_tx, int num_users, int n_rx, int n_streams,
                              double noise_var);

  int n_tx() const { return n_tx_; }
  int num_users() const { return static_cast<int>(users_.size()); }
  const UserDims& user(int k) const { return users_.at(k); }
  const std::vector<UserDims>& users() const { return users_; }
  double noise_var() const { return noise_var_; }

  int total_streams() const { return total_streams_; }
  int total_rx() const { return total_rx_; }
  // First column of user k's precoder block inside B.
  int stream_offset(int k) const { return stream_offsets_.at(k); }
  // First row of user k's channel block inside the stacked channel.
  int rx_offset(int k) const { return rx_offsets_.at(k); }

  SystemConfig with_noise_var(double noise_var) const;

 private:
  int n_tx_;
  std::vector<UserDims> users_;
  double noise_var_;
  int total_streams_ = 0;
  int total_rx_ = 0;
  std::vector<int> stream_offsets_;
  std::vector<int> rx_offsets_;
};

/// Per-user channel blocks H_k (n_rx x n_tx).
class Channel {
 public:
  Channel() = default;
  explicit Channel(std::vector<Eigen::MatrixXcd> blocks);

  int num_users() const { return static_cast<int>(blocks_.size()); }
  const Eigen::MatrixXcd& block(int k) const { return blocks_.at(k); }
  const std::vector<Eigen::MatrixXcd>& blocks() const { return blocks_; }

  /// Row-stacked matrix [H_1; H_2; ...].
  Eigen::MatrixXcd stacked() const;

  /// Throws std::invalid_argument if block shapes disagree with `config`.
  void check_against(const SystemConfig& config) const;

  Channel operator+(const std::vector<Eigen::MatrixXcd>& errors) const;

 private:
  std::vector<Eigen::MatrixXcd> blocks_;
};

/// Gaussian CSIT error with E{E_k E_k^H} = error_var * I.
struct StochasticError {
  double error_var = 0.0;
};

/// Frobenius-norm bounded CSIT error, ||E_k||_F <= delta[k].
struct NormBoundedError {
  std::vector<double> delta;
};

using CsitErrorModel = std::variant<StochasticError, NormBoundedError>;

/// Throws std::invalid_argument on negative or non-finite parameters, or on a
/// radius list whose length differs from the user count.
void validate(const CsitErrorModel& model, const SystemConfig& config);

/// Precoder B, strictly block-lower-triangular feedback and block-diagonal
/// receive filters.
///
/// Only the strictly-lower feedback blocks are stored; the identity block of
/// the augmented row is implied.
class Transceiver {
 public:
  Transceiver() = default;
  /// Zero precoder, zero feedback and zero receive filters.
  explicit Transceiver(const SystemConfig& config);

  const Eigen::MatrixXcd& precoder() const { return precoder_; }
  Eigen::MatrixXcd& precoder() { return precoder_; }
  Eigen::MatrixXcd precoder_block(int k) const;

  /// Feedback block G_{k,j} for j < k.
  const Eigen::MatrixXcd& feedback(int k, int j) const;
  Eigen::MatrixXcd& feedback(int k, int j);

  const Eigen::MatrixXcd& receive_filter(int k) const {
    return receive_.at(k);
  }
  Eigen::MatrixXcd& receive_filter(int k) { return receive_.at(k); }

  /// [G_{k,1} ... G_{k,k-1}  I  0], of size L_k x L.
  Eigen::MatrixXcd augmented_feedback(int k) const;
  /// Full L x L strictly block-lower-triangular feedback matrix.
  Eigen::MatrixXcd feedback_matrix() const;
  /// Block-diagonal global receive matrix.
  Eigen::MatrixXcd receive_matrix() const;

  double transmit_power() const { return precoder_.squaredNorm(); }
  int num_users() const { return static_cast<int>(stream_sizes_.size()); }
  int n_tx() const { return static_cast<int>(precoder_.rows()); }
  int streams(int k) const { return stream_sizes_.at(k); }
  int stream_offset(int k) const { return stream_offsets_.at(k); }

  /// Throws std::invalid_argument when any block shape disagrees with
  /// `config`.
  void check_against(const SystemConfig& config) const;

 private:
  Eigen::MatrixXcd precoder_;
  // feedback_[k][j], j < k.
  std::vector<std::vector<Eigen::MatrixXcd>> feedback_;
  std::vector<Eigen::MatrixXcd> receive_;
  std::vector<int> stream_sizes_;
  std::vector<int> stream_offsets_;
};

/// Identity-pattern starting point: B is the first L columns of the n_tx
/// identity scaled so that ||B||_F^2 = power, C_k are rectangular identities
/// and all feedback blocks are zero.
Transceiver identity_transceiver(const SystemConfig& config, double power);

struct ModuloConfig {
  /// Default suits unit-energy QPSK, points (+-1 +-j)/sqrt(2).
  double base = 2.0 * 1.4142135623730951;

  void validate() const;
};

struct MseReport {
  std::vector<double> per_user;
  double smse = 0.0;
};

}  // namespace thp
