#include "thp/system.h"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace thp {
namespace {

[[noreturn]] void fail(const std::string& message) {
  throw std::invalid_argument(message);
}

void check_shape(const Eigen::MatrixXcd& m, Eigen::Index rows,
                 Eigen::Index cols, const std::string& what) {
  if (m.rows() != rows || m.cols() != cols) {
    std::ostringstream os;
    os << what << " has shape " << m.rows() << "x" << m.cols()
       << ", expected " << rows << "x" << cols;
    fail(os.str());
  }
}

}  // namespace

SystemConfig::SystemConfig(int n_tx, std::vector<UserDims> users,
                           double noise_var)
    : n_tx_(n_tx), users_(std::move(users)), noise_var_(noise_var) {
  if (n_tx_ < 1) fail("n_tx >= 1 violated");
  if (users_.empty()) fail("at least one user is required");
  if (!std::isfinite(noise_var_) || noise_var_ < 0.0) {
    fail("noise_var >= 0 violated");
  }
  for (std::size_t k = 0; k < users_.size(); ++k) {
    const UserDims& u = users_[k];
    std::ostringstream os;
    if (u.n_rx < 1) {
      os << "n_rx >= 1 violated for user " << k;
      fail(os.str());
    }
    if (u.n_streams < 1) {
      os << "n_streams >= 1 violated for user " << k;
      fail(os.str());
    }
    if (u.n_streams > u.n_rx) {
      os << "n_streams <= n_rx violated for user " << k << " (" << u.n_streams
         << " > " << u.n_rx << ")";
      fail(os.str());
    }
    stream_offsets_.push_back(total_streams_);
    rx_offsets_.push_back(total_rx_);
    total_streams_ += u.n_streams;
    total_rx_ += u.n_rx;
  }
  if (total_streams_ > n_tx_) {
    std::ostringstream os;
    os << "total streams L <= n_tx violated (L = " << total_streams_
       << ", n_tx = " << n_tx_ << ")";
    fail(os.str());
  }
}

SystemConfig SystemConfig::Uniform(int n_tx, int num_users, int n_rx,
                                   int n_streams, double noise_var) {
  if (num_users < 1) fail("at least one user is required");
  return SystemConfig(n_tx,
                      std::vector<UserDims>(num_users, UserDims{n_rx, n_streams}),
                      noise_var);
}

SystemConfig SystemConfig::with_noise_var(double noise_var) const {
  return SystemConfig(n_tx_, users_, noise_var);
}

Channel::Channel(std::vector<Eigen::MatrixXcd> blocks)
    : blocks_(std::move(blocks)) {}

Eigen::MatrixXcd Channel::stacked() const {
  if (blocks_.empty()) return {};
  Eigen::Index rows = 0;
  for (const auto& b : blocks_) rows += b.rows();
  Eigen::MatrixXcd h(rows, blocks_.front().cols());
  Eigen::Index r = 0;
  for (const auto& b : blocks_) {
    h.middleRows(r, b.rows()) = b;
    r += b.rows();
  }
  return h;
}

void Channel::check_against(const SystemConfig& config) const {
  if (num_users() != config.num_users()) {
    fail("channel user count differs from configuration");
  }
  for (int k = 0; k < num_users(); ++k) {
    check_shape(blocks_[k], config.user(k).n_rx, config.n_tx(),
                "channel block " + std::to_string(k));
  }
}

Channel Channel::operator+(const std::vector<Eigen::MatrixXcd>& errors) const {
  if (errors.size() != blocks_.size()) {
    fail("error list length differs from channel user count");
  }
  std::vector<Eigen::MatrixXcd> out(blocks_.size());
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    check_shape(errors[k], blocks_[k].rows(), blocks_[k].cols(),
                "error block " + std::to_string(k));
    out[k] = blocks_[k] + errors[k];
  }
  return Channel(std::move(out));
}

void validate(const CsitErrorModel& model, const SystemConfig& config) {
  if (const auto* se = std::get_if<StochasticError>(&model)) {
    if (!std::isfinite(se->error_var) || se->error_var < 0.0) {
      fail("error_var >= 0 violated");
    }
    return;
  }
  const auto& nbe = std::get<NormBoundedError>(model);
  if (static_cast<int>(nbe.delta.size()) != config.num_users()) {
    fail("one uncertainty radius per user is required");
  }
  for (double d : nbe.delta) {
    if (!std::isfinite(d) || d < 0.0) fail("delta_k >= 0 violated");
  }
}

Transceiver::Transceiver(const SystemConfig& config) {
  const int m = config.num_users();
  precoder_ = Eigen::MatrixXcd::Zero(config.n_tx(), config.total_streams());
  feedback_.resize(m);
  receive_.resize(m);
  for (int k = 0; k < m; ++k) {
    const UserDims& u = config.user(k);
    stream_sizes_.push_back(u.n_streams);
    stream_offsets_.push_back(config.stream_offset(k));
    receive_[k] = Eigen::MatrixXcd::Zero(u.n_streams, u.n_rx);
    for (int j = 0; j < k; ++j) {
      feedback_[k].push_back(
          Eigen::MatrixXcd::Zero(u.n_streams, config.user(j).n_streams));
    }
  }
}

Eigen::MatrixXcd Transceiver::precoder_block(int k) const {
  return precoder_.middleCols(stream_offsets_.at(k), stream_sizes_.at(k));
}

const Eigen::MatrixXcd& Transceiver::feedback(int k, int j) const {
  if (j >= k) throw std::out_of_range("feedback block requires j < k");
  return feedback_.at(k).at(j);
}

Eigen::MatrixXcd& Transceiver::feedback(int k, int j) {
  if (j >= k) throw std::out_of_range("feedback block requires j < k");
  return feedback_.at(k).at(j);
}

Eigen::MatrixXcd Transceiver::augmented_feedback(int k) const {
  const int total = static_cast<int>(precoder_.cols());
  Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(stream_sizes_.at(k), total);
  for (int j = 0; j < k; ++j) {
    g.middleCols(stream_offsets_[j], stream_sizes_[j]) = feedback_[k][j];
  }
  g.middleCols(stream_offsets_[k], stream_sizes_[k]).setIdentity();
  return g;
}

Eigen::MatrixXcd Transceiver::feedback_matrix() const {
  const int total = static_cast<int>(precoder_.cols());
  Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(total, total);
  for (int k = 0; k < num_users(); ++k) {
    for (int j = 0; j < k; ++j) {
      g.block(stream_offsets_[k], stream_offsets_[j], stream_sizes_[k],
              stream_sizes_[j]) = feedback_[k][j];
    }
  }
  return g;
}

Eigen::MatrixXcd Transceiver::receive_matrix() const {
  Eigen::Index rows = 0, cols = 0;
  for (const auto& c : receive_) {
    rows += c.rows();
    cols += c.cols();
  }
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(rows, cols);
  Eigen::Index r = 0, c0 = 0;
  for (const auto& c : receive_) {
    out.block(r, c0, c.rows(), c.cols()) = c;
    r += c.rows();
    c0 += c.cols();
  }
  return out;
}

void Transceiver::check_against(const SystemConfig& config) const {
  if (num_users() != config.num_users()) {
    fail("transceiver user count differs from configuration");
  }
  check_shape(precoder_, config.n_tx(), config.total_streams(), "precoder");
  for (int k = 0; k < num_users(); ++k) {
    const UserDims& u = config.user(k);
    check_shape(receive_[k], u.n_streams, u.n_rx,
                "receive filter " + std::to_string(k));
    for (int j = 0; j < k; ++j) {
      check_shape(feedback_[k][j], u.n_streams, config.user(j).n_streams,
                  "feedback block");
    }
  }
}

Transceiver identity_transceiver(const SystemConfig& config, double power) {
  Transceiver tx(config);
  const int total = config.total_streams();
  tx.precoder() = Eigen::MatrixXcd::Identity(config.n_tx(), total) *
                  std::sqrt(power / total);
  for (int k = 0; k < config.num_users(); ++k) {
    const UserDims& u = config.user(k);
    tx.receive_filter(k) = Eigen::MatrixXcd::Identity(u.n_streams, u.n_rx);
  }
  return tx;
}

void ModuloConfig::validate() const {
  if (!(base > 0.0) || !std::isfinite(base)) {
    throw std::invalid_argument("modulo base > 0 violated");
  }
}

}  // namespace thp
