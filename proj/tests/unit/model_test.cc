#include <cmath>

#include <gtest/gtest.h>

#include "thp/modulo.h"
#include "thp/mse.h"
#include "thp/sampling.h"
#include "thp/system.h"

namespace thp {
namespace {

const double kA = 2.0 * std::sqrt(2.0);

Transceiver RandomTransceiver(const SystemConfig& config, Rng& rng) {
  Transceiver tx(config);
  tx.precoder() = complex_gaussian(config.n_tx(), config.total_streams(), 1.0, rng);
  for (int k = 0; k < config.num_users(); ++k) {
    tx.receive_filter(k) =
        complex_gaussian(config.user(k).n_streams, config.user(k).n_rx, 1.0, rng);
    for (int j = 0; j < k; ++j) {
      tx.feedback(k, j) = complex_gaussian(config.user(k).n_streams,
                                           config.user(j).n_streams, 1.0, rng);
    }
  }
  return tx;
}

TEST(SystemConfigTest, RejectsTooManyStreams) {
  try {
    SystemConfig::Uniform(3, 2, 2, 2, 1.0);
    FAIL() << "expected rejection";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("L <= n_tx"), std::string::npos);
  }
  EXPECT_THROW(SystemConfig::Uniform(4, 1, 1, 2, 1.0), std::invalid_argument);
  EXPECT_THROW(SystemConfig::Uniform(4, 1, 2, 2, -1.0), std::invalid_argument);
  EXPECT_THROW(SystemConfig(4, {}, 1.0), std::invalid_argument);
}

TEST(SystemConfigTest, OffsetsAndStackedChannel) {
  const SystemConfig config(5, {{2, 1}, {3, 2}}, 0.5);
  EXPECT_EQ(config.total_streams(), 3);
  EXPECT_EQ(config.stream_offset(1), 1);
  EXPECT_EQ(config.rx_offset(1), 2);
  Rng rng = make_rng(1, 0);
  const Channel h = sample_channel(config, rng);
  const Eigen::MatrixXcd stacked = h.stacked();
  ASSERT_EQ(stacked.rows(), 5);
  EXPECT_EQ(stacked.topRows(2), h.block(0));
  EXPECT_EQ(stacked.bottomRows(3), h.block(1));
}

TEST(TransceiverTest, StructureAndIdentityPattern) {
  const SystemConfig config = SystemConfig::Uniform(6, 2, 2, 2, 1.0);
  const Transceiver tx = identity_transceiver(config, 4.0);
  EXPECT_NEAR(tx.transmit_power(), 4.0, 1e-12);
  EXPECT_THROW(tx.feedback(0, 1), std::out_of_range);
  EXPECT_THROW(tx.feedback(1, 1), std::out_of_range);
  const Eigen::MatrixXcd gbar = tx.augmented_feedback(1);
  EXPECT_EQ(gbar.block(0, 2, 2, 2), Eigen::MatrixXcd::Identity(2, 2));
  EXPECT_EQ(gbar.block(0, 0, 2, 2), Eigen::MatrixXcd::Zero(2, 2));
  const Eigen::MatrixXcd c = tx.receive_matrix();
  EXPECT_EQ(c.block(0, 2, 2, 2), Eigen::MatrixXcd::Zero(2, 2));
  EXPECT_EQ(tx.feedback_matrix().triangularView<Eigen::Upper>().toDenseMatrix(),
            Eigen::MatrixXcd::Zero(4, 4));
}

TEST(ModuloTest, FixedExamples) {
  const ModuloConfig cfg;
  EXPECT_EQ(modulo(Complex(0.0, 0.0), cfg), Complex(0.0, 0.0));
  EXPECT_NEAR(std::abs(modulo(Complex(kA, 0.0), cfg)), 0.0, 1e-15);
  const Complex out = modulo(Complex(0.3 * kA, 0.6 * kA), cfg);
  EXPECT_NEAR(out.real(), 0.3 * kA, 1e-14);
  EXPECT_NEAR(out.imag(), -0.4 * kA, 1e-14);
}

TEST(ModuloTest, RangeAndIdempotence) {
  const ModuloConfig cfg;
  Rng rng = make_rng(3, 0);
  const Eigen::MatrixXcd x = complex_gaussian(2000, 1, 50.0, rng);
  const Eigen::VectorXcd once = modulo(Eigen::VectorXcd(x), cfg);
  const Eigen::VectorXcd twice = modulo(once, cfg);
  for (Eigen::Index i = 0; i < once.size(); ++i) {
    EXPECT_GE(once(i).real(), -kA / 2);
    EXPECT_LT(once(i).real(), kA / 2);
    EXPECT_GE(once(i).imag(), -kA / 2);
    EXPECT_LT(once(i).imag(), kA / 2);
    EXPECT_EQ(once(i), twice(i));
  }
  EXPECT_THROW(ModuloConfig{-1.0}.validate(), std::invalid_argument);
}

TEST(ThpEncodeTest, NoFeedbackNoWrap) {
  const SystemConfig config = SystemConfig::Uniform(4, 2, 2, 2, 1.0);
  Rng rng = make_rng(4, 0);
  Transceiver tx(config);
  tx.precoder() = complex_gaussian(4, 4, 1.0, rng);
  const Eigen::VectorXcd u = Eigen::VectorXcd::Constant(4, Complex(0.5, -0.5));
  const ThpEncoding enc = thp_encode(u, tx, ModuloConfig{100.0});
  EXPECT_EQ(enc.v, u);
  EXPECT_TRUE(enc.x.isApprox(tx.precoder() * u));
}

TEST(ThpEncodeTest, SingleUserIsPlainModulo) {
  const SystemConfig config = SystemConfig::Uniform(3, 1, 2, 2, 1.0);
  Transceiver tx(config);
  const Eigen::VectorXcd u = (Eigen::VectorXcd(2) << Complex(3.0, -4.0), Complex(0.1, 2.0)).finished();
  EXPECT_EQ(thp_encode(u, tx, ModuloConfig{}).v, modulo(u, ModuloConfig{}));
}

TEST(ThpEncodeTest, MatchesScratchRecursion) {
  const SystemConfig config(6, {{2, 2}, {2, 1}, {3, 2}}, 1.0);
  Rng rng = make_rng(5, 0);
  const Transceiver tx = RandomTransceiver(config, rng);
  const ModuloConfig cfg;
  const Eigen::VectorXcd u = complex_gaussian(5, 1, 1.0, rng);
  const ThpEncoding enc = thp_encode(u, tx, cfg);
  // Entry-by-entry recursion over the full lower-triangular feedback matrix.
  const Eigen::MatrixXcd g = tx.feedback_matrix();
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(5);
  const int user_of[] = {0, 0, 1, 2, 2};
  const int start_of[] = {0, 2, 3};
  for (int i = 0; i < 5; ++i) {
    Complex acc = u(i);
    for (int j = 0; j < start_of[user_of[i]]; ++j) acc -= g(i, j) * v(j);
    const double re = acc.real() - kA * std::floor(acc.real() / kA + 0.5);
    const double im = acc.imag() - kA * std::floor(acc.imag() / kA + 0.5);
    v(i) = Complex(re, im);
  }
  EXPECT_TRUE(enc.v.isApprox(v, 1e-13));
  EXPECT_TRUE(enc.x.isApprox(tx.precoder() * v, 1e-13));
}

TEST(MseTest, PerfectEqualization) {
  const SystemConfig config = SystemConfig::Uniform(2, 1, 2, 2, 0.0);
  Transceiver tx(config);
  tx.precoder().setIdentity();
  tx.receive_filter(0).setIdentity();
  const Eigen::MatrixXcd h = Eigen::MatrixXcd::Identity(2, 2);
  EXPECT_EQ(per_user_mse(tx, h, 0, 0.0), 0.0);
  tx.receive_filter(0) = Eigen::MatrixXcd::Identity(2, 2) / std::sqrt(2.0);
  tx.precoder() *= std::sqrt(2.0);
  EXPECT_NEAR(per_user_mse(tx, h, 0, 1.0), 1.0, 1e-14);
}

TEST(MseTest, MonteCarloWithoutModulo) {
  const SystemConfig config(4, {{2, 1}, {2, 2}}, 0.3);
  Rng rng = make_rng(6, 0);
  Transceiver tx = RandomTransceiver(config, rng);
  tx.precoder() *= 0.5;
  const Channel h = sample_channel(config, rng);
  const int k = 1;
  const Eigen::MatrixXcd chb = tx.receive_filter(k) * h.block(k) * tx.precoder();
  const Eigen::MatrixXcd gbar = tx.augmented_feedback(k);
  const int n = 1000000;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXcd v = complex_gaussian(3, 1, 1.0, rng);
    const Eigen::VectorXcd noise = complex_gaussian(2, 1, 0.3, rng);
    acc += (chb * v + tx.receive_filter(k) * noise - gbar * v).squaredNorm();
  }
  const double expected = per_user_mse(tx, h.block(k), k, 0.3);
  EXPECT_NEAR(acc / n, expected, 0.01 * expected);
}

TEST(MseTest, AveragedSmseReductions) {
  const SystemConfig config = SystemConfig::Uniform(5, 2, 2, 2, 0.7);
  Rng rng = make_rng(7, 0);
  Transceiver tx = RandomTransceiver(config, rng);
  const Channel h = sample_channel(config, rng);
  EXPECT_NEAR(averaged_smse(tx, h, 0.0, 0.7), smse(tx, h, 0.7).smse, 1e-12);
  const MseReport r = smse(tx, h, 0.7);
  EXPECT_NEAR(r.per_user[0] + r.per_user[1], r.smse, 1e-12 * r.smse);

  tx.precoder().setZero();
  double expected = 0.0;
  for (int k = 0; k < 2; ++k) {
    expected += tx.augmented_feedback(k).squaredNorm() +
                0.7 * tx.receive_filter(k).squaredNorm();
  }
  EXPECT_NEAR(averaged_smse(tx, h, 0.4, 0.7), expected, 1e-12);
}

TEST(MseTest, AveragedSmseMonotoneInErrorVar) {
  const SystemConfig config = SystemConfig::Uniform(5, 2, 2, 2, 0.7);
  Rng rng = make_rng(8, 0);
  const Transceiver tx = RandomTransceiver(config, rng);
  const Channel h = sample_channel(config, rng);
  double prev = averaged_smse(tx, h, 0.0, 0.7);
  for (double var = 0.05; var < 1.0; var += 0.05) {
    const double cur = averaged_smse(tx, h, var, 0.7);
    EXPECT_GE(cur, prev);
    prev = cur;
  }
}

TEST(MseTest, AveragedSmseMatchesErrorMonteCarlo) {
  const SystemConfig config = SystemConfig::Uniform(4, 2, 2, 2, 0.5);
  Rng rng = make_rng(9, 0);
  const Transceiver tx = RandomTransceiver(config, rng);
  const Channel h = sample_channel(config, rng);
  const double var = 0.1;
  const int n = 100000;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += smse(tx, h + sample_se_error(config, var, rng, ErrorConvention::kPerEntry),
                0.5)
               .smse;
  }
  const double expected = averaged_smse(tx, h, var, 0.5);
  EXPECT_NEAR(acc / n, expected, 0.01 * expected);
}

TEST(VectorizedResidualTest, IdentityKronecker) {
  const SystemConfig config = SystemConfig::Uniform(2, 1, 2, 2, 1.0);
  Transceiver tx(config);
  tx.precoder().setIdentity();
  tx.receive_filter(0).setIdentity();
  Rng rng = make_rng(10, 0);
  const Eigen::MatrixXcd h = complex_gaussian(2, 2, 1.0, rng);
  const VectorizedResidual vr = vectorized_residual(tx, h, 0);
  EXPECT_EQ(vr.d, Eigen::MatrixXcd::Identity(4, 4));
  EXPECT_TRUE(vr.residual.isApprox(vec(h - Eigen::MatrixXcd::Identity(2, 2))));
}

TEST(VectorizedResidualTest, MatchesTraceFormUnderError) {
  const SystemConfig config(5, {{2, 2}, {3, 1}, {2, 1}}, 0.4);
  Rng rng = make_rng(11, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const Transceiver tx = RandomTransceiver(config, rng);
    const Channel h = sample_channel(config, rng);
    const auto e = sample_nbe_error(config, {0.3, 0.2, 0.1}, rng, false);
    for (int k = 0; k < 3; ++k) {
      EXPECT_NEAR(vec(e[k]).norm(), e[k].norm(), 1e-14);
      const VectorizedResidual vr = vectorized_residual(tx, h.block(k), k);
      const double vector_form =
          (vr.d * (vr.h + vec(e[k])) - vr.gbar).squaredNorm() +
          0.4 * vr.c.squaredNorm();
      const double trace_form = per_user_mse(tx, h.block(k) + e[k], k, 0.4);
      EXPECT_NEAR(vector_form, trace_form, 1e-10 * trace_form);
      EXPECT_TRUE(vr.residual.isApprox(
          vec(tx.receive_filter(k) * h.block(k) * tx.precoder() -
              tx.augmented_feedback(k)),
          1e-12));
    }
  }
}

TEST(SamplingTest, ChannelStatistics) {
  const SystemConfig config = SystemConfig::Uniform(10, 5, 2, 2, 1.0);
  Rng rng = make_rng(12, 0);
  Complex mean = 0.0;
  double power = 0.0;
  int count = 0;
  while (count < 100000) {
    const Channel h = sample_channel(config, rng);
    for (const auto& b : h.blocks()) {
      mean += b.sum();
      power += b.squaredNorm();
      count += static_cast<int>(b.size());
    }
  }
  EXPECT_LT(std::abs(mean / static_cast<double>(count)), 0.02);
  EXPECT_NEAR(power / count, 1.0, 0.02);
}

TEST(SamplingTest, SeErrorCovariance) {
  const SystemConfig config = SystemConfig::Uniform(4, 2, 3, 1, 1.0);
  Rng rng = make_rng(13, 0);
  const double var = 0.2;
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(3, 3);
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const auto e = sample_se_error(config, var, rng);
    acc += e[0] * e[0].adjoint();
  }
  acc /= n;
  const Eigen::MatrixXcd target = var * Eigen::MatrixXcd::Identity(3, 3);
  EXPECT_LT((acc - target).norm(), 0.05 * target.norm());
  EXPECT_DOUBLE_EQ(per_entry_error_var(config, var, ErrorConvention::kPerEntry), var);
  EXPECT_DOUBLE_EQ(
      per_entry_error_var(config, var, ErrorConvention::kCovarianceNormalized),
      var / 4);
}

TEST(SamplingTest, NormBoundedErrors) {
  const SystemConfig config = SystemConfig::Uniform(4, 2, 2, 2, 1.0);
  Rng rng = make_rng(14, 0);
  const auto zero = sample_nbe_error(config, {0.0, 0.0}, rng, false);
  EXPECT_EQ(zero[0].norm(), 0.0);
  for (int i = 0; i < 100; ++i) {
    const auto surface = sample_nbe_error(config, {0.3, 0.1}, rng, true);
    EXPECT_NEAR(surface[0].norm(), 0.3, 1e-12);
    EXPECT_NEAR(surface[1].norm(), 0.1, 1e-12);
    const auto ball = sample_nbe_error(config, {0.3, 0.1}, rng, false);
    EXPECT_LE(ball[0].norm(), 0.3 + 1e-15);
    EXPECT_LE(ball[1].norm(), 0.1 + 1e-15);
  }
}

TEST(SamplingTest, SeedsAreReproducible) {
  const SystemConfig config = SystemConfig::Uniform(4, 2, 2, 2, 1.0);
  EXPECT_EQ(sample_channel(config, 42).stacked(), sample_channel(config, 42).stacked());
  EXPECT_NE(sample_channel(config, 42).stacked(), sample_channel(config, 43).stacked());
}

}  // namespace
}  // namespace thp
