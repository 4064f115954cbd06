#include "thp/se_design.h"

#include <cmath>

#include <gtest/gtest.h>

#include "thp/mse.h"
#include "thp/sampling.h"

namespace thp {
namespace {

Transceiver RandomTransceiver(const SystemConfig& config, double power, Rng& rng) {
  Transceiver tx(config);
  tx.precoder() = complex_gaussian(config.n_tx(), config.total_streams(), 1.0, rng);
  tx.precoder() *= std::sqrt(power) / tx.precoder().norm();
  for (int k = 0; k < config.num_users(); ++k) {
    tx.receive_filter(k) =
        complex_gaussian(config.user(k).n_streams, config.user(k).n_rx, 0.5, rng);
    for (int j = 0; j < k; ++j) {
      tx.feedback(k, j) = complex_gaussian(config.user(k).n_streams,
                                           config.user(j).n_streams, 0.5, rng);
    }
  }
  return tx;
}

// Central-difference gradient of the averaged SMSE in the real and imaginary
// parts of every receive filter entry, with B and G held fixed.
double MaxReceiverGradient(const Transceiver& tx, const Channel& h, double error_var,
                           double noise_var) {
  const double step = 1e-5;
  double worst = 0.0;
  for (int k = 0; k < tx.num_users(); ++k) {
    for (Eigen::Index i = 0; i < tx.receive_filter(k).size(); ++i) {
      for (const Complex dir : {Complex(1.0, 0.0), Complex(0.0, 1.0)}) {
        Transceiver plus = tx, minus = tx;
        plus.receive_filter(k).data()[i] += step * dir;
        minus.receive_filter(k).data()[i] -= step * dir;
        const double g = (averaged_smse(plus, h, error_var, noise_var) -
                          averaged_smse(minus, h, error_var, noise_var)) /
                         (2.0 * step);
        worst = std::max(worst, std::abs(g));
      }
    }
  }
  return worst;
}

TEST(SeFeedbackUpdateTest, ZeroReceiverAndSingleUser) {
  const SystemConfig config = SystemConfig::Uniform(6, 3, 2, 2, 1.0);
  Rng rng = make_rng(1, 0);
  Transceiver tx = RandomTransceiver(config, 2.0, rng);
  for (int k = 0; k < 3; ++k) tx.receive_filter(k).setZero();
  const Transceiver out = se_feedback_update(tx, sample_channel(config, rng));
  EXPECT_EQ(out.feedback_matrix(), Eigen::MatrixXcd::Zero(6, 6));

  const SystemConfig single = SystemConfig::Uniform(3, 1, 2, 2, 1.0);
  const Transceiver one = RandomTransceiver(single, 1.0, rng);
  const Transceiver upd = se_feedback_update(one, sample_channel(single, rng));
  EXPECT_EQ(upd.feedback_matrix().size(), 4);
  EXPECT_EQ(upd.feedback_matrix(), Eigen::MatrixXcd::Zero(2, 2));
}

TEST(SeFeedbackUpdateTest, BeatsRandomPerturbations) {
  const SystemConfig config = SystemConfig::Uniform(6, 3, 2, 2, 1.0);
  Rng rng = make_rng(2, 0);
  const Channel h = sample_channel(config, rng);
  const Transceiver tx = se_feedback_update(RandomTransceiver(config, 4.0, rng), h);
  const double best = averaged_smse(tx, h, 0.1, 1.0);
  for (int i = 0; i < 1000; ++i) {
    Transceiver p = tx;
    for (int k = 1; k < 3; ++k) {
      for (int j = 0; j < k; ++j) p.feedback(k, j) += complex_gaussian(2, 2, 0.01, rng);
    }
    EXPECT_GE(averaged_smse(p, h, 0.1, 1.0), best);
  }
}

TEST(SeReceiverUpdateTest, NoiseDominatedLimit) {
  const SystemConfig config = SystemConfig::Uniform(4, 2, 2, 2, 1.0);
  Rng rng = make_rng(3, 0);
  const Transceiver tx = RandomTransceiver(config, 1.0, rng);
  const Transceiver out = se_receiver_update(tx, sample_channel(config, rng), 0.1, 1e12,
                                             ReceiverVariant::kInclusive);
  for (int k = 0; k < 2; ++k) EXPECT_LT(out.receive_filter(k).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(SeReceiverUpdateTest, ScalarWienerFilter) {
  const SystemConfig config = SystemConfig::Uniform(1, 1, 1, 1, 0.3);
  Transceiver tx(config);
  const Complex b(0.7, -0.4), h(1.1, 0.5);
  tx.precoder()(0, 0) = b;
  const Channel ch({Eigen::MatrixXcd::Constant(1, 1, h)});
  const Transceiver out = se_receiver_update(tx, ch, 0.2, 0.3, ReceiverVariant::kInclusive);
  const Complex expected = std::conj(b) * std::conj(h) /
                           (std::norm(h * b) + 0.3 + 0.2 * std::norm(b));
  EXPECT_NEAR(std::abs(out.receive_filter(0)(0, 0) - expected), 0.0, 1e-14);
}

TEST(SeReceiverUpdateTest, StationaryAtUpdate) {
  const SystemConfig config(6, {{2, 2}, {3, 2}, {2, 1}}, 0.8);
  Rng rng = make_rng(4, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const Channel h = sample_channel(config, rng);
    const double var = 0.05 * (trial % 4);
    Transceiver tx = RandomTransceiver(config, 5.0, rng);
    tx = se_feedback_update(
        se_receiver_update(tx, h, var, 0.8, ReceiverVariant::kInclusive), h);
    EXPECT_LE(MaxReceiverGradient(tx, h, var, 0.8), 1e-6) << "trial " << trial;
  }
}

TEST(SeReceiverUpdateTest, ErrorFreeMatchesLeastSquaresMmse) {
  const SystemConfig config = SystemConfig::Uniform(6, 3, 2, 2, 0.5);
  Rng rng = make_rng(5, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const Channel h = sample_channel(config, rng);
    const Transceiver tx = RandomTransceiver(config, 3.0, rng);
    const Transceiver out =
        se_receiver_update(tx, h, 0.0, 0.5, ReceiverVariant::kInclusive);
    for (int k = 0; k < 3; ++k) {
      // min_C ||C H B_{>=k} - [I 0]||^2 + sigma^2 ||C||^2 as a stacked least
      // squares problem in C^H.
      const int first = 2 * k;
      const Eigen::MatrixXcd hb = h.block(k) * tx.precoder().rightCols(6 - first);
      const Eigen::Index cols = hb.cols();
      Eigen::MatrixXcd a(cols + 2, 2);
      a << hb.adjoint(), std::sqrt(0.5) * Eigen::MatrixXcd::Identity(2, 2);
      Eigen::MatrixXcd target = Eigen::MatrixXcd::Zero(cols + 2, 2);
      target.topRows(2).setIdentity();
      const Eigen::MatrixXcd c_h = a.householderQr().solve(target);
      EXPECT_LT((out.receive_filter(k) - c_h.adjoint()).cwiseAbs().maxCoeff(), 1e-10);
    }
  }
}

TEST(SePrecoderStepTest, CandidateBoundAndPowerBudget) {
  const SystemConfig config = SystemConfig::Uniform(6, 3, 2, 2, 1.0);
  Rng rng = make_rng(6, 0);
  const Channel h = sample_channel(config, rng);
  const Transceiver tx = RandomTransceiver(config, 2.0, rng);
  SeDesignParams params;
  params.error_var = 0.1;
  params.power_limit = 10.0;
  const PrecoderStep step = se_precoder_step(tx, h, 1.0, params);
  ASSERT_EQ(step.status, conic::SolveStatus::kOptimal);
  EXPECT_LE(step.precoder.squaredNorm(), params.power_limit + 1e-6);
  Transceiver zero = tx;
  zero.precoder().setZero();
  EXPECT_LE(step.objective, averaged_smse(zero, h, 0.1, 1.0));
  EXPECT_LE(step.objective, averaged_smse(tx, h, 0.1, 1.0));
}

TEST(SePrecoderStepTest, ScalarMatchesGridSearch) {
  const SystemConfig config = SystemConfig::Uniform(1, 1, 1, 1, 0.2);
  Rng rng = make_rng(7, 0);
  for (int trial = 0; trial < 5; ++trial) {
    const Channel h = sample_channel(config, rng);
    Transceiver tx(config);
    tx.receive_filter(0) = complex_gaussian(1, 1, 1.0, rng);
    SeDesignParams params;
    params.error_var = 0.3;
    params.power_limit = 0.5 + trial;
    const PrecoderStep step = se_precoder_step(tx, h, 0.2, params);
    ASSERT_EQ(step.status, conic::SolveStatus::kOptimal);
    double best = std::numeric_limits<double>::infinity();
    const double radius = std::sqrt(params.power_limit);
    for (int i = 0; i < 100; ++i) {
      for (int j = 0; j < 100; ++j) {
        // Polar grid covering the disc including its boundary.
        const double rad = radius * i / 99.0;
        const double ang = 2.0 * M_PI * j / 100.0;
        tx.precoder()(0, 0) = std::polar(rad, ang);
        best = std::min(best, averaged_smse(tx, h, 0.3, 0.2));
      }
    }
    EXPECT_LE(step.objective, best + 1e-9);
    EXPECT_NEAR(step.objective, best, 1e-3);
  }
}

TEST(SeDesignTest, MonotoneTraceAndStructure) {
  const SystemConfig config = SystemConfig::Uniform(8, 3, 2, 2, 1.0);
  Rng rng = make_rng(8, 0);
  for (int trial = 0; trial < 5; ++trial) {
    const Channel h = sample_channel(config, rng);
    SeDesignParams params;
    params.error_var = 0.1;
    params.power_limit = 10.0;
    const DesignResult res = se_design(h, config, params);
    ASSERT_NE(res.trace.termination, Termination::kSolverFailure);
    for (std::size_t i = 1; i < res.trace.objective.size(); ++i) {
      EXPECT_LE(res.trace.objective[i], res.trace.objective[i - 1] + 1e-9);
    }
    EXPECT_LE(res.tx.transmit_power(), params.power_limit + 1e-6);
    EXPECT_NEAR(res.trace.final_objective(), averaged_smse(res.tx, h, 0.1, 1.0), 1e-12);
    const Eigen::MatrixXcd g = res.tx.feedback_matrix();
    for (int k = 0; k < 3; ++k) {
      EXPECT_EQ(g.block(2 * k, 2 * k, 2, 6 - 2 * k), Eigen::MatrixXcd::Zero(2, 6 - 2 * k));
    }
  }
}

TEST(SeDesignTest, RobustBeatsNonRobustOnAverageObjective) {
  const SystemConfig config = SystemConfig::Uniform(8, 3, 2, 2, 1.0);
  Rng rng = make_rng(9, 0);
  const Channel h = sample_channel(config, rng);
  SeDesignParams robust;
  robust.error_var = 0.1;
  robust.power_limit = 100.0;
  SeDesignParams naive = robust;
  naive.error_var = 0.0;
  const DesignResult r = se_design(h, config, robust);
  const DesignResult n = se_design(h, config, naive);
  EXPECT_LT(averaged_smse(r.tx, h, 0.1, 1.0), averaged_smse(n.tx, h, 0.1, 1.0));
}

}  // namespace
}  // namespace thp
