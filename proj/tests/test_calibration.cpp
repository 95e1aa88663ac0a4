#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "baca/calibration.hpp"
#include "baca/error.hpp"

using baca::BoundaryDict;
using baca::CalibratorParams;
using baca::DictEntry;
using baca::Polarity;

namespace {

Eigen::VectorXd gaussian_vector(int d, std::mt19937_64& rng, double shift = 0.0) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::VectorXd v(d);
  for (int i = 0; i < d; ++i) v(i) = n(rng) + shift;
  return v;
}

CalibratorParams random_params(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 0.5);
  CalibratorParams p = CalibratorParams::zeros(d);
  for (std::size_t i = 0; i < p.num_values(); ++i) p.at(i) = n(rng);
  return p;
}

// Two clusters: ID keys around +shift on the first axis, OOD around -shift.
void fill_separable(BoundaryDict& id, BoundaryDict& ood, int d, int per_side, std::mt19937_64& rng,
                    double shift = 2.0) {
  for (int i = 0; i < per_side; ++i) {
    Eigen::VectorXd a = gaussian_vector(d, rng);
    a(0) += shift;
    Eigen::VectorXd b = gaussian_vector(d, rng);
    b(0) -= shift;
    id.try_insert(DictEntry{a, 0.1 * i});
    ood.try_insert(DictEntry{b, 1.0 + 0.1 * i});
  }
}

double relative_error(double a, double b) {
  const double denom = std::max(std::abs(a) + std::abs(b), 1e-8);
  return std::abs(a - b) / denom;
}

}  // namespace

TEST(CalibratorParams, InitialShapeAndReadout) {
  baca::Rng rng = baca::make_rng(1);
  CalibratorParams p = CalibratorParams::initial(4, rng);
  EXPECT_EQ(p.dim(), 4);
  EXPECT_EQ(p.num_values(), 3u * 16u + 4u);
  EXPECT_TRUE(p.readout.isZero());
  EXPECT_LE((p.w_q - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff(), 0.01);
}

TEST(AttnForward, ZeroReadoutIsOneHalf) {
  baca::Rng rng = baca::make_rng(2);
  std::mt19937_64 gen(2);
  CalibratorParams p = CalibratorParams::initial(6, rng);
  Eigen::MatrixXd keys(3, 6);
  for (int r = 0; r < 3; ++r) keys.row(r) = gaussian_vector(6, gen).transpose();
  EXPECT_DOUBLE_EQ(baca::attn_forward(p, gaussian_vector(6, gen), keys), 0.5);
}

TEST(AttnForward, SingleKeyIgnoresQuery) {
  // One key: softmax weight is 1, so the output is sigmoid(readout . W_V^T k).
  std::mt19937_64 gen(3);
  CalibratorParams p = random_params(5, gen);
  Eigen::MatrixXd key = gaussian_vector(5, gen).transpose();
  const double expected = 1.0 / (1.0 + std::exp(-p.readout.dot(p.w_v.transpose() * key.row(0).transpose())));
  EXPECT_NEAR(baca::attn_forward(p, gaussian_vector(5, gen), key), expected, 1e-14);
  EXPECT_NEAR(baca::attn_forward(p, gaussian_vector(5, gen), key), expected, 1e-14);
}

TEST(AttnForward, KeyOrderDoesNotMatter) {
  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 20; ++trial) {
    CalibratorParams p = random_params(4, gen);
    Eigen::MatrixXd keys(5, 4);
    for (int r = 0; r < 5; ++r) keys.row(r) = gaussian_vector(4, gen).transpose();
    const Eigen::VectorXd q = gaussian_vector(4, gen);
    Eigen::MatrixXd reversed = keys.colwise().reverse();
    EXPECT_NEAR(baca::attn_forward(p, q, keys), baca::attn_forward(p, q, reversed), 1e-14);
  }
}

TEST(AttnForward, OutputStrictlyInsideUnitInterval) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 200; ++trial) {
    CalibratorParams p = random_params(4, gen);
    Eigen::MatrixXd keys(3, 4);
    for (int r = 0; r < 3; ++r) keys.row(r) = gaussian_vector(4, gen).transpose();
    const double a = baca::attn_forward(p, gaussian_vector(4, gen), keys);
    EXPECT_GT(a, 0.0);
    EXPECT_LT(a, 1.0);
  }
}

TEST(AttnBackward, MatchesFiniteDifferences) {
  std::mt19937_64 gen(6);
  for (int trial = 0; trial < 10; ++trial) {
    const int d = trial % 2 == 0 ? 4 : 8;
    CalibratorParams p = random_params(d, gen);
    Eigen::MatrixXd keys(3, d);
    for (int r = 0; r < 3; ++r) keys.row(r) = gaussian_vector(d, gen).transpose();
    const Eigen::VectorXd q = gaussian_vector(d, gen);
    CalibratorParams grad = CalibratorParams::zeros(d);
    const double out = baca::attn_backward(p, q, keys, 1.0, grad);
    EXPECT_EQ(out, baca::attn_forward(p, q, keys));
    const double h = 1e-5;
    for (std::size_t i = 0; i < p.num_values(); ++i) {
      CalibratorParams plus = p, minus = p;
      plus.at(i) += h;
      minus.at(i) -= h;
      const double fd = (baca::attn_forward(plus, q, keys) - baca::attn_forward(minus, q, keys)) / (2 * h);
      EXPECT_LT(relative_error(grad.at(i), fd), 1e-4) << "entry " << i;
    }
  }
}

TEST(Softmax, WeightsSumToOneForExtremeLogits) {
  // With W_V = I and readout = e_j the output is sigmoid of the weighted j-th
  // coordinate; equal key coordinates make that coordinate the softmax sum.
  std::mt19937_64 gen(7);
  CalibratorParams p = CalibratorParams::zeros(3);
  p.w_q = 50.0 * Eigen::MatrixXd::Identity(3, 3);
  p.w_k = 50.0 * Eigen::MatrixXd::Identity(3, 3);
  p.w_v = Eigen::MatrixXd::Identity(3, 3);
  p.readout << 1.0, 0.0, 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::MatrixXd keys(4, 3);
    for (int r = 0; r < 4; ++r) keys.row(r) = 10.0 * gaussian_vector(3, gen).transpose();
    keys.col(0).setConstant(0.3);
    const double a = baca::attn_forward(p, 10.0 * gaussian_vector(3, gen), keys);
    EXPECT_NEAR(std::log(a / (1.0 - a)), 0.3, 1e-12);
  }
}

TEST(Scores, SignConventions) {
  std::mt19937_64 gen(8);
  BoundaryDict id(Polarity::id, 8, 0), ood(Polarity::ood, 8, 0);
  fill_separable(id, ood, 4, 6, gen);
  baca::Rng rng = baca::make_rng(8);
  CalibratorParams p = CalibratorParams::initial(4, rng);
  const Eigen::VectorXd q = gaussian_vector(4, gen);
  EXPECT_DOUBLE_EQ(baca::s_in(p, q, id, 5), -0.5);
  EXPECT_DOUBLE_EQ(baca::s_out(p, q, ood, 5), 0.5);
  BoundaryDict empty(Polarity::id, 4, 0);
  EXPECT_THROW(baca::s_in(p, q, empty, 5), baca::ValidationError);
}

TEST(Fuse, Examples) {
  const std::vector<double> pre = {0.0, 1.0}, attn = {1.0, -1.0};
  EXPECT_EQ(baca::fuse(pre, attn, 0.5), (std::vector<double>{0.5, 0.5}));
  const std::vector<double> constant = {3.0, 3.0, 3.0};
  EXPECT_EQ(baca::minmax_normalize(constant), (std::vector<double>{0.5, 0.5, 0.5}));
  const std::vector<double> three = {0.1, -0.4, 0.9};
  const auto fused = baca::fuse(constant, three, 1.0);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(fused[i], 0.5 + three[i]);
  EXPECT_THROW(baca::fuse(pre, three, 0.5), baca::ValidationError);
  EXPECT_THROW(baca::fuse(pre, attn, -0.1), baca::ValidationError);
}

TEST(Fuse, ZeroBetaKeepsNormalizedPretrainScores) {
  std::mt19937_64 gen(9);
  std::vector<double> pre(30), attn(30);
  std::normal_distribution<double> n(0.0, 3.0);
  for (auto& v : pre) v = n(gen);
  for (auto& v : attn) v = std::tanh(n(gen));
  EXPECT_EQ(baca::fuse(pre, attn, 0.0), baca::minmax_normalize(pre));
}

TEST(CalibrationSet, LeavesSelfOut) {
  std::mt19937_64 gen(10);
  BoundaryDict id(Polarity::id, 4, 0), ood(Polarity::ood, 4, 0);
  fill_separable(id, ood, 3, 3, gen);
  const auto set = baca::build_calibration_set(id, ood, 5);
  EXPECT_EQ(set.num_id, 3u);
  EXPECT_EQ(set.num_ood, 3u);
  ASSERT_EQ(set.queries.size(), 6u);
  for (const auto& cq : set.queries) {
    const bool own_id = cq.label == Polarity::id;
    EXPECT_EQ(cq.id_keys.rows(), own_id ? 2 : 3);
    EXPECT_EQ(cq.ood_keys.rows(), own_id ? 3 : 2);
  }
}

TEST(Loss, InitialValueIsFourLogTwo) {
  std::mt19937_64 gen(11);
  BoundaryDict id(Polarity::id, 16, 0), ood(Polarity::ood, 16, 0);
  fill_separable(id, ood, 6, 10, gen);
  baca::Rng rng = baca::make_rng(11);
  CalibratorParams p_in = CalibratorParams::initial(6, rng), p_out = CalibratorParams::initial(6, rng);
  const auto set = baca::build_calibration_set(id, ood, 5);
  EXPECT_NEAR(baca::loss_only(p_in, p_out, set), 4.0 * std::log(2.0), 1e-12);
}

TEST(Loss, GradientMatchesFiniteDifferences) {
  // 100 random configurations, d in {4, 8}, k in {1, 2, 5}.
  std::mt19937_64 gen(12);
  const int dims[] = {4, 8};
  const std::size_t ks[] = {1, 2, 5};
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int d = dims[trial % 2];
    const std::size_t k = ks[trial % 3];
    BoundaryDict id(Polarity::id, 6, 0), ood(Polarity::ood, 6, 0);
    fill_separable(id, ood, d, 4, gen, 0.5);
    const auto set = baca::build_calibration_set(id, ood, k);
    CalibratorParams p_in = random_params(d, gen), p_out = random_params(d, gen);
    const auto lg = baca::loss_and_grads(p_in, p_out, set);
    EXPECT_NEAR(lg.loss, baca::loss_only(p_in, p_out, set), 1e-12);
    const double h = 1e-5;
    for (int head = 0; head < 2; ++head) {
      CalibratorParams& p = head == 0 ? p_in : p_out;
      const CalibratorParams& g = head == 0 ? lg.grad_in : lg.grad_out;
      for (std::size_t i = 0; i < p.num_values(); ++i) {
        const double keep = p.at(i);
        p.at(i) = keep + h;
        const double up = baca::loss_only(p_in, p_out, set);
        p.at(i) = keep - h;
        const double down = baca::loss_only(p_in, p_out, set);
        p.at(i) = keep;
        const double err = relative_error(g.at(i), (up - down) / (2 * h));
        worst = std::max(worst, err);
      }
    }
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(Train, LossDecreasesOnSeparableDictionaries) {
  std::mt19937_64 gen(13);
  BoundaryDict id(Polarity::id, 32, 0), ood(Polarity::ood, 32, 0);
  fill_separable(id, ood, 8, 24, gen);
  baca::Rng rng = baca::make_rng(13);
  CalibratorParams p_in = CalibratorParams::initial(8, rng), p_out = CalibratorParams::initial(8, rng);
  const auto traj = baca::train(p_in, p_out, id, ood, {});
  ASSERT_EQ(traj.size(), 200u);
  EXPECT_NEAR(traj.front(), 4.0 * std::log(2.0), 1e-12);
  EXPECT_LT(traj.back(), traj.front());
}

TEST(Train, ZeroLearningRateKeepsLossConstant) {
  std::mt19937_64 gen(14);
  BoundaryDict id(Polarity::id, 8, 0), ood(Polarity::ood, 8, 0);
  fill_separable(id, ood, 4, 6, gen);
  CalibratorParams p_in = random_params(4, gen), p_out = random_params(4, gen);
  const CalibratorParams before = p_in;
  baca::TrainOptions opts;
  opts.lr = 0.0;
  opts.iters = 7;
  const auto traj = baca::train(p_in, p_out, id, ood, opts);
  ASSERT_EQ(traj.size(), 7u);
  for (double v : traj) EXPECT_EQ(v, traj.front());
  EXPECT_EQ(p_in.w_q, before.w_q);
}

TEST(Train, SingleIterationAppliesOneStep) {
  std::mt19937_64 gen(15);
  BoundaryDict id(Polarity::id, 8, 0), ood(Polarity::ood, 8, 0);
  fill_separable(id, ood, 4, 6, gen);
  CalibratorParams p_in = random_params(4, gen), p_out = random_params(4, gen);
  CalibratorParams expect_in = p_in;
  const auto lg = baca::loss_and_grads(p_in, p_out, baca::build_calibration_set(id, ood, 5));
  expect_in.add_scaled(-0.01, lg.grad_in);
  baca::TrainOptions opts;
  opts.iters = 1;
  baca::train(p_in, p_out, id, ood, opts);
  EXPECT_EQ(p_in.w_k, expect_in.w_k);
  EXPECT_EQ(p_in.readout, expect_in.readout);
}

TEST(Train, RejectsBadOptionsAndDiverges) {
  std::mt19937_64 gen(16);
  BoundaryDict id(Polarity::id, 8, 0), ood(Polarity::ood, 8, 0);
  fill_separable(id, ood, 4, 6, gen);
  CalibratorParams p_in = random_params(4, gen), p_out = random_params(4, gen);
  baca::TrainOptions opts;
  opts.iters = 0;
  EXPECT_THROW(baca::train(p_in, p_out, id, ood, opts), baca::ValidationError);
  opts.iters = 3;
  opts.lr = -1.0;
  EXPECT_THROW(baca::train(p_in, p_out, id, ood, opts), baca::ValidationError);
  opts.lr = 1e300;
  EXPECT_THROW(baca::train(p_in, p_out, id, ood, opts), baca::RuntimeError);
}
