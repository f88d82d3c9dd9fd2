#include <gtest/gtest.h>

#include <cmath>

#include "vads/core/errors.hpp"
#include "vads/data/toy.hpp"
#include "vads/model/vosu.hpp"
#include "vads/nn/adam.hpp"

#include "support/gradcheck.hpp"

using namespace vads;
using model::Index;
using model::SumInit;
using model::Vosu;
using nn::Var;

namespace {

Vosu<double> make_vosu(std::uint64_t seed, Index d_a = 4, SumInit init = SumInit::identity) {
  Rng rng(seed);
  return Vosu<double>({6, d_a, 8}, rng, init);
}

double naive_ce(const MatrixD& logits, const std::vector<int>& y) {
  double total = 0.0;
  for (Index i = 0; i < logits.rows(); ++i) {
    double z = 0.0;
    for (Index c = 0; c < logits.cols(); ++c) z += std::exp(logits(i, c));
    total += -std::log(std::exp(logits(i, y[static_cast<std::size_t>(i)])) / z);
  }
  return total / static_cast<double>(logits.rows());
}

ExperimentConfig toy_stage1_config(int epochs) {
  ExperimentConfig c;
  c.d_v = 32;
  c.d_a = 8;
  c.d_z = 8;
  c.hidden_vsp = 32;
  c.lr = 1e-3;
  c.batch_size = 64;
  c.stage1_epochs = epochs;
  return c;
}

}  // namespace

TEST(PredictSemantic, ZeroWeightsGiveBiasRows) {
  auto v = make_vosu(1);
  v.vsp_params().at("vsp.w1").mutable_value().setZero();
  MatrixD bias(1, 4);
  bias << 0.1, -0.2, 0.3, 0.4;
  v.vsp_params().at("vsp.b1").mutable_value() = bias;
  Rng rng(2);
  EXPECT_EQ(v.predict_semantic(nn::normal_matrix<double>(rng, 5, 6)), bias.replicate(5, 1));
}

TEST(PredictSemantic, RowPermutationEquivariance) {
  auto v = make_vosu(3);
  Rng rng(4);
  check::scramble(v.vsp_params(), rng, 0.5);
  const MatrixD x = nn::normal_matrix<double>(rng, 5, 6);
  MatrixD px(5, 6);
  const std::vector<Index> perm = {4, 2, 0, 3, 1};
  for (Index i = 0; i < 5; ++i) px.row(i) = x.row(perm[static_cast<std::size_t>(i)]);
  const MatrixD a = v.predict_semantic(x);
  const MatrixD b = v.predict_semantic(px);
  for (Index i = 0; i < 5; ++i) EXPECT_EQ(b.row(i), a.row(perm[static_cast<std::size_t>(i)]));
  EXPECT_THROW(v.predict_semantic(MatrixD(MatrixD::Zero(2, 5))), ValidationError);
}

TEST(PredictSemantic, RegressionOracleAlignsWithPrototypes) {
  data::ToySpec spec;
  spec.sigma = 0.0;
  const auto b = data::make_toy(spec);
  Rng rng(5);
  Vosu<double> v({32, 8, 64}, rng);
  const MatrixD x = b.rows(b.split.train_seen).cast<double>();
  MatrixD target(x.rows(), 8);
  for (Index i = 0; i < x.rows(); ++i) {
    target.row(i) = b.prototypes.row(b.labels[b.split.train_seen[static_cast<std::size_t>(i)]]).cast<double>();
  }
  nn::AdamState<double> adam(v.vsp_params(), {1e-2, 0.9, 0.999, 1e-8});
  for (int step = 0; step < 1500; ++step) {
    const Var<double> diff = nn::sub(v.predict_semantic(nn::constant(x)), nn::constant(target));
    const Var<double> loss = nn::mean(nn::square(diff));
    nn::adam_step(adam, v.vsp_params(), nn::gradients(loss, v.vsp_params()));
  }
  const MatrixD pred = v.predict_semantic(x);
  for (Index i = 0; i < x.rows(); ++i) {
    EXPECT_GE(pred.row(i).dot(target.row(i)) / (pred.row(i).norm() * target.row(i).norm()), 0.95) << "row " << i;
  }
}

TEST(UpdatePrototypes, IdentityInitKeepsTable) {
  auto v = make_vosu(6);
  Rng rng(7);
  const MatrixD a = nn::uniform_matrix<double>(rng, 12, 4);
  EXPECT_EQ(v.update_prototypes(a), a);
  EXPECT_TRUE(v.cache_fresh());
}

TEST(UpdatePrototypes, DeterministicAndShapePreserving) {
  auto v = make_vosu(8, 4, SumInit::random);
  Rng rng(9);
  const MatrixD a = nn::uniform_matrix<double>(rng, 12, 4);
  const MatrixD first = v.update_prototypes(a);
  EXPECT_EQ(first.rows(), 12);
  EXPECT_EQ(v.update_prototypes(a), first);
  EXPECT_THROW(v.update_prototypes(MatrixD::Zero(3, 5)), ValidationError);
}

TEST(Stage1Loss, UniformLogitsGiveLnC) {
  auto v = make_vosu(10);
  for (std::size_t i = 0; i < v.vsp_params().size(); ++i) v.vsp_params().mutable_value(i).setZero();
  Rng rng(11);
  const MatrixD a = nn::uniform_matrix<double>(rng, 7, 4);
  const std::vector<int> y = {0, 3, 6, 2};
  EXPECT_NEAR(v.stage1_loss(nn::constant(nn::normal_matrix<double>(rng, 4, 6)), y, a).item(), std::log(7.0), 1e-12);
}

TEST(Stage1Loss, MatchesSoftmaxLogOracle) {
  auto v = make_vosu(12, 4, SumInit::random);
  Rng rng(13);
  check::scramble(v.vsp_params(), rng, 0.5);
  const MatrixD a = nn::uniform_matrix<double>(rng, 5, 4);
  const MatrixD x = nn::normal_matrix<double>(rng, 6, 6);
  const std::vector<int> y = {0, 1, 2, 3, 4, 1};
  const MatrixD updated = v.update_prototypes(a);
  const MatrixD logits = v.predict_semantic(x) * updated.transpose();
  EXPECT_NEAR(v.stage1_loss(nn::constant(x), y, a).item(), naive_ce(logits, y), 1e-6);
  EXPECT_THROW(v.stage1_loss(nn::constant(x), std::vector<int>{0, 1, 2, 3, 4, 5}, a), ValidationError);
}

TEST(CrossEntropy, PerRowShiftInvariance) {
  Rng rng(14);
  const MatrixD z = nn::normal_matrix<double>(rng, 5, 4);
  MatrixD shifted = z;
  for (Index i = 0; i < 5; ++i) shifted.row(i).array() += 10.0 * rng.normal();
  const std::vector<Index> t = {0, 1, 2, 3, 0};
  EXPECT_NEAR(nn::cross_entropy<double>(nn::constant(z), t).item(), nn::cross_entropy<double>(nn::constant(shifted), t).item(),
              1e-12);
}

TEST(CrossEntropy, DominantTrueLogitGivesZero) {
  MatrixD z = MatrixD::Zero(2, 3);
  z(0, 1) = 1e3;
  z(1, 2) = 1e3;
  const std::vector<Index> t = {1, 2};
  EXPECT_NEAR(nn::cross_entropy<double>(nn::constant(z), t).item(), 0.0, 1e-12);
}

TEST(Consistency, IdentityMapIsZero) {
  auto v = make_vosu(15);
  Rng rng(16);
  v.update_prototypes(nn::uniform_matrix<double>(rng, 6, 4));
  EXPECT_EQ(v.stage2_consistency().item(), 0.0);
}

TEST(Consistency, UnitShiftGivesWidth) {
  auto v = make_vosu(17, 85);
  v.sum_params().at("sum.b0").mutable_value().setOnes();
  Rng rng(18);
  v.update_prototypes(nn::uniform_matrix<double>(rng, 10, 85));
  EXPECT_NEAR(v.stage2_consistency().item(), 85.0, 1e-9);
}

TEST(Consistency, MatchesElementwiseAbsoluteOracle) {
  auto v = make_vosu(19, 4, SumInit::random);
  Rng rng(20);
  const MatrixD a = nn::uniform_matrix<double>(rng, 9, 4);
  const MatrixD updated = v.update_prototypes(a);
  const MatrixD twice = v.update_prototypes(updated);
  double total = 0.0;
  for (Index i = 0; i < 9; ++i) {
    for (Index d = 0; d < 4; ++d) total += std::abs(twice(i, d) - updated(i, d));
  }
  v.update_prototypes(a);
  EXPECT_NEAR(v.stage2_consistency().item(), total / 9.0, 1e-6);
  EXPECT_GE(v.stage2_consistency().item(), 0.0);
}

TEST(Consistency, StaleCacheIsError) {
  auto v = make_vosu(21);
  EXPECT_THROW(v.stage2_consistency(), ValidationError);
  Rng rng(22);
  v.update_prototypes(nn::uniform_matrix<double>(rng, 6, 4));
  v.sum_params().mutable_value(0)(0, 0) += 0.1;
  EXPECT_FALSE(v.cache_fresh());
  EXPECT_THROW(v.stage2_consistency(), ValidationError);
}

TEST(Stage1, ZeroEpochsLeaveParameters) {
  const auto b = data::make_toy({});
  Rng rng(23);
  Vosu<float> v({32, 8, 32}, rng);
  const auto vsp = v.vsp_params();
  const auto sum = v.sum_params();
  const auto r = model::run_stage1(v, b, toy_stage1_config(0), Rng(1));
  EXPECT_TRUE(r.loss_curve.empty());
  EXPECT_TRUE(v.vsp_params() == vsp);
  EXPECT_TRUE(v.sum_params() == sum);
}

TEST(Stage1, LossDecreasesOverFiftyEpochs) {
  const auto b = data::make_toy({});
  Rng rng(24);
  Vosu<float> v({32, 8, 32}, rng);
  const auto r = model::run_stage1(v, b, toy_stage1_config(50), Rng(2));
  ASSERT_EQ(r.loss_curve.size(), 50u);
  EXPECT_LT(r.loss_curve.back(), r.loss_curve.front());
  EXPECT_TRUE(v.cache_fresh());
}

TEST(Stage1, FixedSeedIsDeterministic) {
  const auto b = data::make_toy({});
  Rng r1(25), r2(25);
  Vosu<float> v1({32, 8, 32}, r1);
  Vosu<float> v2({32, 8, 32}, r2);
  model::run_stage1(v1, b, toy_stage1_config(5), Rng(3));
  model::run_stage1(v2, b, toy_stage1_config(5), Rng(3));
  EXPECT_TRUE(v1.vsp_params() == v2.vsp_params());
  EXPECT_TRUE(v1.sum_params() == v2.sum_params());
}

TEST(Cosine, MatrixIsSymmetricWithUnitDiagonal) {
  Rng rng(26);
  const MatrixF a = nn::uniform_matrix<float>(rng, 6, 5);
  const MatrixF c = model::cosine_matrix(a);
  EXPECT_LE((c - c.transpose()).cwiseAbs().maxCoeff(), 1e-6f);
  for (Index i = 0; i < 6; ++i) EXPECT_NEAR(c(i, i), 1.0f, 1e-6f);
  EXPECT_THROW(model::mean_offdiagonal_cosine(a.topRows(1)), ValidationError);
}
