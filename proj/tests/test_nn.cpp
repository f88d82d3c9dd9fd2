#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "vads/core/errors.hpp"
#include "vads/nn/adam.hpp"
#include "vads/nn/checkpoint.hpp"
#include "vads/nn/mlp.hpp"
#include "vads/nn/softmax.hpp"

#include "support/gradcheck.hpp"
#include "support/temp_dir.hpp"

using namespace vads;
using nn::Activation;
using nn::Index;
using nn::MlpSpec;
using nn::ParamSet;
using nn::Var;

namespace {

MlpSpec two_layer() { return MlpSpec::make({5, 7, 3}, Activation::leaky_relu, Activation::sigmoid); }

}  // namespace

TEST(Forward, IdentityNetworkIsIdentity) {
  const auto spec = MlpSpec::make({4, 4}, Activation::identity, Activation::identity);
  ParamSet<double> p;
  p.add("f.w0", MatrixD::Identity(4, 4));
  p.add("f.b0", MatrixD::Zero(1, 4));
  Rng rng(1);
  const MatrixD x = nn::normal_matrix<double>(rng, 6, 4);
  EXPECT_EQ(nn::forward_value(spec, p, "f", x), x);
}

TEST(Forward, ReluOfNegativePreactivationsIsZero) {
  const auto spec = MlpSpec::make({3, 2}, Activation::relu, Activation::relu);
  ParamSet<double> p;
  p.add("f.w0", MatrixD::Zero(3, 2));
  p.add("f.b0", MatrixD::Constant(1, 2, -1.0));
  const MatrixD x = MatrixD::Random(5, 3);
  EXPECT_TRUE(nn::forward_value(spec, p, "f", x).isZero());
}

TEST(Forward, MatchesHandComposedAlgebra) {
  const auto spec = two_layer();
  ParamSet<double> p;
  Rng rng(2);
  nn::init_mlp(spec, p, "f", rng, 0.7);
  check::scramble(p, rng, 0.3);
  const MatrixD x = nn::normal_matrix<double>(rng, 9, 5);
  MatrixD h = x * p.at("f.w0").value();
  h.rowwise() += p.at("f.b0").value().row(0);
  h = h.unaryExpr([](double v) { return v > 0 ? v : 0.2 * v; });
  MatrixD o = h * p.at("f.w1").value();
  o.rowwise() += p.at("f.b1").value().row(0);
  o = o.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
  EXPECT_LE((nn::forward_value(spec, p, "f", x) - o).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Forward, WidthMismatchRejected) {
  const auto spec = two_layer();
  ParamSet<double> p;
  Rng rng(3);
  nn::init_mlp(spec, p, "f", rng);
  EXPECT_THROW(nn::forward_value(spec, p, "f", MatrixD(MatrixD::Zero(2, 4))), ValidationError);
}

TEST(Forward, RowPermutationEquivariance) {
  const auto spec = two_layer();
  ParamSet<double> p;
  Rng rng(4);
  nn::init_mlp(spec, p, "f", rng, 0.5);
  const MatrixD x = nn::normal_matrix<double>(rng, 8, 5);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(8);
  perm.setIdentity();
  std::vector<std::size_t> order(8);
  for (std::size_t i = 0; i < 8; ++i) order[i] = i;
  shuffle(order, rng);
  for (std::size_t i = 0; i < 8; ++i) perm.indices()[static_cast<Index>(i)] = static_cast<int>(order[i]);
  const MatrixD px = perm * x;
  EXPECT_EQ(nn::forward_value(spec, p, "f", px), perm * nn::forward_value(spec, p, "f", x));
}

TEST(MlpSpec, RejectsEmptyAndNonPositive) {
  EXPECT_THROW((MlpSpec{{4}, {}}.check()), ValidationError);
  EXPECT_THROW((MlpSpec{{4, 0}, {Activation::relu}}.check()), ValidationError);
  EXPECT_EQ(nn::activation_from_string("identity"), Activation::identity);
  EXPECT_THROW(nn::activation_from_string("tanh"), ValidationError);
}

TEST(Gradients, HalfSquaredNormClosedForm) {
  // Row-vector convention: y = x W, so d(0.5 |y|^2)/dW = x^T y, the transpose
  // view of (W x) x^T.
  Rng rng(5);
  ParamSet<double> p;
  p.add("w", nn::normal_matrix<double>(rng, 4, 3));
  const MatrixD x = nn::normal_matrix<double>(rng, 1, 4);
  const Var<double> y = nn::matmul(nn::constant(x), p.at("w"));
  const Var<double> loss = nn::scale(nn::sum(nn::square(y)), 0.5);
  const auto g = nn::gradients(loss, p);
  const MatrixD expected = x.transpose() * (x * p.at("w").value());
  EXPECT_LE((g[0] - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Gradients, PenaltyOnUnitNormLinearCritic) {
  ParamSet<double> p;
  MatrixD w(3, 1);
  w << 0.6, 0.0, 0.8;
  p.add("w", w);
  Rng rng(6);
  Var<double> x(nn::normal_matrix<double>(rng, 5, 3), true);
  const Var<double> d = nn::matmul(x, p.at("w"));
  const auto gx = nn::grad(nn::sum(d), {x}, true)[0];
  const Var<double> norms = nn::sqrt(nn::sum_cols(nn::square(gx)));
  const Var<double> penalty = nn::mean(nn::square(nn::add_scalar(norms, -1.0)));
  EXPECT_NEAR(penalty.item(), 0.0, 1e-12);
  const auto g = nn::gradients(penalty, p);
  EXPECT_LE(g[0].cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Gradients, SecondOrderMatchesFiniteDifferences) {
  ParamSet<double> p;
  Rng rng(7);
  const auto spec = MlpSpec::make({3, 6, 1}, Activation::sigmoid, Activation::identity);
  nn::init_mlp(spec, p, "d", rng, 0.8);
  const MatrixD x0 = nn::normal_matrix<double>(rng, 4, 3);
  auto loss = [&] {
    Var<double> x(x0, true);
    const auto gx = nn::grad(nn::sum(nn::forward(spec, p, "d", x)), {x}, true)[0];
    return nn::mean(nn::square(nn::add_scalar(nn::sqrt(nn::sum_cols(nn::square(gx))), -1.0)));
  };
  EXPECT_LE(check::gradcheck(loss, {{"d", &p}}).max_rel_error, 1e-4);
}

TEST(Gradients, KinkCrossingsAreRemeasuredInsideTheSmoothRegion) {
  ParamSet<double> p;
  MatrixD w(1, 3);
  w << 4e-4, -0.7, 1.3;
  p.add("w", w);
  const auto result = check::gradcheck([&] { return nn::sum(nn::abs(p.at("w"))); }, {{"w", &p}});
  EXPECT_EQ(result.refined, 1u);
  EXPECT_LE(result.max_rel_error, 1e-9);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  ParamSet<double> p;
  p.add("w", MatrixD::Constant(2, 2, 1.5));
  nn::AdamState<double> s(p, {1e-2, 0.5, 0.999, 1e-8});
  nn::adam_step(s, p, {MatrixD::Zero(2, 2)});
  EXPECT_EQ(s.step, 1);
  EXPECT_EQ(p.value(0), MatrixD::Constant(2, 2, 1.5));
}

TEST(Adam, FirstStepFromZeroMoments) {
  ParamSet<double> p;
  p.add("w", MatrixD::Zero(1, 3));
  const double lr = 1e-3, eps = 1e-8;
  nn::AdamState<double> s(p, {lr, 0.5, 0.999, eps});
  MatrixD g(1, 3);
  g << 2.0, -0.5, 1e-3;
  nn::adam_step(s, p, {g});
  for (Index i = 0; i < 3; ++i) {
    const double expected = -lr * g(0, i) / (std::abs(g(0, i)) + eps);
    EXPECT_NEAR(p.value(0)(0, i), expected, 1e-15);
  }
}

TEST(Adam, ConstantGradientTendsToSignStep) {
  ParamSet<double> p;
  p.add("w", MatrixD::Zero(1, 2));
  const double lr = 1e-3;
  nn::AdamState<double> s(p, {lr, 0.5, 0.999, 1e-8});
  MatrixD g(1, 2);
  g << 3.0, -0.02;
  MatrixD before;
  for (int k = 0; k < 500; ++k) {
    before = p.value(0);
    nn::adam_step(s, p, {g});
  }
  const MatrixD delta = p.value(0) - before;
  EXPECT_NEAR(delta(0, 0), -lr, 1e-9);
  EXPECT_NEAR(delta(0, 1), lr, 1e-9);
}

TEST(Adam, ZeroLearningRateIsIdentity) {
  ParamSet<double> p;
  Rng rng(8);
  p.add("w", nn::normal_matrix<double>(rng, 3, 3));
  const MatrixD start = p.value(0);
  nn::AdamState<double> s(p, {0.0, 0.5, 0.999, 1e-8});
  for (int k = 0; k < 10; ++k) nn::adam_step(s, p, {nn::normal_matrix<double>(rng, 3, 3)});
  EXPECT_EQ(p.value(0), start);
}

TEST(Adam, ShapeMismatchRejected) {
  ParamSet<double> p;
  p.add("w", MatrixD::Zero(2, 2));
  nn::AdamState<double> s(p, {});
  EXPECT_THROW(nn::adam_step(s, p, {MatrixD::Zero(2, 3)}), ValidationError);
  EXPECT_THROW(nn::adam_step(s, p, {}), ValidationError);
}

TEST(ParamSet, DuplicateNamesRejectedAndCopiesAreDeep) {
  ParamSet<float> p;
  p.add("a", MatrixF::Ones(1, 2));
  EXPECT_THROW(p.add("a", MatrixF::Ones(1, 2)), ValidationError);
  ParamSet<float> q = p;
  q.mutable_value(0)(0, 0) = 7.0f;
  EXPECT_EQ(p.value(0)(0, 0), 1.0f);
}

namespace {

nn::Checkpoint sample_checkpoint() {
  Rng rng(9);
  nn::Checkpoint ck;
  ParamSet<float> a;
  a.add("x.w0", nn::normal_matrix<float>(rng, 3, 4));
  a.add("x.b0", nn::normal_matrix<float>(rng, 1, 4));
  ParamSet<float> b;
  b.add("prior", nn::normal_matrix<float>(rng, 1, 5));
  ck.sets = {{"alpha", a}, {"beta", b}};
  ck.config_hash = "abc";
  ck.rng_state = rng.state();
  ck.metadata = {{"trained", true}};
  return ck;
}

}  // namespace

TEST(Checkpoint, RoundTripIsBitExact) {
  test::TempDir dir;
  const auto ck = sample_checkpoint();
  nn::save_checkpoint(ck, dir.path());
  const auto loaded = nn::load_checkpoint(dir.path(), std::string("abc"));
  EXPECT_TRUE(loaded.warnings.empty());
  EXPECT_TRUE(loaded.checkpoint.set("alpha") == ck.set("alpha"));
  EXPECT_TRUE(loaded.checkpoint.set("beta") == ck.set("beta"));
  EXPECT_EQ(loaded.checkpoint.rng_state, ck.rng_state);
  EXPECT_EQ(loaded.checkpoint.metadata, ck.metadata);
  EXPECT_THROW(loaded.checkpoint.set("gamma"), LoadError);
}

TEST(Checkpoint, HashMismatchWarnsAndLoads) {
  test::TempDir dir;
  nn::save_checkpoint(sample_checkpoint(), dir.path());
  const auto loaded = nn::load_checkpoint(dir.path(), std::string("other"));
  ASSERT_EQ(loaded.warnings.size(), 1u);
  EXPECT_TRUE(loaded.checkpoint.has_set("alpha"));
}

TEST(Checkpoint, TruncatedArrayIsCorrupt) {
  test::TempDir dir;
  nn::save_checkpoint(sample_checkpoint(), dir.path());
  std::filesystem::resize_file(dir.path() / "alpha.x.w0.f32", 8);
  EXPECT_THROW(nn::load_checkpoint(dir.path()), nn::CorruptCheckpointError);
}

TEST(Checkpoint, DigestChangesWithContent) {
  test::TempDir d1, d2;
  auto ck = sample_checkpoint();
  nn::save_checkpoint(ck, d1.path());
  ck.sets[1].second.mutable_value(0)(0, 0) += 1.0f;
  nn::save_checkpoint(ck, d2.path());
  EXPECT_NE(nn::checkpoint_digest(d1.path()), nn::checkpoint_digest(d2.path()));
}

TEST(LinearSoftmax, SeparableProblemFitsExactly) {
  Rng rng(10);
  MatrixF x(40, 2);
  std::vector<Index> y(40);
  for (Index i = 0; i < 40; ++i) {
    const bool pos = i % 2 == 0;
    x(i, 0) = static_cast<float>((pos ? 2.0 : -2.0) + 0.3 * rng.normal());
    x(i, 1) = static_cast<float>(rng.normal());
    y[static_cast<std::size_t>(i)] = pos ? 1 : 0;
  }
  nn::SoftmaxTrainOptions opts;
  opts.epochs = 50;
  opts.batch_size = 8;
  opts.lr = 1e-2;
  Rng train_rng(11);
  const auto model = nn::train_linear_softmax(x, y, 2, opts, train_rng);
  EXPECT_EQ(model.predict(x), y);
}
