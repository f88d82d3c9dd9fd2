#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "vads/core/errors.hpp"
#include "vads/core/raw_io.hpp"
#include "vads/data/batches.hpp"
#include "vads/data/bundle_io.hpp"
#include "vads/data/toy.hpp"

#include "support/temp_dir.hpp"

using namespace vads;

TEST(Toy, CountsAndDisjointSplits) {
  const auto b = data::make_toy({});
  EXPECT_EQ(b.n_samples(), 12u * 50u);
  EXPECT_EQ(b.seen_classes.size(), 8u);
  EXPECT_EQ(b.unseen_classes.size(), 4u);
  EXPECT_EQ(b.d_v(), 32);
  EXPECT_EQ(b.d_a(), 8);
  std::set<std::size_t> all;
  for (const auto* s : {&b.split.train_seen, &b.split.test_seen, &b.split.test_unseen}) all.insert(s->begin(), s->end());
  EXPECT_EQ(all.size(), b.split.train_seen.size() + b.split.test_seen.size() + b.split.test_unseen.size());
  EXPECT_EQ(b.split.test_unseen.size(), 4u * 50u);
  for (auto i : b.split.train_seen) EXPECT_LT(b.labels[i], 8);
  EXPECT_TRUE(validate_bundle(b).empty());
}

TEST(Toy, ZeroNoiseGivesClassConstantFeatures) {
  data::ToySpec spec;
  spec.sigma = 0.0;
  const auto t = data::make_toy_with_map(spec);
  const MatrixF centroids = t.bundle.prototypes * t.map;
  for (std::size_t i = 0; i < t.bundle.n_samples(); ++i) {
    EXPECT_EQ(t.bundle.features.row(static_cast<Eigen::Index>(i)), centroids.row(t.bundle.labels[i]));
  }
}

TEST(Toy, PseudoInverseOracleClassifiesPerfectly) {
  data::ToySpec spec;
  spec.sigma = 0.0;
  const auto t = data::make_toy_with_map(spec);
  const Eigen::MatrixXd m = t.map.cast<double>();
  const Eigen::MatrixXd pinv = m.completeOrthogonalDecomposition().pseudoInverse();
  const Eigen::MatrixXd a = t.bundle.prototypes.cast<double>();
  int correct = 0;
  for (auto i : t.bundle.split.train_seen) {
    const Eigen::RowVectorXd recovered = t.bundle.features.row(static_cast<Eigen::Index>(i)).cast<double>() * pinv;
    Eigen::Index best = 0;
    (a.rowwise() - recovered).rowwise().squaredNorm().minCoeff(&best);
    if (best == t.bundle.labels[i]) ++correct;
  }
  EXPECT_EQ(correct, static_cast<int>(t.bundle.split.train_seen.size()));
}

TEST(Toy, ReproducibleAndUnseenAttributesNotInTraining) {
  const auto a = data::make_toy({});
  const auto b = data::make_toy({});
  EXPECT_EQ(a.features, b.features);
  EXPECT_EQ(a.prototypes, b.prototypes);
  for (int u : a.unseen_classes) {
    for (auto i : a.split.train_seen) EXPECT_NE(a.labels[i], u);
  }
}

TEST(Toy, SpecValidation) {
  data::ToySpec spec;
  spec.n_unseen = 1;
  EXPECT_THROW(spec.check(), ValidationError);
  spec = {};
  spec.sigma = -1;
  EXPECT_THROW(data::make_toy(spec), ValidationError);
}

TEST(BundleIo, RoundTripIsBitExact) {
  test::TempDir dir;
  const auto b = data::make_toy({});
  data::save_bundle(b, dir.path());
  const auto back = data::load_bundle(dir.path());
  EXPECT_EQ(back.features, b.features);
  EXPECT_EQ(back.prototypes, b.prototypes);
  EXPECT_EQ(back.labels, b.labels);
  EXPECT_EQ(back.seen_classes, b.seen_classes);
  EXPECT_EQ(back.unseen_classes, b.unseen_classes);
  EXPECT_EQ(back.split.train_seen, b.split.train_seen);
  EXPECT_EQ(back.split.test_seen, b.split.test_seen);
  EXPECT_EQ(back.split.test_unseen, b.split.test_unseen);
  EXPECT_EQ(back.class_names, b.class_names);
  EXPECT_EQ(back.name, b.name);
}

TEST(BundleIo, ShortFeatureFileIsLengthError) {
  test::TempDir dir;
  data::ToySpec spec;
  spec.n_seen = 2;
  spec.n_unseen = 2;
  spec.samples_per_class = 25;
  const auto b = data::make_toy(spec);
  data::save_bundle(b, dir.path());
  const auto features = dir.path() / "features.f32";
  std::filesystem::resize_file(features, static_cast<std::uintmax_t>(99 * b.d_v() * 4));
  try {
    data::load_bundle(dir.path());
    FAIL() << "expected LoadError";
  } catch (const LoadError& e) {
    EXPECT_NE(std::string(e.what()).find("features.f32"), std::string::npos) << e.what();
  }
}

TEST(BundleIo, MissingFileNamed) {
  test::TempDir dir;
  data::save_bundle(data::make_toy({}), dir.path());
  std::filesystem::remove(dir.path() / "labels.i32");
  try {
    data::load_bundle(dir.path());
    FAIL() << "expected LoadError";
  } catch (const LoadError& e) {
    EXPECT_NE(std::string(e.what()).find("labels.i32"), std::string::npos) << e.what();
  }
}

namespace {

DatasetBundle named_bundle(const std::string& name, int d_a) {
  data::ToySpec spec;
  spec.n_seen = 150;
  spec.n_unseen = 50;
  spec.d_a = d_a;
  spec.d_v = 4;
  spec.samples_per_class = 2;
  spec.test_seen_fraction = 0.5;
  auto b = data::make_toy(spec);
  b.name = name;
  return b;
}

}  // namespace

TEST(BundleIo, CubWith1024AttributesAccepted) {
  test::TempDir dir;
  data::save_bundle(named_bundle("CUB", 1024), dir.path());
  const auto b = data::load_bundle(dir.path());
  EXPECT_EQ(b.d_a(), 1024);
  EXPECT_EQ(b.unseen_classes.size(), 50u);
}

TEST(BundleIo, Awa2WithWrongAttributeWidthRejected) {
  test::TempDir dir;
  data::save_bundle(named_bundle("AWA2", 84), dir.path());
  try {
    data::load_bundle(dir.path());
    FAIL() << "expected LoadError";
  } catch (const LoadError& e) {
    EXPECT_NE(std::string(e.what()).find("dim mismatch"), std::string::npos) << e.what();
  }
  EXPECT_EQ(data::benchmark_prototype_dim("awa2"), 85);
  EXPECT_EQ(data::benchmark_prototype_dim("SUN"), 102);
  EXPECT_FALSE(data::benchmark_prototype_dim("toy").has_value());
}

TEST(BundleIo, MinmaxUsesTrainSeenStatistics) {
  test::TempDir dir;
  const auto raw = data::make_toy({});
  data::save_bundle(raw, dir.path());
  const auto b = data::load_bundle(dir.path(), {"minmax"});
  const MatrixF train = b.rows(b.split.train_seen);
  EXPECT_NEAR(train.minCoeff(), 0.0f, 1e-6f);
  EXPECT_NEAR(train.maxCoeff(), 1.0f, 1e-6f);
  EXPECT_THROW(data::load_bundle(dir.path(), {"zscore"}), ValidationError);
}

TEST(RawIo, CountMismatchNamesFile) {
  test::TempDir dir;
  const std::vector<int> v = {1, 2, 3};
  write_i32(dir.path() / "x.i32", v);
  EXPECT_EQ(read_i32(dir.path() / "x.i32", 3), v);
  EXPECT_THROW(read_i32(dir.path() / "x.i32", 4), LoadError);
}

TEST(Batches, FloorDivisionCount) {
  data::ToySpec spec;
  spec.n_seen = 10;
  spec.samples_per_class = 50;
  const auto b = data::make_toy(spec);
  ASSERT_EQ(b.split.train_seen.size(), 400u);
  data::BatchStream s(b, 128, Rng(1));
  EXPECT_EQ(s.batches_per_epoch(), 3u);
  const auto epoch = s.next_epoch();
  ASSERT_EQ(epoch.size(), 3u);
  for (const auto& batch : epoch) EXPECT_EQ(batch.labels.size(), 128u);
}

TEST(Batches, DeterministicOrderAndShuffleReplay) {
  const auto b = data::make_toy({});
  data::BatchStream s1(b, 64, Rng(7));
  data::BatchStream s2(b, 64, Rng(7));
  const auto e1 = s1.next_epoch();
  const auto e2 = s2.next_epoch();
  ASSERT_EQ(e1.size(), e2.size());
  for (std::size_t k = 0; k < e1.size(); ++k) EXPECT_EQ(e1[k].sample_ids, e2[k].sample_ids);

  std::vector<std::size_t> order = b.split.train_seen;
  Rng replay(7);
  shuffle(order, replay);
  std::multiset<int> expected;
  for (std::size_t i = 0; i < e1.size() * 64; ++i) expected.insert(b.labels[order[i]]);
  std::multiset<int> got;
  for (const auto& batch : e1) got.insert(batch.labels.begin(), batch.labels.end());
  EXPECT_EQ(got, expected);
}

TEST(Batches, PrototypeRowsMatchIndexing) {
  const auto b = data::make_toy({});
  data::BatchStream s(b, 32, Rng(2));
  for (const auto& batch : s.next_epoch()) {
    for (std::size_t r = 0; r < batch.labels.size(); ++r) {
      const auto row = static_cast<Eigen::Index>(r);
      EXPECT_EQ(batch.prototypes.row(row), b.prototypes.row(batch.labels[r]));
      EXPECT_EQ(batch.features.row(row), b.features.row(static_cast<Eigen::Index>(batch.sample_ids[r])));
    }
  }
}

TEST(Batches, EmptyTrainSplitRejected) {
  auto b = data::make_toy({});
  b.split.train_seen.clear();
  EXPECT_ANY_THROW(data::BatchStream(b, 16, Rng(0)));
}
