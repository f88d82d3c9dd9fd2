#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "vads/core/config.hpp"
#include "vads/core/dataset.hpp"
#include "vads/core/errors.hpp"
#include "vads/core/metrics.hpp"
#include "vads/core/report.hpp"
#include "vads/core/rng.hpp"
#include "vads/data/toy.hpp"

using namespace vads;

TEST(HarmonicMean, MatchesReportedRows) {
  EXPECT_NEAR(harmonic_mean(0.754, 0.836), 0.793, 0.0005);
  EXPECT_NEAR(harmonic_mean(0.646, 0.490), 0.557, 0.0005);
  EXPECT_NEAR(harmonic_mean(0.741, 0.746), 0.743, 0.0005);
}

TEST(HarmonicMean, EqualArgumentsAndZeros) {
  for (double x : {0.0, 0.1, 0.37, 0.5, 1.0}) EXPECT_DOUBLE_EQ(harmonic_mean(x, x), x);
  EXPECT_DOUBLE_EQ(harmonic_mean(0.0, 0.9), 0.0);
  EXPECT_DOUBLE_EQ(harmonic_mean(0.9, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(harmonic_mean(0.0, 0.0), 0.0);
}

TEST(HarmonicMean, RejectsOutOfRange) {
  EXPECT_THROW(harmonic_mean(-0.1, 0.5), ValidationError);
  EXPECT_THROW(harmonic_mean(0.5, 1.01), ValidationError);
  EXPECT_THROW(harmonic_mean(std::nan(""), 0.5), ValidationError);
}

TEST(HarmonicMean, OrderingProperties) {
  Rng rng(5);
  for (int i = 0; i < 500; ++i) {
    const double u = rng.uniform();
    const double s = rng.uniform();
    const double h = harmonic_mean(u, s);
    EXPECT_DOUBLE_EQ(h, harmonic_mean(s, u));
    EXPECT_LE(h, std::sqrt(u * s) + 1e-12);
    EXPECT_LE(std::sqrt(u * s), (u + s) / 2 + 1e-12);
    EXPECT_LE(h, std::min(2 * u, 2 * s) + 1e-12);
    const double bump = std::min(1.0, u + 0.05);
    EXPECT_GE(harmonic_mean(bump, s), h - 1e-12);
  }
}

TEST(PerClassAccuracy, HandCount) {
  const std::vector<int> truth = {0, 0, 1, 1};
  const std::vector<int> pred = {0, 0, 1, 0};
  const std::vector<int> classes = {0, 1};
  const auto r = per_class_accuracy(pred, truth, classes);
  EXPECT_DOUBLE_EQ(r.mean, 0.75);
  EXPECT_TRUE(r.empty_classes.empty());
}

TEST(PerClassAccuracy, EmptyClassExcluded) {
  const std::vector<int> truth = {0, 0, 2};
  const std::vector<int> pred = {0, 1, 2};
  const std::vector<int> classes = {0, 1, 2};
  const auto r = per_class_accuracy(pred, truth, classes);
  EXPECT_DOUBLE_EQ(r.mean, 0.75);
  ASSERT_EQ(r.empty_classes.size(), 1u);
  EXPECT_EQ(r.empty_classes[0], 1);
}

TEST(PerClassAccuracy, MatchesBruteForceCounting) {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> truth(40), pred(40);
    for (auto& t : truth) t = static_cast<int>(rng.uniform_index(3));
    for (auto& p : pred) p = static_cast<int>(rng.uniform_index(3));
    const std::vector<int> classes = {0, 1, 2};
    double total = 0.0;
    int present = 0;
    for (int c : classes) {
      int hit = 0, n = 0;
      for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] != c) continue;
        ++n;
        if (pred[i] == c) ++hit;
      }
      if (n == 0) continue;
      total += static_cast<double>(hit) / n;
      ++present;
    }
    EXPECT_DOUBLE_EQ(per_class_accuracy(pred, truth, classes).mean, total / present);
  }
}

TEST(PerClassAccuracy, DuplicatingAClassLeavesMeanUnchanged) {
  std::vector<int> truth = {0, 0, 0, 1, 1, 2};
  std::vector<int> pred = {0, 1, 0, 1, 2, 2};
  const std::vector<int> classes = {0, 1, 2};
  const double before = per_class_accuracy(pred, truth, classes).mean;
  const std::size_t n = truth.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (truth[i] == 0) {
      truth.push_back(truth[i]);
      pred.push_back(pred[i]);
    }
  }
  EXPECT_DOUBLE_EQ(per_class_accuracy(pred, truth, classes).mean, before);
}

TEST(Rng, SameSeedSameStream) {
  Rng a(0), b(0);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, DifferentSeedsDiffer) {
  Rng a(0), b(1);
  EXPECT_NE(a.next_u64(), b.next_u64());
}

TEST(Rng, DerivedStreamsIndependentOfParentDraws) {
  Rng a(0);
  const Rng fresh(0);
  for (int i = 0; i < 37; ++i) a.next_u64();
  Rng d1 = a.derive("data");
  Rng d2 = fresh.derive("data");
  Rng i1 = fresh.derive("init");
  bool any_diff = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = d1.next_u64();
    EXPECT_EQ(x, d2.next_u64());
    if (x != i1.next_u64()) any_diff = true;
  }
  EXPECT_TRUE(any_diff);
}

TEST(Rng, NormalMoments) {
  Rng rng(3);
  double s = 0, s2 = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.02);
  EXPECT_NEAR(s2 / n, 1.0, 0.02);
}

TEST(Rng, StateRoundTrip) {
  Rng a(9);
  a.normal();
  Rng b(0);
  b.set_state(a.state());
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
  EXPECT_THROW(b.set_state("garbage"), LoadError);
}

TEST(Rng, ShuffleIsPermutation) {
  std::vector<std::size_t> v(50);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = i;
  Rng rng(4);
  shuffle(v, rng);
  std::set<std::size_t> seen(v.begin(), v.end());
  EXPECT_EQ(seen.size(), 50u);
}

TEST(ValidateBundle, ToyBundleIsClean) {
  EXPECT_TRUE(validate_bundle(data::make_toy({})).empty());
}

TEST(ValidateBundle, SeenAndUnseenOverlap) {
  auto b = data::make_toy({});
  b.unseen_classes.push_back(3);
  const auto v = validate_bundle(b);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].invariant, "disjointness");
  EXPECT_EQ(v[0].indices, std::vector<std::size_t>{3});
}

TEST(ValidateBundle, UnseenSampleInTrainSplit) {
  auto b = data::make_toy({});
  const std::size_t unseen_sample = b.split.test_unseen.back();
  b.split.test_unseen.pop_back();
  b.split.train_seen.push_back(unseen_sample);
  const auto v = validate_bundle(b);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].invariant, "split-membership");
  EXPECT_EQ(v[0].indices, std::vector<std::size_t>{unseen_sample});
  EXPECT_THROW(require_valid(b), ValidationError);
}

TEST(Config, DefaultsAreValid) { EXPECT_TRUE(ExperimentConfig{}.validate().empty()); }

TEST(Config, JsonRoundTripAndHash) {
  ExperimentConfig c;
  c.lambda_con = 0.5;
  c.prior_form = PriorForm::none;
  const auto back = ExperimentConfig::from_json(c.to_json());
  EXPECT_EQ(back.canonical(), c.canonical());
  EXPECT_EQ(back.hash(), c.hash());
  EXPECT_EQ(c.hash().size(), 64u);
  EXPECT_NE(c.hash(), ExperimentConfig{}.hash());
}

TEST(Config, UnknownKeyRejected) {
  auto j = ExperimentConfig{}.to_json();
  j["learning_rate"] = 0.1;
  EXPECT_THROW(ExperimentConfig::from_json(j), ValidationError);
}

TEST(Config, IllTypedValueRejected) {
  auto j = ExperimentConfig{}.to_json();
  j["epochs"] = "many";
  EXPECT_THROW(ExperimentConfig::from_json(j), ValidationError);
}

TEST(Config, ViolationsListedExhaustively) {
  ExperimentConfig c;
  c.use_vdkl = false;
  c.alpha = 2.0;
  c.tau = 0.0;
  const auto errs = c.validate();
  // lambda_con, lambda_kl, enhancement, alpha, tau
  EXPECT_EQ(errs.size(), 5u);
  EXPECT_THROW(c.check(), ValidationError);
}

TEST(Config, LconWithoutVdklIsError) {
  ExperimentConfig c;
  c.use_vdkl = false;
  c.lambda_kl = 0;
  c.use_enhancement = false;
  EXPECT_EQ(c.validate().size(), 1u);
  c.use_lcon = false;
  EXPECT_TRUE(c.validate().empty());
}

TEST(Config, ResolveDims) {
  ExperimentConfig c;
  const auto r = c.resolved(32, 8);
  EXPECT_EQ(r.d_v, 32);
  EXPECT_EQ(r.d_a, 8);
  EXPECT_EQ(r.d_z, 8);
  c.d_a = 85;
  EXPECT_THROW(c.resolved(32, 8), ValidationError);
}

TEST(Config, BenchmarkSynthesisCounts) {
  EXPECT_EQ(default_n_syn("AWA2"), 5600);
  EXPECT_EQ(default_n_syn("sun"), 100);
  EXPECT_EQ(default_n_syn("CUB"), 400);
  EXPECT_EQ(default_n_syn("toy"), 0);
}

TEST(Sha256, KnownDigest) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(EvalReport, JsonRoundTrip) {
  EvalReport r;
  r.acc = 0.5;
  r.u = 0.25;
  r.s = 0.75;
  r.h = harmonic_mean(r.u, r.s);
  r.per_class = {{"a", 1.0}, {"b", 0.0}};
  r.config_hash = "x";
  r.seed = 3;
  r.warnings = {"w"};
  const auto back = EvalReport::from_json(r.to_json());
  EXPECT_EQ(back.to_json(false), r.to_json(false));
  EXPECT_FALSE(r.to_json(false).contains("wall_clock_s"));
  EXPECT_NE(r.table().find("H"), std::string::npos);
}
