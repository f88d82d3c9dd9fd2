#pragma once

#include <cstdint>

#include "vads/core/dataset.hpp"

namespace vads::data {

/// Synthetic benchmark with a known linear attribute-to-feature map.
struct ToySpec {
  int n_seen = 8;
  int n_unseen = 4;
  int d_v = 32;
  int d_a = 8;
  int samples_per_class = 50;
  double sigma = 0.1;
  /// Fraction of each seen class's samples held out as test_seen.
  double test_seen_fraction = 0.2;
  std::uint64_t seed = 0;

  void check() const;
};

struct ToyDataset {
  DatasetBundle bundle;
  MatrixF map;  // d_a x d_v ground-truth M, features = a_c * M + sigma * eps
};

/// Classes 0..n_seen-1 are seen, n_seen.. are unseen. Attributes are
/// i.i.d. U[0,1], M is i.i.d. N(0,1).
ToyDataset make_toy_with_map(const ToySpec& spec);
DatasetBundle make_toy(const ToySpec& spec);

}  // namespace vads::data
