#include "vads/data/toy.hpp"

#include <cmath>

#include "vads/core/errors.hpp"
#include "vads/core/rng.hpp"

namespace vads::data {

void ToySpec::check() const {
  if (n_seen < 2 || n_unseen < 2) throw ValidationError("toy spec needs n_seen >= 2 and n_unseen >= 2");
  if (sigma < 0.0) throw ValidationError("toy spec needs sigma >= 0");
  if (d_v <= 0 || d_a <= 0) throw ValidationError("toy spec dims must be positive");
  if (samples_per_class < 2) throw ValidationError("toy spec needs >= 2 samples per class");
  if (test_seen_fraction <= 0.0 || test_seen_fraction >= 1.0) {
    throw ValidationError("toy spec test_seen_fraction must lie in (0,1)");
  }
}

ToyDataset make_toy_with_map(const ToySpec& spec) {
  spec.check();
  const Rng root(spec.seed);
  Rng attr_rng = root.derive("toy.attributes");
  Rng map_rng = root.derive("toy.map");
  Rng noise_rng = root.derive("toy.noise");

  const int n_classes = spec.n_seen + spec.n_unseen;
  ToyDataset out;
  DatasetBundle& b = out.bundle;
  b.name = "toy";

  b.prototypes.resize(n_classes, spec.d_a);
  for (Eigen::Index i = 0; i < b.prototypes.size(); ++i) {
    b.prototypes.data()[i] = static_cast<float>(attr_rng.uniform());
  }
  out.map.resize(spec.d_a, spec.d_v);
  for (Eigen::Index i = 0; i < out.map.size(); ++i) out.map.data()[i] = static_cast<float>(map_rng.normal());

  const MatrixF centroids = b.prototypes * out.map;
  const int per = spec.samples_per_class;
  b.features.resize(static_cast<Eigen::Index>(n_classes) * per, spec.d_v);
  b.labels.resize(static_cast<std::size_t>(n_classes) * per);
  const int n_test_seen = std::max(1, static_cast<int>(std::lround(per * spec.test_seen_fraction)));

  for (int c = 0; c < n_classes; ++c) {
    b.class_names.push_back((c < spec.n_seen ? "seen_" : "unseen_") + std::to_string(c));
    if (c < spec.n_seen) {
      b.seen_classes.push_back(c);
    } else {
      b.unseen_classes.push_back(c);
    }
    for (int k = 0; k < per; ++k) {
      const std::size_t i = static_cast<std::size_t>(c) * per + k;
      auto row = b.features.row(static_cast<Eigen::Index>(i));
      row = centroids.row(c);
      if (spec.sigma > 0.0) {
        for (Eigen::Index d = 0; d < row.size(); ++d) {
          row[d] += static_cast<float>(spec.sigma * noise_rng.normal());
        }
      }
      b.labels[i] = c;
      if (c >= spec.n_seen) {
        b.split.test_unseen.push_back(i);
      } else if (k < per - n_test_seen) {
        b.split.train_seen.push_back(i);
      } else {
        b.split.test_seen.push_back(i);
      }
    }
  }
  return out;
}

DatasetBundle make_toy(const ToySpec& spec) { return make_toy_with_map(spec).bundle; }

}  // namespace vads::data
