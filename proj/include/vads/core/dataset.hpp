#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "vads/core/matrix.hpp"

namespace vads {

struct SplitIndices {
  std::vector<std::size_t> train_seen;
  std::vector<std::size_t> test_seen;
  std::vector<std::size_t> test_unseen;
};

/// Features, labels, class split and semantic prototypes of one benchmark.
/// Class indices are dense 0..n_classes-1; class_names maps them to names.
struct DatasetBundle {
  std::string name;
  MatrixF features;        // n_samples x d_v
  std::vector<int> labels; // n_samples
  MatrixF prototypes;      // n_classes x d_a
  std::vector<int> seen_classes;
  std::vector<int> unseen_classes;
  SplitIndices split;
  std::vector<std::string> class_names;

  std::size_t n_samples() const { return static_cast<std::size_t>(features.rows()); }
  std::size_t n_classes() const { return static_cast<std::size_t>(prototypes.rows()); }
  int d_v() const { return static_cast<int>(features.cols()); }
  int d_a() const { return static_cast<int>(prototypes.cols()); }
  std::string class_name(int c) const;

  /// Rows of `features` selected by `indices`.
  MatrixF rows(const std::vector<std::size_t>& indices) const;
  std::vector<int> labels_of(const std::vector<std::size_t>& indices) const;
};

struct Violation {
  std::string invariant;  // disjointness, coverage, split-membership, ...
  std::string detail;
  std::vector<std::size_t> indices;
};

/// Empty iff every bundle invariant holds.
std::vector<Violation> validate_bundle(const DatasetBundle& bundle);

/// Throws ValidationError summarizing the violations, if any.
void require_valid(const DatasetBundle& bundle);

}  // namespace vads
