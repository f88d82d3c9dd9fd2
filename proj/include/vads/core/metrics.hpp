#pragma once

#include <span>
#include <string>
#include <vector>

namespace vads {

/// 2US/(U+S); 0 when U+S = 0. Throws ValidationError outside [0,1].
double harmonic_mean(double unseen, double seen);

struct PerClassAccuracy {
  /// (class, accuracy) for every class that had at least one sample.
  std::vector<std::pair<int, double>> per_class;
  double mean = 0.0;
  /// Classes listed in `classes` with no test sample.
  std::vector<int> empty_classes;
};

/// Mean over `classes` of per-class top-1 accuracy. Empty classes are
/// excluded from the mean and reported.
PerClassAccuracy per_class_accuracy(std::span<const int> predicted, std::span<const int> truth,
                                    std::span<const int> classes);

}  // namespace vads
