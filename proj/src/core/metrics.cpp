#include "vads/core/metrics.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "vads/core/errors.hpp"

namespace vads {

double harmonic_mean(double unseen, double seen) {
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_unit(unseen) || !in_unit(seen)) {
    std::ostringstream os;
    os << "harmonic_mean: rates must lie in [0,1], got U=" << unseen << " S=" << seen;
    throw ValidationError(os.str());
  }
  const double sum = unseen + seen;
  if (sum == 0.0) return 0.0;
  return 2.0 * unseen * seen / sum;
}

PerClassAccuracy per_class_accuracy(std::span<const int> predicted, std::span<const int> truth,
                                    std::span<const int> classes) {
  if (predicted.size() != truth.size()) {
    throw ValidationError("per_class_accuracy: prediction/label count mismatch");
  }
  std::map<int, std::pair<std::size_t, std::size_t>> tally;  // class -> (correct, total)
  for (int c : classes) tally[c] = {0, 0};
  for (std::size_t i = 0; i < truth.size(); ++i) {
    auto it = tally.find(truth[i]);
    if (it == tally.end()) continue;
    it->second.second += 1;
    if (predicted[i] == truth[i]) it->second.first += 1;
  }
  PerClassAccuracy out;
  double sum = 0.0;
  for (int c : classes) {
    const auto [correct, total] = tally[c];
    if (total == 0) {
      out.empty_classes.push_back(c);
      continue;
    }
    const double acc = static_cast<double>(correct) / static_cast<double>(total);
    out.per_class.emplace_back(c, acc);
    sum += acc;
  }
  if (!out.per_class.empty()) out.mean = sum / static_cast<double>(out.per_class.size());
  return out;
}

}  // namespace vads
