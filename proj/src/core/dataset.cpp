#include "vads/core/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "vads/core/errors.hpp"

namespace vads {

std::string DatasetBundle::class_name(int c) const {
  if (c >= 0 && static_cast<std::size_t>(c) < class_names.size()) return class_names[c];
  return "class_" + std::to_string(c);
}

MatrixF DatasetBundle::rows(const std::vector<std::size_t>& indices) const {
  MatrixF out(static_cast<Eigen::Index>(indices.size()), features.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(indices[i]));
  }
  return out;
}

std::vector<int> DatasetBundle::labels_of(const std::vector<std::size_t>& indices) const {
  std::vector<int> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(labels.at(i));
  return out;
}

namespace {

std::string join(const std::vector<std::size_t>& v, std::size_t max_items = 8) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size() && i < max_items; ++i) os << (i ? "," : "") << v[i];
  if (v.size() > max_items) os << ",...";
  return os.str();
}

}  // namespace

std::vector<Violation> validate_bundle(const DatasetBundle& b) {
  std::vector<Violation> out;
  const std::size_t n = b.n_samples();
  const std::size_t n_classes = b.n_classes();

  if (b.labels.size() != n) {
    out.push_back({"shape", "labels count differs from feature rows", {}});
  }

  std::vector<std::size_t> bad_labels;
  for (std::size_t i = 0; i < b.labels.size(); ++i) {
    if (b.labels[i] < 0 || static_cast<std::size_t>(b.labels[i]) >= n_classes) bad_labels.push_back(i);
  }
  if (!bad_labels.empty()) {
    out.push_back({"label-range", "labels outside [0, n_classes) at samples " + join(bad_labels), bad_labels});
  }

  const std::set<int> seen(b.seen_classes.begin(), b.seen_classes.end());
  const std::set<int> unseen(b.unseen_classes.begin(), b.unseen_classes.end());
  std::vector<std::size_t> both;
  for (int c : seen) {
    if (unseen.count(c)) both.push_back(static_cast<std::size_t>(c));
  }
  if (!both.empty()) {
    out.push_back({"disjointness", "classes both seen and unseen: " + join(both), both});
  }

  std::vector<std::size_t> uncovered;
  for (std::size_t i = 0; i < b.labels.size(); ++i) {
    const int y = b.labels[i];
    if (!seen.count(y) && !unseen.count(y)) uncovered.push_back(i);
  }
  if (!uncovered.empty()) {
    out.push_back({"coverage", "labels in neither class set at samples " + join(uncovered), uncovered});
  }

  auto membership = [&](const std::vector<std::size_t>& idx, const std::set<int>& allowed,
                        const char* split_name) {
    std::vector<std::size_t> bad;
    for (auto i : idx) {
      if (i >= b.labels.size() || !allowed.count(b.labels[i])) bad.push_back(i);
    }
    if (!bad.empty()) {
      out.push_back({"split-membership",
                     std::string(split_name) + " holds samples of the wrong class group: " + join(bad), bad});
    }
  };
  membership(b.split.train_seen, seen, "train_seen");
  membership(b.split.test_seen, seen, "test_seen");
  membership(b.split.test_unseen, unseen, "test_unseen");

  std::vector<std::size_t> shared;
  {
    std::vector<int> owner(n, -1);
    const std::vector<std::size_t>* sets[] = {&b.split.train_seen, &b.split.test_seen, &b.split.test_unseen};
    for (int s = 0; s < 3; ++s) {
      for (auto i : *sets[s]) {
        if (i >= n) continue;
        if (owner[i] != -1 && owner[i] != s) shared.push_back(i);
        owner[i] = s;
      }
    }
  }
  if (!shared.empty()) {
    out.push_back({"split-disjointness", "samples in more than one split: " + join(shared), shared});
  }

  std::vector<std::size_t> nonfinite;
  std::vector<std::size_t> zero_rows;
  for (Eigen::Index r = 0; r < b.prototypes.rows(); ++r) {
    if (!b.prototypes.row(r).allFinite()) {
      nonfinite.push_back(static_cast<std::size_t>(r));
    } else if (b.prototypes.row(r).norm() == 0.0f) {
      zero_rows.push_back(static_cast<std::size_t>(r));
    }
  }
  if (!nonfinite.empty()) {
    out.push_back({"prototype-finite", "non-finite prototype rows: " + join(nonfinite), nonfinite});
  }
  if (!zero_rows.empty()) {
    out.push_back({"prototype-norm", "zero-norm prototype rows: " + join(zero_rows), zero_rows});
  }
  return out;
}

void require_valid(const DatasetBundle& bundle) {
  const auto violations = validate_bundle(bundle);
  if (violations.empty()) return;
  std::string msg = "dataset bundle '" + bundle.name + "' violates invariants:";
  for (const auto& v : violations) msg += "\n  - [" + v.invariant + "] " + v.detail;
  throw ValidationError(msg);
}

}  // namespace vads
