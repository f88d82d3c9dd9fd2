#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vads/core/dataset.hpp"

namespace vads::data {

struct ArrayEntry {
  std::string file;
  std::string dtype;  // "f32" or "i32"
  std::size_t count = 0;
};

/// manifest.json of a bundle directory.
///
/// Arrays (all raw, row-major, little-endian): features (f32, n x d_v),
/// labels (i32), prototypes (f32, n_classes x d_a), seen_classes,
/// unseen_classes, train_seen, test_seen, test_unseen (i32).
struct BundleManifest {
  std::string name;
  int d_v = 0;
  int d_a = 0;
  int n_classes = 0;
  std::map<std::string, ArrayEntry> arrays;
  std::map<std::string, std::size_t> split_sizes;
  std::vector<std::string> class_names;

  nlohmann::json to_json() const;
  static BundleManifest from_json(const nlohmann::json& j);
};

/// Required prototype width for a named benchmark (AWA2 85, SUN 102,
/// CUB 1024), matched case-insensitively.
std::optional<int> benchmark_prototype_dim(const std::string& name);

struct LoadOptions {
  /// "none" or "minmax". Min-max statistics come from train_seen rows only
  /// and are applied to every sample.
  std::string normalize = "none";
};

DatasetBundle load_bundle(const std::filesystem::path& dir, const LoadOptions& options = {});
void save_bundle(const DatasetBundle& bundle, const std::filesystem::path& dir);

void minmax_normalize(DatasetBundle& bundle);

}  // namespace vads::data
