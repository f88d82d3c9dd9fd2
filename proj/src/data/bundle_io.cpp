#include "vads/data/bundle_io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>

#include "vads/core/errors.hpp"
#include "vads/core/raw_io.hpp"

namespace vads::data {

namespace fs = std::filesystem;

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::vector<std::size_t> to_indices(const std::vector<int>& v, const std::string& what) {
  std::vector<std::size_t> out;
  out.reserve(v.size());
  for (int x : v) {
    if (x < 0) throw LoadError(what + " holds a negative index");
    out.push_back(static_cast<std::size_t>(x));
  }
  return out;
}

std::vector<int> to_i32(const std::vector<std::size_t>& v) {
  return std::vector<int>(v.begin(), v.end());
}

const char* const kArrays[] = {"features",       "labels",     "prototypes", "seen_classes",
                               "unseen_classes", "train_seen", "test_seen",  "test_unseen"};

}  // namespace

std::optional<int> benchmark_prototype_dim(const std::string& name) {
  const std::string n = lower(name);
  if (n == "awa2") return 85;
  if (n == "sun") return 102;
  if (n == "cub") return 1024;
  return std::nullopt;
}

nlohmann::json BundleManifest::to_json() const {
  nlohmann::json j;
  j["name"] = name;
  j["d_v"] = d_v;
  j["d_a"] = d_a;
  j["n_classes"] = n_classes;
  nlohmann::json arr = nlohmann::json::object();
  for (const auto& [key, e] : arrays) {
    arr[key] = {{"file", e.file}, {"dtype", e.dtype}, {"count", e.count}};
  }
  j["arrays"] = arr;
  j["split_sizes"] = split_sizes;
  if (!class_names.empty()) j["class_names"] = class_names;
  return j;
}

BundleManifest BundleManifest::from_json(const nlohmann::json& j) {
  BundleManifest m;
  try {
    m.name = j.at("name").get<std::string>();
    m.d_v = j.at("d_v").get<int>();
    m.d_a = j.at("d_a").get<int>();
    m.n_classes = j.at("n_classes").get<int>();
    for (const auto& item : j.at("arrays").items()) {
      ArrayEntry e;
      e.file = item.value().at("file").get<std::string>();
      e.dtype = item.value().at("dtype").get<std::string>();
      e.count = item.value().at("count").get<std::size_t>();
      m.arrays[item.key()] = e;
    }
    if (j.contains("split_sizes")) m.split_sizes = j.at("split_sizes").get<std::map<std::string, std::size_t>>();
    if (j.contains("class_names")) m.class_names = j.at("class_names").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("malformed manifest.json: ") + e.what());
  }
  return m;
}

DatasetBundle load_bundle(const fs::path& dir, const LoadOptions& options) {
  const fs::path manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw LoadError("missing file " + manifest_path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(manifest_path.string() + ": " + e.what());
  }
  const BundleManifest m = BundleManifest::from_json(j);

  if (auto dim = benchmark_prototype_dim(m.name); dim && *dim != m.d_a) {
    throw LoadError("dim mismatch in " + manifest_path.string() + ": " + m.name + " prototypes must have d_a = " +
                    std::to_string(*dim) + ", manifest declares " + std::to_string(m.d_a));
  }
  if (m.d_v <= 0 || m.d_a <= 0 || m.n_classes <= 0) {
    throw LoadError("dim mismatch in " + manifest_path.string() + ": d_v, d_a, n_classes must be positive");
  }

  auto entry = [&](const char* key, const char* dtype) -> const ArrayEntry& {
    auto it = m.arrays.find(key);
    if (it == m.arrays.end()) throw LoadError(manifest_path.string() + " does not declare array '" + key + "'");
    if (it->second.dtype != dtype) {
      throw LoadError("array '" + std::string(key) + "' (" + it->second.file + ") must have dtype " + dtype);
    }
    return it->second;
  };

  const auto& fe = entry("features", "f32");
  const auto& le = entry("labels", "i32");
  const auto& pe = entry("prototypes", "f32");
  if (fe.count % static_cast<std::size_t>(m.d_v) != 0) {
    throw LoadError("dim mismatch: " + fe.file + " count is not a multiple of d_v");
  }
  const std::size_t n = fe.count / static_cast<std::size_t>(m.d_v);
  if (le.count != n) throw LoadError("dim mismatch: " + le.file + " count differs from feature rows");
  if (pe.count != static_cast<std::size_t>(m.n_classes) * static_cast<std::size_t>(m.d_a)) {
    throw LoadError("dim mismatch: " + pe.file + " count differs from n_classes * d_a");
  }

  DatasetBundle b;
  b.name = m.name;
  b.class_names = m.class_names;
  {
    auto v = read_f32(dir / fe.file, fe.count);
    b.features = Eigen::Map<MatrixF>(v.data(), static_cast<Eigen::Index>(n), m.d_v);
  }
  b.labels = read_i32(dir / le.file, le.count);
  {
    auto v = read_f32(dir / pe.file, pe.count);
    b.prototypes = Eigen::Map<MatrixF>(v.data(), m.n_classes, m.d_a);
  }
  auto read_set = [&](const char* key) {
    const auto& e = entry(key, "i32");
    return read_i32(dir / e.file, e.count);
  };
  b.seen_classes = read_set("seen_classes");
  b.unseen_classes = read_set("unseen_classes");
  b.split.train_seen = to_indices(read_set("train_seen"), "train_seen");
  b.split.test_seen = to_indices(read_set("test_seen"), "test_seen");
  b.split.test_unseen = to_indices(read_set("test_unseen"), "test_unseen");

  if (!b.class_names.empty() && b.class_names.size() != static_cast<std::size_t>(m.n_classes)) {
    throw LoadError("dim mismatch in " + manifest_path.string() + ": class_names length differs from n_classes");
  }
  require_valid(b);
  if (options.normalize == "minmax") {
    minmax_normalize(b);
  } else if (options.normalize != "none") {
    throw ValidationError("unknown normalization '" + options.normalize + "'");
  }
  return b;
}

void save_bundle(const DatasetBundle& b, const fs::path& dir) {
  fs::create_directories(dir);
  BundleManifest m;
  m.name = b.name;
  m.d_v = b.d_v();
  m.d_a = b.d_a();
  m.n_classes = static_cast<int>(b.n_classes());
  m.class_names = b.class_names;

  write_f32(dir / "features.f32", b.features.data(), static_cast<std::size_t>(b.features.size()));
  write_i32(dir / "labels.i32", b.labels);
  write_f32(dir / "prototypes.f32", b.prototypes.data(), static_cast<std::size_t>(b.prototypes.size()));
  write_i32(dir / "seen_classes.i32", b.seen_classes);
  write_i32(dir / "unseen_classes.i32", b.unseen_classes);
  write_i32(dir / "train_seen.i32", to_i32(b.split.train_seen));
  write_i32(dir / "test_seen.i32", to_i32(b.split.test_seen));
  write_i32(dir / "test_unseen.i32", to_i32(b.split.test_unseen));

  const std::size_t counts[] = {static_cast<std::size_t>(b.features.size()),
                                b.labels.size(),
                                static_cast<std::size_t>(b.prototypes.size()),
                                b.seen_classes.size(),
                                b.unseen_classes.size(),
                                b.split.train_seen.size(),
                                b.split.test_seen.size(),
                                b.split.test_unseen.size()};
  for (std::size_t i = 0; i < std::size(kArrays); ++i) {
    const std::string key = kArrays[i];
    const bool is_float = key == "features" || key == "prototypes";
    m.arrays[key] = {key + (is_float ? ".f32" : ".i32"), is_float ? "f32" : "i32", counts[i]};
  }
  m.split_sizes = {{"train_seen", b.split.train_seen.size()},
                   {"test_seen", b.split.test_seen.size()},
                   {"test_unseen", b.split.test_unseen.size()}};

  std::ofstream out(dir / "manifest.json");
  if (!out) throw LoadError("cannot write " + (dir / "manifest.json").string());
  out << m.to_json().dump(2) << '\n';
}

void minmax_normalize(DatasetBundle& b) {
  if (b.split.train_seen.empty()) throw ValidationError("minmax normalization needs train_seen samples");
  const MatrixF train = b.rows(b.split.train_seen);
  const Eigen::RowVectorXf lo = train.colwise().minCoeff();
  const Eigen::RowVectorXf hi = train.colwise().maxCoeff();
  Eigen::RowVectorXf range = hi - lo;
  for (Eigen::Index c = 0; c < range.size(); ++c) {
    if (range[c] <= 0.0f) range[c] = 1.0f;
  }
  for (Eigen::Index r = 0; r < b.features.rows(); ++r) {
    b.features.row(r) = (b.features.row(r) - lo).cwiseQuotient(range);
  }
}

}  // namespace vads::data
