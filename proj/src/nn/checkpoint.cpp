#include "vads/nn/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "vads/core/config.hpp"
#include "vads/core/raw_io.hpp"

namespace vads::nn {

namespace fs = std::filesystem;

const ParamSet<float>& Checkpoint::set(const std::string& name) const {
  for (const auto& [n, s] : sets) {
    if (n == name) return s;
  }
  throw LoadError("checkpoint has no parameter set '" + name + "'");
}

bool Checkpoint::has_set(const std::string& name) const {
  for (const auto& entry : sets) {
    if (entry.first == name) return true;
  }
  return false;
}

void save_checkpoint(const Checkpoint& ck, const fs::path& dir) {
  fs::create_directories(dir);
  nlohmann::json manifest;
  manifest["format"] = "vads-checkpoint-1";
  manifest["dtype"] = "f32";
  manifest["config_hash"] = ck.config_hash;
  manifest["rng_state"] = ck.rng_state;
  manifest["metadata"] = ck.metadata;
  nlohmann::json sets = nlohmann::json::array();
  for (const auto& [set_name, params] : ck.sets) {
    nlohmann::json arrays = nlohmann::json::array();
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto& v = params.value(i);
      const std::string file = set_name + "." + params.name(i) + ".f32";
      write_f32(dir / file, v.data(), static_cast<std::size_t>(v.size()));
      arrays.push_back({{"name", params.name(i)}, {"rows", v.rows()}, {"cols", v.cols()}, {"file", file}});
    }
    sets.push_back({{"name", set_name}, {"params", arrays}});
  }
  manifest["sets"] = sets;
  std::ofstream out(dir / "manifest.json");
  if (!out) throw LoadError("cannot write checkpoint manifest in " + dir.string());
  out << manifest.dump(2) << '\n';
}

LoadedCheckpoint load_checkpoint(const fs::path& dir, const std::optional<std::string>& expected_config_hash) {
  LoadedCheckpoint out;
  const fs::path manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw LoadError("missing checkpoint manifest " + manifest_path.string());
  nlohmann::json manifest;
  try {
    in >> manifest;
    if (manifest.at("format").get<std::string>() != "vads-checkpoint-1") {
      throw CorruptCheckpointError("corrupt checkpoint: unknown format in " + manifest_path.string());
    }
    Checkpoint& ck = out.checkpoint;
    ck.config_hash = manifest.at("config_hash").get<std::string>();
    ck.rng_state = manifest.at("rng_state").get<std::string>();
    ck.metadata = manifest.value("metadata", nlohmann::json::object());
    for (const auto& s : manifest.at("sets")) {
      ParamSet<float> params;
      for (const auto& a : s.at("params")) {
        const auto rows = a.at("rows").get<Index>();
        const auto cols = a.at("cols").get<Index>();
        const auto file = a.at("file").get<std::string>();
        std::vector<float> values;
        try {
          values = read_f32(dir / file, static_cast<std::size_t>(rows * cols));
        } catch (const LoadError& e) {
          throw CorruptCheckpointError(std::string("corrupt checkpoint: ") + e.what());
        }
        params.add(a.at("name").get<std::string>(), Eigen::Map<MatrixF>(values.data(), rows, cols));
      }
      ck.sets.emplace_back(s.at("name").get<std::string>(), std::move(params));
    }
  } catch (const nlohmann::json::exception& e) {
    throw CorruptCheckpointError("corrupt checkpoint manifest " + manifest_path.string() + ": " + e.what());
  }
  if (expected_config_hash && *expected_config_hash != out.checkpoint.config_hash) {
    out.warnings.push_back("checkpoint config hash " + out.checkpoint.config_hash + " differs from expected " +
                           *expected_config_hash);
  }
  return out;
}

std::string checkpoint_digest(const fs::path& dir) {
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw LoadError("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const std::string manifest_text = slurp(dir / "manifest.json");
  std::string all = manifest_text;
  const auto manifest = nlohmann::json::parse(manifest_text);
  for (const auto& s : manifest.at("sets")) {
    for (const auto& a : s.at("params")) all += slurp(dir / a.at("file").get<std::string>());
  }
  return sha256_hex(all);
}

}  // namespace vads::nn
