#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "vads/core/errors.hpp"
#include "vads/nn/params.hpp"

namespace vads::nn {

class CorruptCheckpointError : public LoadError {
 public:
  using LoadError::LoadError;
};

/// Named parameter sets plus run provenance.
///
/// On disk: a directory with manifest.json (names, shapes, dtype, config
/// hash, rng state, free-form metadata) and one raw little-endian f32 file
/// per array named <set>.<param>.f32.
struct Checkpoint {
  std::vector<std::pair<std::string, ParamSet<float>>> sets;
  std::string config_hash;
  std::string rng_state;
  nlohmann::json metadata = nlohmann::json::object();

  const ParamSet<float>& set(const std::string& name) const;
  bool has_set(const std::string& name) const;
};

struct LoadedCheckpoint {
  Checkpoint checkpoint;
  std::vector<std::string> warnings;
};

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& dir);

/// A config-hash mismatch is reported as a warning; the load proceeds.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& dir,
                                 const std::optional<std::string>& expected_config_hash = std::nullopt);

/// SHA-256 over the manifest and every array file.
std::string checkpoint_digest(const std::filesystem::path& dir);

}  // namespace vads::nn
