#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace vads::cli {

enum ExitCode { kOk = 0, kValidation = 2, kRuntime = 3 };

/// Provenance written to <out>/run_manifest.json by every subcommand.
struct RunManifest {
  std::string subcommand;
  nlohmann::json config = nlohmann::json::object();
  std::string config_hash;
  std::vector<std::string> artifacts;  // relative to the run directory
  std::string started;
  std::string finished;

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
};

/// Exclusive lock on a run directory, held while artifacts are written.
class DirLock {
 public:
  explicit DirLock(const std::filesystem::path& dir);
  ~DirLock();
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  std::filesystem::path path_;
};

/// Entry point of the `vads` executable. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace vads::cli
