#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace vads {

struct EvalReport {
  double acc = 0.0;  // CZSL, per-class mean over unseen classes
  double u = 0.0;
  double s = 0.0;
  double h = 0.0;
  /// GZSL per-class top-1, keyed by class name.
  std::map<std::string, double> per_class;
  std::string config_hash;
  std::uint64_t seed = 0;
  /// Synthesized unseen rows the classifiers were trained on.
  std::size_t synthesized_rows = 0;
  double wall_clock_s = 0.0;
  std::vector<std::string> warnings;

  /// Keys: acc, u, s, h, per_class, config_hash, seed, synthesized_rows, warnings, wall_clock_s.
  nlohmann::json to_json(bool include_wall_clock = true) const;
  static EvalReport from_json(const nlohmann::json& j);
  /// Aligned Acc/U/S/H table.
  std::string table() const;
};

}  // namespace vads
