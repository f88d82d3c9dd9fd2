#include "vads/core/report.hpp"

#include <iomanip>
#include <sstream>

namespace vads {

nlohmann::json EvalReport::to_json(bool include_wall_clock) const {
  nlohmann::json j;
  j["acc"] = acc;
  j["u"] = u;
  j["s"] = s;
  j["h"] = h;
  j["per_class"] = per_class;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  j["synthesized_rows"] = synthesized_rows;
  j["warnings"] = warnings;
  if (include_wall_clock) j["wall_clock_s"] = wall_clock_s;
  return j;
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
  EvalReport r;
  r.acc = j.at("acc").get<double>();
  r.u = j.at("u").get<double>();
  r.s = j.at("s").get<double>();
  r.h = j.at("h").get<double>();
  r.per_class = j.at("per_class").get<std::map<std::string, double>>();
  r.config_hash = j.at("config_hash").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.synthesized_rows = j.value("synthesized_rows", std::size_t{0});
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  if (j.contains("wall_clock_s")) r.wall_clock_s = j.at("wall_clock_s").get<double>();
  return r;
}

std::string EvalReport::table() const {
  std::ostringstream os;
  os << std::fixed << std::setprecision(1);
  os << std::setw(8) << "Acc" << std::setw(8) << "U" << std::setw(8) << "S" << std::setw(8) << "H" << '\n';
  os << std::setw(8) << acc * 100 << std::setw(8) << u * 100 << std::setw(8) << s * 100 << std::setw(8)
     << h * 100 << '\n';
  return os.str();
}

}  // namespace vads
