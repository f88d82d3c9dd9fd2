#include "vads/pipeline/suites.hpp"

#include <cstdio>
#include <sstream>

#include "vads/pipeline/pipeline.hpp"

namespace vads::pipeline {

namespace {

void disable_vdkl(ExperimentConfig& c) {
  c.use_vdkl = false;
  c.use_lcon = false;
  c.lambda_kl = 0.0;
  c.use_enhancement = false;
  c.prior_form = PriorForm::learned;
}

void disable_vosu(ExperimentConfig& c) {
  c.use_vosu = false;
  c.use_lsc = false;
}

}  // namespace

std::vector<Variant> ablation_variants(const ExperimentConfig& base) {
  std::vector<Variant> out;
  out.push_back({"full", base});
  ExperimentConfig c = base;
  disable_vdkl(c);
  disable_vosu(c);
  out.push_back({"w/o VDKL & VOSU", c});
  c = base;
  disable_vdkl(c);
  out.push_back({"w/o VDKL", c});
  c = base;
  disable_vosu(c);
  out.push_back({"w/o VOSU", c});
  c = base;
  c.use_enhancement = false;
  out.push_back({"w/o enhancement", c});
  c = base;
  c.use_lcon = false;
  out.push_back({"w/o L_con", c});
  c = base;
  c.use_lsc = false;
  out.push_back({"w/o L_sc", c});
  return out;
}

std::vector<Variant> prior_form_variants(const ExperimentConfig& base, const std::string& vector_file) {
  std::vector<Variant> out;
  for (PriorForm f : {PriorForm::learned, PriorForm::none, PriorForm::random}) {
    ExperimentConfig c = base;
    c.prior_form = f;
    c.prior_vector_file.clear();
    out.push_back({to_string(f), c});
  }
  if (!vector_file.empty()) {
    ExperimentConfig c = base;
    c.prior_form = PriorForm::external;
    c.prior_vector_file = vector_file;
    out.push_back({"external", c});
  }
  return out;
}

std::vector<std::uint64_t> suite_seeds(std::uint64_t base_seed, int n_seeds) {
  std::vector<std::uint64_t> out;
  for (int i = 0; i < n_seeds; ++i) out.push_back(base_seed + static_cast<std::uint64_t>(i));
  return out;
}

SuiteRow run_variant(const Variant& variant, const DatasetBundle& bundle, const std::vector<std::uint64_t>& seeds) {
  variant.config.check();
  SuiteRow row;
  row.name = variant.name;
  row.config_hash = variant.config.hash();
  for (std::uint64_t seed : seeds) {
    const EvalReport r = run_experiment(variant.config, bundle, seed).report;
    row.acc += r.acc;
    row.u += r.u;
    row.s += r.s;
    row.h += r.h;
    row.reports.push_back(r);
  }
  const double n = seeds.empty() ? 1.0 : static_cast<double>(seeds.size());
  row.acc /= n;
  row.u /= n;
  row.s /= n;
  row.h /= n;
  return row;
}

std::vector<SuiteRow> run_suite(const std::vector<Variant>& variants, const DatasetBundle& bundle,
                                const std::vector<std::uint64_t>& seeds) {
  for (const auto& v : variants) v.config.check();
  std::vector<SuiteRow> out;
  for (const auto& v : variants) out.push_back(run_variant(v, bundle, seeds));
  return out;
}

std::string suite_table(const std::vector<SuiteRow>& rows) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-18s %7s %7s %7s %7s\n", "config", "Acc", "U", "S", "H");
  os << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-18s %7.1f %7.1f %7.1f %7.1f\n", r.name.c_str(), 100 * r.acc, 100 * r.u,
                  100 * r.s, 100 * r.h);
    os << line;
  }
  return os.str();
}

std::string suite_csv(const std::vector<SuiteRow>& rows) {
  std::ostringstream os;
  os.precision(9);
  os << "name,acc,u,s,h,n_seeds\n";
  for (const auto& r : rows) {
    os << '"' << r.name << '"' << ',' << r.acc << ',' << r.u << ',' << r.s << ',' << r.h << ',' << r.reports.size()
       << '\n';
  }
  return os.str();
}

}  // namespace vads::pipeline
