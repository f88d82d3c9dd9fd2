#pragma once

#include <string>
#include <vector>

#include "vads/core/config.hpp"
#include "vads/core/dataset.hpp"
#include "vads/core/report.hpp"

namespace vads::pipeline {

struct Variant {
  std::string name;
  ExperimentConfig config;
};

/// The seven ablation configurations: full; w/o VDKL & VOSU; w/o VDKL;
/// w/o VOSU; w/o enhancement; w/o L_con; w/o L_sc.
std::vector<Variant> ablation_variants(const ExperimentConfig& base);

/// learned, none, random and, when vector_file is non-empty, external.
std::vector<Variant> prior_form_variants(const ExperimentConfig& base, const std::string& vector_file);

struct SuiteRow {
  std::string name;
  std::string config_hash;
  std::vector<EvalReport> reports;  // one per seed
  double acc = 0, u = 0, s = 0, h = 0;  // means over seeds
};

/// Seeds base_seed, base_seed + 1, ..., base_seed + n_seeds - 1.
std::vector<std::uint64_t> suite_seeds(std::uint64_t base_seed, int n_seeds);

SuiteRow run_variant(const Variant& variant, const DatasetBundle& bundle, const std::vector<std::uint64_t>& seeds);
std::vector<SuiteRow> run_suite(const std::vector<Variant>& variants, const DatasetBundle& bundle,
                                const std::vector<std::uint64_t>& seeds);

/// Aligned text table of mean Acc/U/S/H per row, in percent.
std::string suite_table(const std::vector<SuiteRow>& rows);
/// CSV with header name,acc,u,s,h,n_seeds.
std::string suite_csv(const std::vector<SuiteRow>& rows);

}  // namespace vads::pipeline
