#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace vads {

enum class PriorForm { learned, none, random, external };

std::string to_string(PriorForm form);
PriorForm prior_form_from_string(const std::string& s);

/// Every tunable of a run. Serialized as a flat JSON object whose keys are
/// the member names below.
///
/// A dimension of 0 means "take it from the dataset": d_v and d_a from the
/// bundle, d_z from d_a.
struct ExperimentConfig {
  // dimensions
  int d_v = 0;
  int d_a = 0;
  int d_l = 1024;
  int d_z = 0;
  int hidden_g = 4096;
  int hidden_d = 4096;
  int hidden_ve = 2048;
  int hidden_vsp = 1024;
  std::string generator_output = "relu";  // relu | identity

  // loss weights
  double lambda_con = 1.5;
  double lambda_kl = 1.0;
  double lambda_sc = 0.1;
  double lambda_gp = 10.0;
  double lambda_cls = 0.01;

  double alpha = 0.9;
  double tau = 0.15;

  // optimizer
  double lr = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;

  int batch_size = 64;
  int epochs = 100;
  int stage1_epochs = 30;
  int critic_steps = 5;
  int n_syn = 0;  // 0: per-dataset default (AWA2 5600, SUN 100, CUB 400)

  // final classifiers and the frozen seen-class classifier
  int cls_epochs = 25;
  double cls_lr = 1e-3;
  int cls_batch_size = 64;

  std::uint64_t seed = 0;
  int n_seeds = 3;

  // ablation switches
  bool use_vdkl = true;
  bool use_vosu = true;
  bool use_enhancement = true;
  bool use_lcon = true;
  bool use_lsc = true;
  PriorForm prior_form = PriorForm::learned;
  std::string prior_vector_file;

  std::string normalize_features = "none";  // none | minmax

  double effective_lambda_con() const { return use_lcon ? lambda_con : 0.0; }
  double effective_lambda_sc() const { return use_lsc ? lambda_sc : 0.0; }

  /// All violated constraints, one message each. Empty when valid.
  std::vector<std::string> validate() const;
  /// Throws ValidationError listing every violation.
  void check() const;

  nlohmann::json to_json() const;
  /// Rejects unknown keys and ill-typed values; absent keys keep defaults.
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  /// Sorted-key, whitespace-free serialization.
  std::string canonical() const;
  /// SHA-256 (hex) of canonical().
  std::string hash() const;

  /// Copy with zero dimensions resolved against a dataset.
  ExperimentConfig resolved(int bundle_d_v, int bundle_d_a) const;
};

/// Synthesis count per unseen class for a named benchmark, or 0 if unknown.
int default_n_syn(const std::string& dataset_name);

std::string sha256_hex(const std::string& data);

}  // namespace vads
