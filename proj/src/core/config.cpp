#include "vads/core/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "vads/core/errors.hpp"

namespace vads {

std::string to_string(PriorForm form) {
  switch (form) {
    case PriorForm::learned: return "learned";
    case PriorForm::none: return "none";
    case PriorForm::random: return "random";
    case PriorForm::external: return "external";
  }
  return "learned";
}

PriorForm prior_form_from_string(const std::string& s) {
  if (s == "learned") return PriorForm::learned;
  if (s == "none") return PriorForm::none;
  if (s == "random") return PriorForm::random;
  if (s == "external") return PriorForm::external;
  throw ValidationError("unknown prior_form '" + s + "' (expected learned|none|random|external)");
}

namespace {

// Single field table shared by serialization and parsing.
template <typename Config, typename Visitor>
void visit_fields(Config& c, Visitor&& v) {
  v("d_v", c.d_v);
  v("d_a", c.d_a);
  v("d_l", c.d_l);
  v("d_z", c.d_z);
  v("hidden_g", c.hidden_g);
  v("hidden_d", c.hidden_d);
  v("hidden_ve", c.hidden_ve);
  v("hidden_vsp", c.hidden_vsp);
  v("generator_output", c.generator_output);
  v("lambda_con", c.lambda_con);
  v("lambda_kl", c.lambda_kl);
  v("lambda_sc", c.lambda_sc);
  v("lambda_gp", c.lambda_gp);
  v("lambda_cls", c.lambda_cls);
  v("alpha", c.alpha);
  v("tau", c.tau);
  v("lr", c.lr);
  v("beta1", c.beta1);
  v("beta2", c.beta2);
  v("batch_size", c.batch_size);
  v("epochs", c.epochs);
  v("stage1_epochs", c.stage1_epochs);
  v("critic_steps", c.critic_steps);
  v("n_syn", c.n_syn);
  v("cls_epochs", c.cls_epochs);
  v("cls_lr", c.cls_lr);
  v("cls_batch_size", c.cls_batch_size);
  v("seed", c.seed);
  v("n_seeds", c.n_seeds);
  v("use_vdkl", c.use_vdkl);
  v("use_vosu", c.use_vosu);
  v("use_enhancement", c.use_enhancement);
  v("use_lcon", c.use_lcon);
  v("use_lsc", c.use_lsc);
  v("prior_form", c.prior_form);
  v("prior_vector_file", c.prior_vector_file);
  v("normalize_features", c.normalize_features);
}

struct Writer {
  nlohmann::json& j;
  void operator()(const char* key, const PriorForm& f) const { j[key] = to_string(f); }
  template <typename V>
  void operator()(const char* key, const V& value) const { j[key] = value; }
};

struct Reader {
  const nlohmann::json& j;
  std::vector<std::string>& errors;
  std::vector<std::string>& seen;

  template <typename V>
  void operator()(const char* key, V& out) const {
    auto it = j.find(key);
    if (it == j.end()) return;
    seen.emplace_back(key);
    try {
      assign(*it, out);
    } catch (const std::exception& e) {
      errors.push_back(std::string(key) + ": " + e.what());
    }
  }

  static void assign(const nlohmann::json& v, int& out) {
    if (!v.is_number_integer()) throw ValidationError("expected integer");
    out = v.get<int>();
  }
  static void assign(const nlohmann::json& v, std::uint64_t& out) {
    if (!v.is_number_unsigned()) throw ValidationError("expected non-negative integer");
    out = v.get<std::uint64_t>();
  }
  static void assign(const nlohmann::json& v, double& out) {
    if (!v.is_number()) throw ValidationError("expected number");
    out = v.get<double>();
  }
  static void assign(const nlohmann::json& v, bool& out) {
    if (!v.is_boolean()) throw ValidationError("expected boolean");
    out = v.get<bool>();
  }
  static void assign(const nlohmann::json& v, std::string& out) {
    if (!v.is_string()) throw ValidationError("expected string");
    out = v.get<std::string>();
  }
  static void assign(const nlohmann::json& v, PriorForm& out) {
    if (!v.is_string()) throw ValidationError("expected string");
    out = prior_form_from_string(v.get<std::string>());
  }
};

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

std::vector<std::string> ExperimentConfig::validate() const {
  std::vector<std::string> v;
  auto need = [&v](bool ok, const std::string& msg) {
    if (!ok) v.push_back(msg);
  };
  need(d_v >= 0 && d_a >= 0 && d_z >= 0, "d_v, d_a, d_z must be >= 0 (0 = from dataset)");
  need(d_l >= 0, "d_l must be >= 0");
  need(hidden_g > 0 && hidden_d > 0 && hidden_ve > 0 && hidden_vsp > 0,
       "hidden widths must be positive");
  need(generator_output == "relu" || generator_output == "identity",
       "generator_output must be relu or identity");
  need(lambda_con >= 0 && lambda_kl >= 0 && lambda_sc >= 0 && lambda_gp >= 0 && lambda_cls >= 0,
       "all lambda weights must be >= 0");
  need(alpha >= 0.0 && alpha <= 1.0, "alpha must lie in [0,1]");
  need(tau > 0.0, "tau must be > 0");
  need(lr >= 0.0, "lr must be >= 0");
  need(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, "beta1, beta2 must lie in [0,1)");
  need(batch_size > 0, "batch_size must be positive");
  need(epochs >= 0 && stage1_epochs >= 0 && cls_epochs >= 0, "epoch counts must be >= 0");
  need(critic_steps >= 1, "critic_steps must be >= 1");
  need(n_syn >= 0, "n_syn must be >= 1 (or 0 for the dataset default)");
  need(cls_lr >= 0.0 && cls_batch_size > 0, "classifier lr >= 0 and batch size > 0 required");
  need(n_seeds >= 1, "n_seeds must be >= 1");
  need(normalize_features == "none" || normalize_features == "minmax",
       "normalize_features must be none or minmax");
  need(!(prior_form == PriorForm::external && prior_vector_file.empty()),
       "prior_form external requires prior_vector_file");
  need(use_vdkl || effective_lambda_con() == 0.0,
       "lambda_con > 0 requires use_vdkl (set use_lcon=false or lambda_con=0)");
  need(use_vdkl || lambda_kl == 0.0, "lambda_kl > 0 requires use_vdkl");
  need(use_vdkl || !use_enhancement, "use_enhancement requires use_vdkl (the visual encoder)");
  need(use_vosu || effective_lambda_sc() == 0.0,
       "lambda_sc > 0 requires use_vosu (set use_lsc=false or lambda_sc=0)");
  need(use_vdkl || prior_form == PriorForm::learned,
       "prior_form other than learned requires use_vdkl");
  need(!(use_enhancement && d_l == 0), "use_enhancement requires d_l > 0");
  return v;
}

void ExperimentConfig::check() const {
  const auto errs = validate();
  if (errs.empty()) return;
  std::string msg = "invalid config:";
  for (const auto& e : errs) msg += "\n  - " + e;
  throw ValidationError(msg);
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  visit_fields(*this, Writer{j});
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  ExperimentConfig c;
  std::vector<std::string> errors;
  std::vector<std::string> seen;
  visit_fields(c, Reader{j, errors, seen});
  for (const auto& item : j.items()) {
    if (std::find(seen.begin(), seen.end(), item.key()) == seen.end()) {
      errors.push_back("unknown key '" + item.key() + "'");
    }
  }
  if (!errors.empty()) {
    std::string msg = "invalid config:";
    for (const auto& e : errors) msg += "\n  - " + e;
    throw ValidationError(msg);
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("config " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

void ExperimentConfig::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw LoadError("cannot write config " + path.string());
  out << to_json().dump(2) << '\n';
}

std::string ExperimentConfig::canonical() const { return to_json().dump(); }

std::string ExperimentConfig::hash() const { return sha256_hex(canonical()); }

ExperimentConfig ExperimentConfig::resolved(int bundle_d_v, int bundle_d_a) const {
  ExperimentConfig c = *this;
  if (c.d_v == 0) c.d_v = bundle_d_v;
  if (c.d_a == 0) c.d_a = bundle_d_a;
  if (c.d_z == 0) c.d_z = c.d_a;
  if (c.d_v != bundle_d_v || c.d_a != bundle_d_a) {
    std::ostringstream os;
    os << "config dims (d_v=" << c.d_v << ", d_a=" << c.d_a << ") do not match dataset (d_v="
       << bundle_d_v << ", d_a=" << bundle_d_a << ")";
    throw ValidationError(os.str());
  }
  return c;
}

int default_n_syn(const std::string& dataset_name) {
  const std::string n = lower(dataset_name);
  if (n == "awa2") return 5600;
  if (n == "sun") return 100;
  if (n == "cub") return 400;
  return 0;
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  std::ostringstream os;
  os << std::hex << std::setfill('0');
  for (unsigned int i = 0; i < len; ++i) os << std::setw(2) << static_cast<int>(digest[i]);
  return os.str();
}

}  // namespace vads
