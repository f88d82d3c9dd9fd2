#include "vads/cli/cli.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "vads/core/config.hpp"
#include "vads/core/errors.hpp"
#include "vads/data/bundle_io.hpp"
#include "vads/data/toy.hpp"
#include "vads/model/vosu.hpp"
#include "vads/nn/checkpoint.hpp"
#include "vads/pipeline/pipeline.hpp"
#include "vads/pipeline/suites.hpp"

namespace vads::cli {

namespace fs = std::filesystem;
using nlohmann::json;

json RunManifest::to_json() const {
  return {{"subcommand", subcommand}, {"config", config},     {"config_hash", config_hash},
          {"artifacts", artifacts},   {"started", started}, {"finished", finished}};
}

RunManifest RunManifest::from_json(const json& j) {
  RunManifest m;
  m.subcommand = j.at("subcommand").get<std::string>();
  m.config = j.at("config");
  m.config_hash = j.at("config_hash").get<std::string>();
  m.artifacts = j.at("artifacts").get<std::vector<std::string>>();
  m.started = j.at("started").get<std::string>();
  m.finished = j.at("finished").get<std::string>();
  return m;
}

DirLock::DirLock(const fs::path& dir) : path_(dir / ".vads.lock") {
  const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) throw std::runtime_error("run directory " + dir.string() + " is locked (" + path_.string() + " exists)");
  const std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] const auto written = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

DirLock::~DirLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

namespace {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Creates `dir`; a non-empty existing directory is an error unless `force`,
/// in which case its contents are removed.
void prepare_out(const fs::path& dir, bool force) {
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw ValidationError("output path " + dir.string() + " is not a directory");
    if (!fs::is_empty(dir)) {
      if (!force) throw ValidationError("output directory " + dir.string() + " is not empty (use --force)");
      if (fs::exists(dir / ".vads.lock")) throw std::runtime_error("run directory " + dir.string() + " is locked");
      for (const auto& entry : fs::directory_iterator(dir)) fs::remove_all(entry.path());
    }
  }
  fs::create_directories(dir);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

/// Loads a config and lists every violation at once.
ExperimentConfig load_config(const std::string& path) {
  if (path.empty()) return ExperimentConfig{};
  return ExperimentConfig::load(path);
}

DatasetBundle load_data(const std::string& dir, const ExperimentConfig& config) {
  if (dir.empty()) throw ValidationError("--data is required");
  data::LoadOptions opts;
  opts.normalize = config.normalize_features;
  return data::load_bundle(dir, opts);
}

struct Session {
  fs::path out_dir;
  RunManifest manifest;
  std::optional<DirLock> lock;

  Session(const std::string& out, bool force, std::string subcommand) {
    if (out.empty()) throw ValidationError("--out is required");
    out_dir = out;
    prepare_out(out_dir, force);
    lock.emplace(out_dir);
    manifest.subcommand = std::move(subcommand);
    manifest.started = utc_now();
  }

  fs::path artifact(const std::string& relative) {
    manifest.artifacts.push_back(relative);
    return out_dir / relative;
  }

  void finish() {
    manifest.finished = utc_now();
    for (const auto& a : manifest.artifacts) {
      if (!fs::exists(out_dir / a)) throw std::runtime_error("artifact " + a + " missing at completion");
    }
    write_json(out_dir / "run_manifest.json", manifest.to_json());
  }
};

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

std::string matrix_csv(const MatrixF& m, const DatasetBundle& bundle) {
  std::ostringstream os;
  os.precision(9);
  os << "class";
  for (std::size_t c = 0; c < bundle.n_classes(); ++c) os << ',' << csv_field(bundle.class_name(static_cast<int>(c)));
  os << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    os << csv_field(bundle.class_name(static_cast<int>(r)));
    for (Eigen::Index c = 0; c < m.cols(); ++c) os << ',' << m(r, c);
    os << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------

struct ToygenArgs {
  data::ToySpec spec;
  std::string out;
  bool force = false;
};

int cmd_toygen(const ToygenArgs& a, std::ostream& out) {
  a.spec.check();
  Session session(a.out, a.force, "toygen");
  const DatasetBundle bundle = data::make_toy(a.spec);
  data::save_bundle(bundle, session.out_dir);
  for (const char* f : {"manifest.json", "features.f32", "labels.i32", "prototypes.f32", "seen_classes.i32",
                        "unseen_classes.i32", "train_seen.i32", "test_seen.i32", "test_unseen.i32"}) {
    session.artifact(f);
  }
  const json spec = {{"n_seen", a.spec.n_seen},
                     {"n_unseen", a.spec.n_unseen},
                     {"d_v", a.spec.d_v},
                     {"d_a", a.spec.d_a},
                     {"samples_per_class", a.spec.samples_per_class},
                     {"sigma", a.spec.sigma},
                     {"test_seen_fraction", a.spec.test_seen_fraction},
                     {"seed", a.spec.seed}};
  session.manifest.config = spec;
  session.manifest.config_hash = sha256_hex(spec.dump());
  session.finish();
  out << "wrote toy bundle (" << bundle.n_samples() << " samples, " << bundle.n_classes() << " classes) to "
      << session.out_dir.string() << "\n";
  return kOk;
}

struct TrainArgs {
  std::string config, data, out;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  bool force = false;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  if (a.config.empty()) throw ValidationError("--config is required");
  ExperimentConfig config = load_config(a.config);
  if (a.epochs) config.epochs = *a.epochs;
  if (a.seed) config.seed = *a.seed;
  config.check();
  const DatasetBundle bundle = load_data(a.data, config);
  const ExperimentConfig resolved = config.resolved(bundle.d_v(), bundle.d_a());
  resolved.check();

  Session session(a.out, a.force, "train");
  session.manifest.config = resolved.to_json();
  session.manifest.config_hash = resolved.hash();
  const auto run = pipeline::run_training(resolved, bundle, resolved.seed);

  resolved.save(session.artifact("config.json"));
  {
    std::ofstream log(session.artifact("train_log.tsv"));
    model::write_train_log(log, run.train.log);
  }
  {
    std::ofstream s1(session.artifact("stage1_loss.tsv"));
    s1 << "epoch\tL_ce\n";
    s1.precision(9);
    for (std::size_t i = 0; i < run.stage1.loss_curve.size(); ++i) s1 << i + 1 << '\t' << run.stage1.loss_curve[i] << '\n';
  }
  const fs::path ckdir = session.artifact("checkpoint");
  nn::save_checkpoint(pipeline::to_checkpoint(run.model, Rng(resolved.seed)), ckdir);
  session.finish();
  out << "trained " << run.train.log.size() << " generator steps; checkpoint " << ckdir.string() << " sha256 "
      << nn::checkpoint_digest(ckdir) << "\n";
  if (run.train.skipped_contrastive > 0) {
    out << "note: " << run.train.skipped_contrastive << " batches had no positive pair; L_con skipped there\n";
  }
  return kOk;
}

struct EvalArgs {
  std::string checkpoint, data, out, config;
  std::optional<std::uint64_t> seed;
  int n_syn = 0;
  bool oracle = false;
  bool force = false;
};

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  if (a.checkpoint.empty()) throw ValidationError("--checkpoint is required");
  auto loaded = nn::load_checkpoint(a.checkpoint);
  const ExperimentConfig ck_config = ExperimentConfig::from_json(loaded.checkpoint.metadata.at("config"));
  const DatasetBundle bundle = load_data(a.data, ck_config);
  if (!a.config.empty()) {
    const std::string expected = load_config(a.config).resolved(bundle.d_v(), bundle.d_a()).hash();
    if (expected != loaded.checkpoint.config_hash) {
      loaded.warnings.push_back("checkpoint config hash " + loaded.checkpoint.config_hash + " differs from " +
                                a.config + " (" + expected + ")");
    }
  }
  const model::VadsModel model = pipeline::from_checkpoint(loaded.checkpoint, bundle);
  const std::uint64_t seed = a.seed ? *a.seed : model.config.seed;

  Session session(a.out, a.force, "eval");
  session.manifest.config = model.config.to_json();
  session.manifest.config_hash = model.config.hash();
  pipeline::EvalOptions opts;
  opts.n_syn = a.n_syn;
  opts.oracle = a.oracle;
  EvalReport report = pipeline::run_evaluation(model, bundle, seed, opts);
  for (const auto& w : loaded.warnings) {
    report.warnings.push_back(w);
    err << "warning: " << w << "\n";
  }
  write_json(session.artifact("report.json"), report.to_json());
  session.finish();
  out << report.table();
  if (!a.oracle) out << "synthesized " << report.synthesized_rows << " unseen rows\n";
  return kOk;
}

struct SuiteArgs {
  std::string config, data, out, prior_vector;
  std::optional<std::uint64_t> seed;
  std::optional<int> n_seeds;
  bool force = false;
};

int run_suite_command(const std::string& name, const SuiteArgs& a, bool prior_forms, std::ostream& out) {
  if (a.config.empty()) throw ValidationError("--config is required");
  ExperimentConfig config = load_config(a.config);
  if (a.seed) config.seed = *a.seed;
  if (a.n_seeds) config.n_seeds = *a.n_seeds;
  config.check();
  std::vector<pipeline::Variant> variants;
  if (prior_forms) {
    const std::string vector_file = a.prior_vector.empty() ? config.prior_vector_file : a.prior_vector;
    if (vector_file.empty()) {
      throw ValidationError("the external prior form needs a vector file: pass --prior-vector or set prior_vector_file");
    }
    variants = pipeline::prior_form_variants(config, vector_file);
  } else {
    variants = pipeline::ablation_variants(config);
  }
  const DatasetBundle bundle = load_data(a.data, config);
  for (auto& v : variants) {
    v.config = v.config.resolved(bundle.d_v(), bundle.d_a());
    v.config.check();
  }
  Session session(a.out, a.force, name);
  session.manifest.config = config.to_json();
  session.manifest.config_hash = config.hash();
  const auto rows = pipeline::run_suite(variants, bundle, pipeline::suite_seeds(config.seed, config.n_seeds));
  write_text(session.artifact(name + ".csv"), pipeline::suite_csv(rows));
  json j = json::array();
  for (const auto& r : rows) {
    json reports = json::array();
    for (const auto& rep : r.reports) reports.push_back(rep.to_json());
    j.push_back({{"name", r.name}, {"config_hash", r.config_hash}, {"acc", r.acc}, {"u", r.u}, {"s", r.s},
                 {"h", r.h}, {"reports", reports}});
  }
  write_json(session.artifact(name + ".json"), j);
  session.finish();
  out << pipeline::suite_table(rows);
  return kOk;
}

struct PlotArgs {
  std::string kind, checkpoint, baseline_checkpoint, data, out, config, param, projection = "raw";
  std::vector<double> values;
  std::optional<std::uint64_t> seed;
  std::optional<int> n_seeds;
  int k = 4;
  int samples = 20;
  bool force = false;
};

model::VadsModel load_model(const std::string& dir, const DatasetBundle*& bundle_out, DatasetBundle& storage,
                            const std::string& data_dir) {
  const auto loaded = nn::load_checkpoint(dir);
  const ExperimentConfig config = ExperimentConfig::from_json(loaded.checkpoint.metadata.at("config"));
  storage = load_data(data_dir, config);
  bundle_out = &storage;
  return pipeline::from_checkpoint(loaded.checkpoint, storage);
}

MatrixF project(const MatrixF& x, const std::string& projection) {
  if (projection == "raw") return x;
  Eigen::MatrixXd centered = x.cast<double>();
  centered.rowwise() -= centered.colwise().mean();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const Eigen::Index k = std::min<Eigen::Index>(2, svd.matrixV().cols());
  return (centered * svd.matrixV().leftCols(k)).cast<float>();
}

int cmd_plotdata(const PlotArgs& a, std::ostream& out) {
  if (a.kind == "sweep") {
    if (a.config.empty()) throw ValidationError("--config is required for the sweep kind");
    if (a.param.empty() || a.values.empty()) throw ValidationError("sweep needs --param and --values");
    ExperimentConfig base = load_config(a.config);
    if (a.seed) base.seed = *a.seed;
    if (a.n_seeds) base.n_seeds = *a.n_seeds;
    std::vector<pipeline::Variant> variants;
    for (double v : a.values) {
      json j = base.to_json();
      if (!j.contains(a.param) || !j[a.param].is_number()) {
        throw ValidationError("sweep parameter '" + a.param + "' is not a numeric config field");
      }
      if (j[a.param].is_number_integer()) {
        j[a.param] = static_cast<long long>(v);
      } else {
        j[a.param] = v;
      }
      ExperimentConfig c = ExperimentConfig::from_json(j);
      c.check();
      std::ostringstream name;
      name << v;
      variants.push_back({name.str(), c});
    }
    const DatasetBundle bundle = load_data(a.data, base);
    for (auto& v : variants) v.config = v.config.resolved(bundle.d_v(), bundle.d_a());
    Session session(a.out, a.force, "plotdata");
    session.manifest.config = base.to_json();
    session.manifest.config_hash = base.hash();
    const auto rows = pipeline::run_suite(variants, bundle, pipeline::suite_seeds(base.seed, base.n_seeds));
    std::ostringstream csv;
    csv.precision(9);
    csv << "param,value,acc,u,s,h\n";
    for (const auto& r : rows) csv << a.param << ',' << r.name << ',' << r.acc << ',' << r.u << ',' << r.s << ',' << r.h << '\n';
    write_text(session.artifact("sweep.csv"), csv.str());
    session.finish();
    out << pipeline::suite_table(rows);
    return kOk;
  }

  if (a.checkpoint.empty()) throw ValidationError("--checkpoint is required for the " + a.kind + " kind");
  DatasetBundle storage;
  const DatasetBundle* bundle = nullptr;
  const model::VadsModel model = load_model(a.checkpoint, bundle, storage, a.data);

  if (a.kind == "heatmap") {
    Session session(a.out, a.force, "plotdata");
    session.manifest.config = model.config.to_json();
    session.manifest.config_hash = model.config.hash();
    MatrixF updated = bundle->prototypes;
    if (model.config.use_vosu) updated = model.vosu.cached_updated();
    write_text(session.artifact("heatmap_predefined.csv"), matrix_csv(model::cosine_matrix(bundle->prototypes), *bundle));
    write_text(session.artifact("heatmap_updated.csv"), matrix_csv(model::cosine_matrix(updated), *bundle));
    session.finish();
    out << "mean off-diagonal cosine: predefined " << model::mean_offdiagonal_cosine(bundle->prototypes)
        << ", updated " << model::mean_offdiagonal_cosine(updated) << "\n";
    return kOk;
  }

  // tsne
  if (a.baseline_checkpoint.empty()) throw ValidationError("--baseline-checkpoint is required for the tsne kind");
  if (a.k < 1 || a.samples < 1) throw ValidationError("--k and --samples must be >= 1");
  DatasetBundle base_storage;
  const DatasetBundle* base_bundle = nullptr;
  const model::VadsModel baseline = load_model(a.baseline_checkpoint, base_bundle, base_storage, a.data);
  const std::uint64_t seed = a.seed ? *a.seed : model.config.seed;
  Rng rng(seed);
  Rng pick = rng.derive("plot.classes");

  auto choose = [&](const std::vector<int>& pool) {
    std::vector<std::size_t> idx(pool.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    shuffle(idx, pick);
    std::vector<int> out_classes;
    for (std::size_t i = 0; i < idx.size() && static_cast<int>(i) < a.k; ++i) out_classes.push_back(pool[idx[i]]);
    return out_classes;
  };
  std::vector<int> classes = choose(bundle->seen_classes);
  const auto unseen = choose(bundle->unseen_classes);
  classes.insert(classes.end(), unseen.begin(), unseen.end());

  int per_class = a.samples;
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < bundle->n_samples(); ++i) members[bundle->labels[i]].push_back(i);
  for (int c : classes) per_class = std::min<int>(per_class, static_cast<int>(members[c].size()));
  if (per_class < 1) throw ValidationError("tsne: a chosen class has no real samples");

  std::vector<std::string> source;
  std::vector<int> label;
  std::vector<std::size_t> real_ids;
  Rng sample_rng = rng.derive("plot.samples");
  for (int c : classes) {
    auto ids = members[c];
    shuffle(ids, sample_rng);
    ids.resize(static_cast<std::size_t>(per_class));
    real_ids.insert(real_ids.end(), ids.begin(), ids.end());
  }
  const pipeline::SynthSet base_synth =
      pipeline::synthesize(pipeline::synth_models(baseline), bundle->prototypes, classes, per_class, rng.derive("plot.baseline"));
  const pipeline::SynthSet vads_synth =
      pipeline::synthesize(pipeline::synth_models(model), bundle->prototypes, classes, per_class, rng.derive("plot.vads"));
  const MatrixF real = bundle->rows(real_ids);
  MatrixF all(real.rows() + base_synth.features.rows() + vads_synth.features.rows(), real.cols());
  all << real, base_synth.features, vads_synth.features;
  const MatrixF coords = project(all, a.projection);
  const auto real_labels = bundle->labels_of(real_ids);
  std::vector<int> labels = real_labels;
  labels.insert(labels.end(), base_synth.labels.begin(), base_synth.labels.end());
  labels.insert(labels.end(), vads_synth.labels.begin(), vads_synth.labels.end());
  const std::set<int> unseen_set(bundle->unseen_classes.begin(), bundle->unseen_classes.end());

  Session session(a.out, a.force, "plotdata");
  session.manifest.config = model.config.to_json();
  session.manifest.config_hash = model.config.hash();
  std::ostringstream csv;
  csv.precision(9);
  csv << "source,class,split";
  for (Eigen::Index c = 0; c < coords.cols(); ++c) csv << (a.projection == "raw" ? ",f" : ",x") << c;
  csv << '\n';
  for (Eigen::Index r = 0; r < coords.rows(); ++r) {
    const Eigen::Index n = real.rows();
    const char* src = r < n ? "real" : (r < 2 * n ? "baseline-synth" : "vads-synth");
    const int c = labels[static_cast<std::size_t>(r)];
    csv << src << ',' << csv_field(bundle->class_name(c)) << ',' << (unseen_set.count(c) ? "unseen" : "seen");
    for (Eigen::Index k = 0; k < coords.cols(); ++k) csv << ',' << coords(r, k);
    csv << '\n';
  }
  write_text(session.artifact("tsne.csv"), csv.str());
  session.finish();
  out << "wrote " << coords.rows() << " rows (" << classes.size() << " classes x " << per_class
      << " samples x 3 sources)\n";
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"VADS generative zero-shot learning toolkit", "vads"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand all help");

  ToygenArgs tg;
  auto* toygen = app.add_subcommand("toygen", "Write a synthetic toy bundle");
  toygen->add_option("--out", tg.out, "Target directory")->required();
  toygen->add_option("--seed", tg.spec.seed, "Random seed");
  toygen->add_option("--n-seen", tg.spec.n_seen, "Seen classes");
  toygen->add_option("--n-unseen", tg.spec.n_unseen, "Unseen classes");
  toygen->add_option("--d-v", tg.spec.d_v, "Feature width");
  toygen->add_option("--d-a", tg.spec.d_a, "Prototype width");
  toygen->add_option("--samples", tg.spec.samples_per_class, "Samples per class");
  toygen->add_option("--sigma", tg.spec.sigma, "Feature noise scale");
  toygen->add_option("--test-seen-fraction", tg.spec.test_seen_fraction, "Held-out share of each seen class");
  toygen->add_flag("--force", tg.force, "Overwrite a non-empty target");

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Run VOSU stage 1 and adversarial training");
  train->add_option("--config", tr.config, "Experiment config (JSON)")->required();
  train->add_option("--data", tr.data, "Bundle directory")->required();
  train->add_option("--out", tr.out, "Run directory")->required();
  train->add_option("--seed", tr.seed, "Override config seed");
  train->add_option("--epochs", tr.epochs, "Override config epochs");
  train->add_flag("--force", tr.force, "Overwrite a non-empty run directory");

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Synthesize, train classifiers and report Acc/U/S/H");
  eval->add_option("--checkpoint", ev.checkpoint, "Checkpoint directory")->required();
  eval->add_option("--data", ev.data, "Bundle directory")->required();
  eval->add_option("--out", ev.out, "Output directory")->required();
  eval->add_option("--config", ev.config, "Config to compare against the checkpoint hash");
  eval->add_option("--seed", ev.seed, "Evaluation seed (default: config seed)");
  eval->add_option("--n-syn", ev.n_syn, "Synthesized samples per unseen class (default: per dataset)");
  eval->add_flag("--oracle", ev.oracle)->group("");
  eval->add_flag("--force", ev.force, "Overwrite a non-empty output directory");

  SuiteArgs ab;
  auto* ablate = app.add_subcommand("ablate", "Run the seven ablation configurations");
  ablate->add_option("--config", ab.config, "Base config")->required();
  ablate->add_option("--data", ab.data, "Bundle directory")->required();
  ablate->add_option("--out", ab.out, "Output directory")->required();
  ablate->add_option("--seed", ab.seed, "First seed");
  ablate->add_option("--n-seeds", ab.n_seeds, "Seeds per configuration");
  ablate->add_flag("--force", ab.force, "Overwrite a non-empty output directory");

  SuiteArgs pf;
  auto* priorforms = app.add_subcommand("priorforms", "Compare learned, none, random and external priors");
  priorforms->add_option("--config", pf.config, "Base config")->required();
  priorforms->add_option("--data", pf.data, "Bundle directory")->required();
  priorforms->add_option("--out", pf.out, "Output directory")->required();
  priorforms->add_option("--prior-vector", pf.prior_vector, "JSON array used by the external form");
  priorforms->add_option("--seed", pf.seed, "First seed");
  priorforms->add_option("--n-seeds", pf.n_seeds, "Seeds per form");
  priorforms->add_flag("--force", pf.force, "Overwrite a non-empty output directory");

  PlotArgs pd;
  auto* plotdata = app.add_subcommand("plotdata", "Export CSV data for t-SNE, heatmap and sweep plots");
  plotdata->add_option("--kind", pd.kind, "tsne | heatmap | sweep")
      ->required()
      ->check(CLI::IsMember({"tsne", "heatmap", "sweep"}));
  plotdata->add_option("--checkpoint", pd.checkpoint, "Checkpoint directory (tsne, heatmap)");
  plotdata->add_option("--baseline-checkpoint", pd.baseline_checkpoint, "Baseline checkpoint (tsne)");
  plotdata->add_option("--data", pd.data, "Bundle directory")->required();
  plotdata->add_option("--out", pd.out, "Output directory")->required();
  plotdata->add_option("--config", pd.config, "Base config (sweep)");
  plotdata->add_option("--param", pd.param, "Config field to sweep");
  plotdata->add_option("--values", pd.values, "Sweep values")->delimiter(',');
  plotdata->add_option("--seed", pd.seed, "Seed");
  plotdata->add_option("--n-seeds", pd.n_seeds, "Seeds per sweep value");
  plotdata->add_option("--k", pd.k, "Seen and unseen classes drawn (tsne)");
  plotdata->add_option("--samples", pd.samples, "Samples per class and source (tsne)");
  plotdata->add_option("--projection", pd.projection, "raw | pca")->check(CLI::IsMember({"raw", "pca"}));
  plotdata->add_flag("--force", pd.force, "Overwrite a non-empty output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  }

  try {
    if (*toygen) return cmd_toygen(tg, out);
    if (*train) return cmd_train(tr, out);
    if (*eval) return cmd_eval(ev, out, err);
    if (*ablate) return run_suite_command("ablation", ab, false, out);
    if (*priorforms) return run_suite_command("priorforms", pf, true, out);
    if (*plotdata) return cmd_plotdata(pd, out);
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kValidation;
}

}  // namespace vads::cli
