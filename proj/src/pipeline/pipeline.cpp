#include "vads/pipeline/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <set>
#include <sstream>

#include "vads/core/errors.hpp"
#include "vads/core/metrics.hpp"

namespace vads::pipeline {

using nn::Index;
using nn::Var;

SynthSet synthesize(const SynthModels& models, const MatrixF& prototypes, const std::vector<int>& unseen_classes,
                    int n_syn, const Rng& rng) {
  if (models.gan == nullptr) throw ValidationError("synthesize: no generator");
  if (!models.gan->trained()) throw ValidationError("synthesize: generator is untrained; run training first");
  if (n_syn < 1) throw ValidationError("synthesize: n_syn must be >= 1");
  if (unseen_classes.empty()) throw ValidationError("synthesize: no unseen classes");
  const Index d_a = prototypes.cols();
  const Index d_v = models.gan->dims().d_v;

  MatrixF table = prototypes;
  if (models.vosu != nullptr) {
    nn::NoGradGuard no_grad;
    table = models.vosu->apply_sum(nn::constant(prototypes)).value();
  }

  SynthSet out;
  out.n_syn = n_syn;
  out.features.resize(static_cast<Index>(unseen_classes.size()) * n_syn, d_v);
  out.labels.reserve(unseen_classes.size() * static_cast<std::size_t>(n_syn));
  nn::NoGradGuard no_grad;
  for (std::size_t k = 0; k < unseen_classes.size(); ++k) {
    const int c = unseen_classes[k];
    if (c < 0 || c >= prototypes.rows()) throw ValidationError("synthesize: class " + std::to_string(c) + " out of range");
    const Rng class_rng = rng.derive("synth." + std::to_string(c));
    Rng code_rng = class_rng.derive("codes");
    Rng noise_rng = class_rng.derive("noise");
    Var<float> noise;
    if (models.vdkl != nullptr) {
      noise = models.vdkl->synth_prior_noise(n_syn, code_rng, noise_rng);
    } else {
      noise = nn::constant(nn::normal_matrix<float>(noise_rng, n_syn, d_a));
    }
    const MatrixF cond = table.row(c).replicate(n_syn, 1);
    out.features.middleRows(static_cast<Index>(k) * n_syn, n_syn) =
        models.gan->generate(noise, nn::constant(cond)).value();
    out.labels.insert(out.labels.end(), static_cast<std::size_t>(n_syn), c);
  }
  if (!out.features.allFinite()) throw std::runtime_error("synthesize: generator produced non-finite features");
  return out;
}

MatrixF enhance(const model::Vdkl<float>* vdkl, const MatrixF& x) {
  if (vdkl == nullptr || vdkl->dims().d_l == 0) return x;
  if (x.cols() != vdkl->dims().d_v) {
    throw ValidationError("enhance: feature width " + std::to_string(x.cols()) + " != d_v " +
                          std::to_string(vdkl->dims().d_v));
  }
  const MatrixF l = vdkl->latent_features(x);
  MatrixF out(x.rows(), x.cols() + l.cols());
  out << x, l;
  return out;
}

std::vector<int> ClassClassifier::predict(const MatrixF& x) const {
  const auto idx = model.predict(x);
  std::vector<int> out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = classes[static_cast<std::size_t>(idx[i])];
  return out;
}

nn::SoftmaxTrainOptions classifier_options(const ExperimentConfig& config) {
  return {config.cls_epochs, config.cls_lr, config.beta1, config.beta2,
          static_cast<std::size_t>(config.cls_batch_size)};
}

namespace {

ClassClassifier fit(const MatrixF& x, const std::vector<int>& labels, const std::vector<int>& classes,
                    const ExperimentConfig& config, Rng& rng) {
  std::map<int, Index> position;
  for (std::size_t i = 0; i < classes.size(); ++i) position[classes[i]] = static_cast<Index>(i);
  std::vector<Index> targets(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto it = position.find(labels[i]);
    if (it == position.end()) throw ValidationError("classifier: label " + std::to_string(labels[i]) + " not in class list");
    targets[i] = it->second;
  }
  ClassClassifier out;
  out.classes = classes;
  out.model = nn::train_linear_softmax<float>(x, targets, static_cast<Index>(classes.size()), classifier_options(config), rng);
  return out;
}

std::string join(const std::vector<int>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  return os.str();
}

}  // namespace

ClassClassifier train_czsl(const MatrixF& x, const std::vector<int>& labels, const std::vector<int>& classes,
                           const ExperimentConfig& config, Rng rng) {
  if (x.rows() == 0) throw ValidationError("train_czsl: synthetic set is empty");
  const std::set<int> distinct(labels.begin(), labels.end());
  if (classes.size() < 2 || distinct.size() < 2) {
    throw ValidationError("train_czsl: degenerate input, at least two classes with rows are required");
  }
  return fit(x, labels, classes, config, rng);
}

ClassClassifier train_gzsl(const MatrixF& real_x, const std::vector<int>& real_labels, const MatrixF& synth_x,
                           const std::vector<int>& synth_labels, const std::vector<int>& classes,
                           const ExperimentConfig& config, Rng rng) {
  if (real_x.rows() == 0) throw ValidationError("train_gzsl: no real seen rows");
  std::set<int> present(real_labels.begin(), real_labels.end());
  present.insert(synth_labels.begin(), synth_labels.end());
  std::vector<int> missing;
  for (int c : classes) {
    if (!present.count(c)) missing.push_back(c);
  }
  if (!missing.empty()) throw ValidationError("train_gzsl: classes without training rows: " + join(missing));
  if (synth_x.rows() > 0 && synth_x.cols() != real_x.cols()) {
    throw ValidationError("train_gzsl: real and synthetic feature widths differ");
  }
  MatrixF x(real_x.rows() + synth_x.rows(), real_x.cols());
  x.topRows(real_x.rows()) = real_x;
  if (synth_x.rows() > 0) x.bottomRows(synth_x.rows()) = synth_x;
  std::vector<int> labels = real_labels;
  labels.insert(labels.end(), synth_labels.begin(), synth_labels.end());
  return fit(x, labels, classes, config, rng);
}

EvalReport evaluate_predictions(const std::vector<int>& czsl_unseen, const std::vector<int>& gzsl_unseen,
                                const std::vector<int>& gzsl_seen, const DatasetBundle& bundle) {
  if (bundle.split.test_unseen.empty() || bundle.split.test_seen.empty()) {
    throw ValidationError("evaluate: test splits must be non-empty");
  }
  const auto truth_u = bundle.labels_of(bundle.split.test_unseen);
  const auto truth_s = bundle.labels_of(bundle.split.test_seen);
  const auto acc = per_class_accuracy(czsl_unseen, truth_u, bundle.unseen_classes);
  const auto u = per_class_accuracy(gzsl_unseen, truth_u, bundle.unseen_classes);
  const auto s = per_class_accuracy(gzsl_seen, truth_s, bundle.seen_classes);

  EvalReport report;
  report.acc = acc.mean;
  report.u = u.mean;
  report.s = s.mean;
  report.h = harmonic_mean(report.u, report.s);
  for (const auto& [c, a] : u.per_class) report.per_class[bundle.class_name(c)] = a;
  for (const auto& [c, a] : s.per_class) report.per_class[bundle.class_name(c)] = a;
  for (int c : u.empty_classes) report.warnings.push_back("unseen class " + bundle.class_name(c) + " has no test samples; excluded");
  for (int c : s.empty_classes) report.warnings.push_back("seen class " + bundle.class_name(c) + " has no test samples; excluded");
  return report;
}

EvalReport evaluate(const ClassClassifier& czsl, const ClassClassifier& gzsl, const DatasetBundle& bundle,
                    const model::Vdkl<float>* enhancer) {
  const MatrixF xu = enhance(enhancer, bundle.rows(bundle.split.test_unseen));
  const MatrixF xs = enhance(enhancer, bundle.rows(bundle.split.test_seen));
  return evaluate_predictions(czsl.predict(xu), gzsl.predict(xu), gzsl.predict(xs), bundle);
}

int resolve_n_syn(const ExperimentConfig& config, const std::string& dataset_name) {
  if (config.n_syn > 0) return config.n_syn;
  const int d = default_n_syn(dataset_name);
  if (d > 0) return d;
  throw ValidationError("n_syn is 0 and dataset '" + dataset_name +
                        "' has no default synthesis count; set n_syn in the config");
}

TrainedRun run_training(const ExperimentConfig& config, const DatasetBundle& bundle, std::uint64_t seed) {
  const ExperimentConfig resolved = config.resolved(bundle.d_v(), bundle.d_a());
  const Rng root(seed);
  TrainedRun run;
  run.model = model::init_model(resolved, bundle, root);
  if (resolved.use_vosu) run.stage1 = model::run_stage1(run.model.vosu, bundle, resolved, root.derive("stage1.batches"));
  run.train = model::train(run.model, bundle, root);
  return run;
}

SynthModels synth_models(const model::VadsModel& model) {
  SynthModels s;
  s.gan = &model.gan;
  s.vdkl = model.config.use_vdkl ? &model.vdkl : nullptr;
  s.vosu = model.config.use_vosu ? &model.vosu : nullptr;
  return s;
}

EvalReport run_evaluation(const model::VadsModel& model, const DatasetBundle& bundle, std::uint64_t seed,
                          const EvalOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  require_valid(bundle);
  const ExperimentConfig& config = model.config;
  EvalReport report;
  if (options.oracle) {
    const auto truth_u = bundle.labels_of(bundle.split.test_unseen);
    report = evaluate_predictions(truth_u, truth_u, bundle.labels_of(bundle.split.test_seen), bundle);
  } else {
    const int n_syn = options.n_syn > 0 ? options.n_syn : resolve_n_syn(config, bundle.name);
    const Rng root(seed);
    const SynthSet synth =
        synthesize(synth_models(model), bundle.prototypes, bundle.unseen_classes, n_syn, root.derive("synth"));
    const model::Vdkl<float>* enhancer = config.use_enhancement ? &model.vdkl : nullptr;
    const MatrixF synth_x = enhance(enhancer, synth.features);
    const MatrixF real_x = enhance(enhancer, bundle.rows(bundle.split.train_seen));
    std::vector<int> all_classes(bundle.n_classes());
    for (std::size_t c = 0; c < all_classes.size(); ++c) all_classes[c] = static_cast<int>(c);
    const auto czsl = train_czsl(synth_x, synth.labels, bundle.unseen_classes, config, root.derive("czsl"));
    const auto gzsl = train_gzsl(real_x, bundle.labels_of(bundle.split.train_seen), synth_x, synth.labels,
                                 all_classes, config, root.derive("gzsl"));
    report = evaluate(czsl, gzsl, bundle, enhancer);
    report.synthesized_rows = synth.labels.size();
  }
  report.config_hash = config.hash();
  report.seed = seed;
  report.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const DatasetBundle& bundle, std::uint64_t seed,
                                const EvalOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentResult out;
  out.run = run_training(config, bundle, seed);
  out.report = run_evaluation(out.run.model, bundle, seed, options);
  out.report.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

nn::Checkpoint to_checkpoint(const model::VadsModel& model, const Rng& rng) {
  nn::Checkpoint ck;
  ck.sets.emplace_back("generator", model.gan.generator_params());
  ck.sets.emplace_back("critic", model.gan.critic_params());
  ck.sets.emplace_back("vdkl", model.vdkl.params());
  ck.sets.emplace_back("vsp", model.vosu.vsp_params());
  ck.sets.emplace_back("sum", model.vosu.sum_params());
  if (model.classifier.defined()) {
    nn::ParamSet<float> cls;
    cls.add("weight", model.classifier.weight);
    cls.add("bias", model.classifier.bias);
    ck.sets.emplace_back("classifier", std::move(cls));
  }
  if (model.vdkl.fixed_prior().size() > 0) {
    nn::ParamSet<float> fp;
    fp.add("row", model.vdkl.fixed_prior());
    ck.sets.emplace_back("fixed_prior", std::move(fp));
  }
  ck.config_hash = model.config.hash();
  ck.rng_state = rng.state();
  ck.metadata["config"] = model.config.to_json();
  ck.metadata["trained"] = model.gan.trained();
  ck.metadata["seen_classes"] = model.seen_classes;
  return ck;
}

namespace {

void assign(nn::ParamSet<float>& target, const nn::ParamSet<float>& source, const std::string& set) {
  if (target.names() != source.names()) {
    throw nn::CorruptCheckpointError("checkpoint set '" + set + "' does not match the configured architecture");
  }
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (target.value(i).rows() != source.value(i).rows() || target.value(i).cols() != source.value(i).cols()) {
      throw ValidationError("checkpoint array '" + set + "." + source.name(i) + "' has shape " +
                            std::to_string(source.value(i).rows()) + "x" + std::to_string(source.value(i).cols()) +
                            ", expected " + std::to_string(target.value(i).rows()) + "x" +
                            std::to_string(target.value(i).cols()));
    }
  }
  target = source;
}

}  // namespace

model::VadsModel from_checkpoint(const nn::Checkpoint& ck, const DatasetBundle& bundle) {
  if (!ck.metadata.contains("config")) throw nn::CorruptCheckpointError("checkpoint manifest carries no config");
  const ExperimentConfig config = ExperimentConfig::from_json(ck.metadata.at("config"));
  if (config.d_v != bundle.d_v() || config.d_a != bundle.d_a()) {
    throw ValidationError("checkpoint/bundle dimension mismatch: checkpoint d_v " + std::to_string(config.d_v) +
                          ", d_a " + std::to_string(config.d_a) + "; bundle features.f32 width " +
                          std::to_string(bundle.d_v()) + ", prototypes.f32 width " + std::to_string(bundle.d_a()));
  }
  model::VadsModel m;
  m.config = config;
  Rng scratch(0);
  m.gan = model::Gan<float>(model::gan_dims(config), scratch, scratch);
  m.vdkl = model::Vdkl<float>(model::vdkl_dims(config), static_cast<float>(config.alpha),
                              static_cast<float>(config.tau), config.prior_form, scratch);
  m.vosu = model::Vosu<float>(model::vosu_dims(config), scratch);
  assign(m.gan.generator_params(), ck.set("generator"), "generator");
  assign(m.gan.critic_params(), ck.set("critic"), "critic");
  assign(m.vdkl.params(), ck.set("vdkl"), "vdkl");
  assign(m.vosu.vsp_params(), ck.set("vsp"), "vsp");
  assign(m.vosu.sum_params(), ck.set("sum"), "sum");
  if (ck.has_set("classifier")) {
    m.classifier.weight = ck.set("classifier").at("weight").value();
    m.classifier.bias = ck.set("classifier").at("bias").value();
  }
  if (ck.has_set("fixed_prior")) m.vdkl.set_fixed_prior(ck.set("fixed_prior").at("row").value());
  m.vosu.update_prototypes(bundle.prototypes);
  if (ck.metadata.value("trained", false)) m.gan.mark_trained();
  m.seen_classes = ck.metadata.value("seen_classes", bundle.seen_classes);
  return m;
}

}  // namespace vads::pipeline
