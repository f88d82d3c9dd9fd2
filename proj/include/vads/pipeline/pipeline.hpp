#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vads/core/config.hpp"
#include "vads/core/dataset.hpp"
#include "vads/core/report.hpp"
#include "vads/core/rng.hpp"
#include "vads/model/cwgan.hpp"
#include "vads/model/vosu.hpp"
#include "vads/nn/checkpoint.hpp"
#include "vads/nn/softmax.hpp"

namespace vads::pipeline {

struct SynthSet {
  MatrixF features;         // n_unseen * n_syn x d_v
  std::vector<int> labels;  // class of each row
  std::string checkpoint_hash;
  int n_syn = 0;
};

/// States consulted at synthesis. Null vdkl: N(0,1) noise. Null vosu:
/// predefined prototypes as the condition.
struct SynthModels {
  const model::Gan<float>* gan = nullptr;
  const model::Vdkl<float>* vdkl = nullptr;
  const model::Vosu<float>* vosu = nullptr;
};

/// For each unseen class c, n_syn rows x = G(Z', SUM(a_c)) with codes and
/// noise drawn from streams derived per class. Reads only the prototype
/// table and class lists, never real features.
SynthSet synthesize(const SynthModels& models, const MatrixF& prototypes, const std::vector<int>& unseen_classes,
                    int n_syn, const Rng& rng);

/// concat(x, l) with the deterministic latent head; x itself when vdkl is
/// null or d_l = 0.
MatrixF enhance(const model::Vdkl<float>* vdkl, const MatrixF& x);

/// Softmax classifier whose outputs are mapped back to class ids.
struct ClassClassifier {
  nn::LinearSoftmax<float> model;
  std::vector<int> classes;
  std::vector<int> predict(const MatrixF& x) const;
};

nn::SoftmaxTrainOptions classifier_options(const ExperimentConfig& config);

/// Unseen-class classifier on synthetic features. Needs at least two classes.
ClassClassifier train_czsl(const MatrixF& x, const std::vector<int>& labels, const std::vector<int>& classes,
                           const ExperimentConfig& config, Rng rng);

/// Classifier over every class on real seen plus synthetic unseen rows.
/// Throws listing the classes that have no rows.
ClassClassifier train_gzsl(const MatrixF& real_x, const std::vector<int>& real_labels, const MatrixF& synth_x,
                           const std::vector<int>& synth_labels, const std::vector<int>& classes,
                           const ExperimentConfig& config, Rng rng);

/// Metrics from raw predictions: CZSL on test_unseen, GZSL on test_unseen
/// and test_seen.
EvalReport evaluate_predictions(const std::vector<int>& czsl_unseen, const std::vector<int>& gzsl_unseen,
                                const std::vector<int>& gzsl_seen, const DatasetBundle& bundle);

EvalReport evaluate(const ClassClassifier& czsl, const ClassClassifier& gzsl, const DatasetBundle& bundle,
                    const model::Vdkl<float>* enhancer);

/// Per-unseen-class synthesis count: config.n_syn, else the benchmark default.
int resolve_n_syn(const ExperimentConfig& config, const std::string& dataset_name);

struct TrainedRun {
  model::VadsModel model;
  model::Stage1Result stage1;
  model::TrainResult train;
};

/// Init, VOSU stage 1 when enabled, then adversarial training.
TrainedRun run_training(const ExperimentConfig& config, const DatasetBundle& bundle, std::uint64_t seed);

SynthModels synth_models(const model::VadsModel& model);

struct EvalOptions {
  int n_syn = 0;  // 0: resolve_n_syn
  bool oracle = false;  // test hook: classifiers replaced by ground truth
};

/// Synthesize, enhance, train both classifiers, evaluate.
EvalReport run_evaluation(const model::VadsModel& model, const DatasetBundle& bundle, std::uint64_t seed,
                          const EvalOptions& options = {});

struct ExperimentResult {
  TrainedRun run;
  EvalReport report;
};

ExperimentResult run_experiment(const ExperimentConfig& config, const DatasetBundle& bundle, std::uint64_t seed,
                                const EvalOptions& options = {});

/// Checkpoint round trip of every trained state.
nn::Checkpoint to_checkpoint(const model::VadsModel& model, const Rng& rng);
model::VadsModel from_checkpoint(const nn::Checkpoint& checkpoint, const DatasetBundle& bundle);

}  // namespace vads::pipeline
