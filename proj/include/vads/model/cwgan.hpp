#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "vads/core/config.hpp"
#include "vads/core/dataset.hpp"
#include "vads/core/rng.hpp"
#include "vads/model/vdkl.hpp"
#include "vads/model/vosu.hpp"
#include "vads/nn/mlp.hpp"
#include "vads/nn/softmax.hpp"

namespace vads::model {

struct GanDims {
  Index d_v = 0;
  Index d_a = 0;
  Index hidden_g = 0;
  Index hidden_d = 0;
  nn::Activation generator_output = nn::Activation::relu;
};

/// Generator G [2 d_a -> hidden_g -> d_v] and critic D [d_v + d_a -> hidden_d -> 1].
template <typename T>
class Gan {
 public:
  Gan() = default;
  Gan(const GanDims& dims, Rng& generator_init, Rng& critic_init);

  const GanDims& dims() const { return dims_; }
  nn::ParamSet<T>& generator_params() { return g_; }
  const nn::ParamSet<T>& generator_params() const { return g_; }
  nn::ParamSet<T>& critic_params() { return d_; }
  const nn::ParamSet<T>& critic_params() const { return d_; }

  /// G(concat(noise, cond)).
  Var<T> generate(const Var<T>& noise, const Var<T>& cond) const;
  Matrix<T> generate(const Matrix<T>& noise, const Matrix<T>& cond) const;
  /// D(concat(x, cond)), n x 1.
  Var<T> critic(const Var<T>& x, const Var<T>& cond) const;

  bool trained() const { return trained_; }
  void mark_trained() { trained_ = true; }

  template <typename U>
  Gan<U> cast() const;

 private:
  template <typename U>
  friend class Gan;

  GanDims dims_;
  nn::MlpSpec g_spec_;
  nn::MlpSpec d_spec_;
  nn::ParamSet<T> g_;
  nn::ParamSet<T> d_;
  bool trained_ = false;
};

/// Generator condition: prior noise Z' first, updated prototype rows second.
template <typename T>
struct DynamicPrototype {
  Var<T> noise;    // n x d_a
  Var<T> updated;  // n x d_a
  Var<T> condition() const { return nn::hconcat(noise, updated); }
};

template <typename T>
Var<T> generate(const Gan<T>& gan, const DynamicPrototype<T>& cond) {
  return gan.generate(cond.noise, cond.updated);
}

/// Interpolates u * x_real + (1 - u) * x_fake, u one entry per row.
template <typename T>
Matrix<T> interpolate(const Matrix<T>& x_real, const Matrix<T>& x_fake, const Matrix<T>& u);

/// E[(||grad_x D(x~, cond)||_2 - 1)^2], differentiable w.r.t. the critic.
template <typename T>
Var<T> gradient_penalty(const Gan<T>& gan, const Matrix<T>& interpolates, const Var<T>& cond);

template <typename T>
struct CriticLoss {
  Var<T> total;        // wasserstein + lambda_gp * penalty
  Var<T> wasserstein;  // mean D(fake) - mean D(real)
  Var<T> penalty;
};

/// u ~ U[0,1] per row drawn from rng.
template <typename T>
CriticLoss<T> critic_loss(const Gan<T>& gan, const Matrix<T>& x_real, const Matrix<T>& x_fake,
                          const Matrix<T>& cond, T lambda_gp, Rng& rng);
template <typename T>
CriticLoss<T> critic_loss_with(const Gan<T>& gan, const Matrix<T>& x_real, const Matrix<T>& x_fake,
                               const Matrix<T>& cond, T lambda_gp, const Matrix<T>& u);

/// Frozen softmax over seen classes used by the classification regularizer.
template <typename T>
struct FrozenClassifier {
  Matrix<T> weight;  // d_v x n_seen
  Matrix<T> bias;    // 1 x n_seen
  bool defined() const { return weight.size() > 0; }
  Var<T> logits(const Var<T>& x) const;
  template <typename U>
  FrozenClassifier<U> cast() const {
    return {weight.template cast<U>(), bias.template cast<U>()};
  }
};

/// Softmax classifier on real train_seen features (targets are positions in
/// bundle.seen_classes).
FrozenClassifier<float> pretrain_seen_classifier(const DatasetBundle& bundle, const ExperimentConfig& config,
                                                 Rng rng);

/// Position of each label inside `seen_classes`; throws for unseen labels.
std::vector<Index> seen_targets(std::span<const int> labels, const std::vector<int>& seen_classes);

/// Named sub-streams consumed by training; derived from the run root.
struct GanStreams {
  Rng batches;
  Rng noise;
  Rng gp;
  Rng encode;
  static GanStreams from(const Rng& root);
};

/// Components of the generator objective. Disabled terms stay undefined.
template <typename T>
struct GeneratorLoss {
  Var<T> total;
  Var<T> adversarial;
  Var<T> cls;
  Var<T> con;
  Var<T> kl;
  Var<T> sc;
};

/// Borrowed views of the states one generator step works on. A null vdkl
/// means pure N(0,1) noise; a null vosu means the predefined prototypes.
template <typename T>
struct StepModels {
  const Gan<T>* gan = nullptr;
  const Vdkl<T>* vdkl = nullptr;
  const Vosu<T>* vosu = nullptr;
  const FrozenClassifier<T>* classifier = nullptr;
};

template <typename T>
struct StepBatch {
  Matrix<T> features;
  std::vector<int> labels;
  std::vector<Index> cls_targets;  // positions among seen classes
  Matrix<T> table;                 // all predefined prototypes A
};

/// L_total = L_G + lambda_con L_con + lambda_kl L_kl + lambda_sc L_sc with
/// L_G = -mean D(G(Z', adot_y), adot_y) + lambda_cls CE. Streams: eps and
/// positive partners from encode_rng, Gaussian noise from noise_rng.
template <typename T>
GeneratorLoss<T> generator_loss(const StepModels<T>& models, const StepBatch<T>& batch,
                                const ExperimentConfig& config, Rng& encode_rng, Rng& noise_rng);

/// Critic-side loss of one critic step on the current states.
template <typename T>
CriticLoss<T> critic_step_loss(const StepModels<T>& models, const StepBatch<T>& batch,
                               const ExperimentConfig& config, Rng& encode_rng, Rng& noise_rng, Rng& gp_rng);

struct TrainLogRow {
  long step = 0;
  double l_d = 0, l_g_adv = 0, l_cls = 0, l_con = 0, l_kl = 0, l_sc = 0, l_total = 0;
};

struct TrainResult {
  std::vector<TrainLogRow> log;
  long skipped_contrastive = 0;  // batches without a positive pair
};

void write_train_log(std::ostream& out, const std::vector<TrainLogRow>& log);

/// Everything a VADS run trains.
struct VadsModel {
  ExperimentConfig config;  // resolved
  Gan<float> gan;
  Vdkl<float> vdkl;
  Vosu<float> vosu;
  FrozenClassifier<float> classifier;
  std::vector<int> seen_classes;
};

/// Initializes every state from named streams of `root`. Stage 1 is not run.
VadsModel init_model(const ExperimentConfig& resolved_config, const DatasetBundle& bundle, const Rng& root);

/// Alternating critic / generator optimization. Each batch: critic_steps
/// critic updates, then one joint update of G and of VE/DKL/p and SUM when
/// enabled.
TrainResult train(VadsModel& model, const DatasetBundle& bundle, const Rng& root);

/// Plain conditional WGAN-GP with classification regularizer: condition is
/// concat(N(0,1), a_y). Shares stream names with train() so that VADS with
/// both modules disabled reproduces it exactly.
class ClswganBaseline {
 public:
  ClswganBaseline(const ExperimentConfig& resolved_config, const DatasetBundle& bundle, const Rng& root);
  TrainResult train(const DatasetBundle& bundle);
  const Gan<float>& gan() const { return gan_; }

 private:
  ExperimentConfig config_;
  Rng root_;
  Gan<float> gan_;
  FrozenClassifier<float> classifier_;
  std::vector<int> seen_classes_;
};

GanDims gan_dims(const ExperimentConfig& resolved_config);

}  // namespace vads::model
