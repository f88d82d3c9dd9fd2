#include "vads/model/cwgan.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <string>
#include <unordered_map>

#include <json.hpp>

#include "vads/core/errors.hpp"
#include "vads/data/batches.hpp"
#include "vads/nn/adam.hpp"

namespace vads::model {

using nn::Activation;
using nn::MlpSpec;

template <typename T>
Gan<T>::Gan(const GanDims& dims, Rng& generator_init, Rng& critic_init) : dims_(dims) {
  g_spec_ = MlpSpec::make({2 * dims.d_a, dims.hidden_g, dims.d_v}, Activation::leaky_relu, dims.generator_output);
  d_spec_ = MlpSpec::make({dims.d_v + dims.d_a, dims.hidden_d, 1}, Activation::leaky_relu, Activation::identity);
  nn::init_mlp(g_spec_, g_, "gen", generator_init);
  nn::init_mlp(d_spec_, d_, "critic", critic_init);
}

template <typename T>
Var<T> Gan<T>::generate(const Var<T>& noise, const Var<T>& cond) const {
  if (noise.cols() != dims_.d_a || cond.cols() != dims_.d_a) {
    throw ValidationError("generate: noise and condition must both have width d_a = " + std::to_string(dims_.d_a));
  }
  return nn::forward(g_spec_, g_, "gen", nn::hconcat(noise, cond));
}

template <typename T>
Matrix<T> Gan<T>::generate(const Matrix<T>& noise, const Matrix<T>& cond) const {
  nn::NoGradGuard no_grad;
  return generate(nn::constant(noise), nn::constant(cond)).value();
}

template <typename T>
Var<T> Gan<T>::critic(const Var<T>& x, const Var<T>& cond) const {
  if (x.cols() != dims_.d_v || cond.cols() != dims_.d_a) throw ValidationError("critic: input width mismatch");
  return nn::forward(d_spec_, d_, "critic", nn::hconcat(x, cond));
}

template <typename T>
template <typename U>
Gan<U> Gan<T>::cast() const {
  Gan<U> out;
  out.dims_ = dims_;
  out.g_spec_ = g_spec_;
  out.d_spec_ = d_spec_;
  out.g_ = g_.template cast<U>();
  out.d_ = d_.template cast<U>();
  out.trained_ = trained_;
  return out;
}

template <typename T>
Matrix<T> interpolate(const Matrix<T>& x_real, const Matrix<T>& x_fake, const Matrix<T>& u) {
  if (x_real.rows() != x_fake.rows() || x_real.cols() != x_fake.cols()) {
    throw ValidationError("interpolate: real and fake batches differ in shape");
  }
  if (u.rows() != x_real.rows() || u.cols() != 1) throw ValidationError("interpolate: u must be n x 1");
  Matrix<T> out(x_real.rows(), x_real.cols());
  for (Index r = 0; r < out.rows(); ++r) {
    out.row(r) = u(r, 0) * x_real.row(r) + (T(1) - u(r, 0)) * x_fake.row(r);
  }
  return out;
}

template <typename T>
Var<T> gradient_penalty(const Gan<T>& gan, const Matrix<T>& interpolates, const Var<T>& cond) {
  const Var<T> xt(interpolates, true);
  const Var<T> scores = gan.critic(xt, cond);
  const Var<T> g = nn::grad(nn::sum(scores), {xt}, true)[0];
  const Var<T> norms = nn::sqrt(nn::add_scalar(nn::sum_cols(nn::square(g)), T(1e-12)));
  return nn::mean(nn::square(nn::add_scalar(norms, T(-1))));
}

template <typename T>
CriticLoss<T> critic_loss_with(const Gan<T>& gan, const Matrix<T>& x_real, const Matrix<T>& x_fake,
                               const Matrix<T>& cond, T lambda_gp, const Matrix<T>& u) {
  if (x_real.rows() != cond.rows()) throw ValidationError("critic_loss: condition rows differ from batch");
  const Matrix<T> xt = interpolate(x_real, x_fake, u);
  const Var<T> c = nn::constant(cond);
  CriticLoss<T> out;
  out.wasserstein = nn::sub(nn::mean(gan.critic(nn::constant(x_fake), c)), nn::mean(gan.critic(nn::constant(x_real), c)));
  out.penalty = gradient_penalty(gan, xt, c);
  out.total = nn::add(out.wasserstein, nn::scale(out.penalty, lambda_gp));
  return out;
}

template <typename T>
CriticLoss<T> critic_loss(const Gan<T>& gan, const Matrix<T>& x_real, const Matrix<T>& x_fake,
                          const Matrix<T>& cond, T lambda_gp, Rng& rng) {
  return critic_loss_with(gan, x_real, x_fake, cond, lambda_gp, nn::uniform_matrix<T>(rng, x_real.rows(), 1));
}

template <typename T>
Var<T> FrozenClassifier<T>::logits(const Var<T>& x) const {
  if (!defined()) throw ValidationError("frozen classifier is not trained");
  return nn::add_bias(nn::matmul(x, nn::constant(weight)), nn::constant(bias));
}

std::vector<Index> seen_targets(std::span<const int> labels, const std::vector<int>& seen_classes) {
  std::unordered_map<int, Index> position;
  for (std::size_t i = 0; i < seen_classes.size(); ++i) position[seen_classes[i]] = static_cast<Index>(i);
  std::vector<Index> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto it = position.find(labels[i]);
    if (it == position.end()) throw ValidationError("label " + std::to_string(labels[i]) + " is not a seen class");
    out[i] = it->second;
  }
  return out;
}

FrozenClassifier<float> pretrain_seen_classifier(const DatasetBundle& bundle, const ExperimentConfig& config,
                                                 Rng rng) {
  const MatrixF x = bundle.rows(bundle.split.train_seen);
  const auto labels = bundle.labels_of(bundle.split.train_seen);
  const auto targets = seen_targets(labels, bundle.seen_classes);
  const nn::SoftmaxTrainOptions opts{config.cls_epochs, config.cls_lr, config.beta1, config.beta2,
                                     static_cast<std::size_t>(config.cls_batch_size)};
  const auto model =
      nn::train_linear_softmax<float>(x, targets, static_cast<Index>(bundle.seen_classes.size()), opts, rng);
  return {model.params.at("cls.w0").value(), model.params.at("cls.b0").value()};
}

GanStreams GanStreams::from(const Rng& root) {
  return {root.derive("gan.batches"), root.derive("gan.noise"), root.derive("gan.gp"), root.derive("gan.encode")};
}

namespace {

template <typename T>
std::vector<Index> as_indices(std::span<const int> labels) {
  return std::vector<Index>(labels.begin(), labels.end());
}

template <typename T>
Var<T> condition_table(const StepModels<T>& models, const Matrix<T>& table) {
  const Var<T> a = nn::constant(table);
  return models.vosu != nullptr ? models.vosu->apply_sum(a) : a;
}

}  // namespace

template <typename T>
GeneratorLoss<T> generator_loss(const StepModels<T>& models, const StepBatch<T>& batch,
                                const ExperimentConfig& config, Rng& encode_rng, Rng& noise_rng) {
  const Gan<T>& gan = *models.gan;
  const Index n = batch.features.rows();
  const Var<T> x = nn::constant(batch.features);
  const Var<T> table = condition_table(models, batch.table);
  const Var<T> cond = nn::gather_rows(table, as_indices<T>(batch.labels));

  GeneratorLoss<T> out;
  Var<T> noise;
  if (models.vdkl != nullptr) {
    const EncodedBatch<T> enc = models.vdkl->encode(x, encode_rng);
    if (config.lambda_kl > 0) out.kl = kl_loss(enc.mu, enc.log_var);
    if (config.effective_lambda_con() > 0) {
      const auto positives = pick_positives(batch.labels, encode_rng);
      const bool any = std::any_of(positives.begin(), positives.end(), [](Index p) { return p >= 0; });
      if (any) {
        out.con = contrastive_loss(enc.latent, std::span<const int>(batch.labels), models.vdkl->tau(),
                                   std::span<const Index>(positives));
      }
    }
    noise = models.vdkl->prior_noise(enc.z, noise_rng);
  } else {
    noise = nn::constant(nn::normal_matrix<T>(noise_rng, n, gan.dims().d_a));
  }

  const Var<T> fake = gan.generate(noise, cond);
  out.adversarial = nn::neg(nn::mean(gan.critic(fake, cond)));
  out.total = out.adversarial;
  if (models.classifier != nullptr && config.lambda_cls > 0) {
    out.cls = nn::cross_entropy(models.classifier->logits(fake), std::span<const Index>(batch.cls_targets));
    out.total = nn::add(out.total, nn::scale(out.cls, static_cast<T>(config.lambda_cls)));
  }
  if (out.con.defined()) out.total = nn::add(out.total, nn::scale(out.con, static_cast<T>(config.effective_lambda_con())));
  if (out.kl.defined()) out.total = nn::add(out.total, nn::scale(out.kl, static_cast<T>(config.lambda_kl)));
  if (models.vosu != nullptr && config.effective_lambda_sc() > 0) {
    out.sc = consistency_loss(*models.vosu, table);
    out.total = nn::add(out.total, nn::scale(out.sc, static_cast<T>(config.effective_lambda_sc())));
  }
  return out;
}

template <typename T>
CriticLoss<T> critic_step_loss(const StepModels<T>& models, const StepBatch<T>& batch,
                               const ExperimentConfig& config, Rng& encode_rng, Rng& noise_rng, Rng& gp_rng) {
  const Gan<T>& gan = *models.gan;
  Matrix<T> cond;
  Matrix<T> fake;
  {
    nn::NoGradGuard no_grad;
    const Index n = batch.features.rows();
    cond = nn::gather_rows(condition_table(models, batch.table), as_indices<T>(batch.labels)).value();
    Var<T> noise;
    if (models.vdkl != nullptr) {
      const EncodedBatch<T> enc = models.vdkl->encode(nn::constant(batch.features), encode_rng);
      noise = models.vdkl->prior_noise(enc.z, noise_rng);
    } else {
      noise = nn::constant(nn::normal_matrix<T>(noise_rng, n, gan.dims().d_a));
    }
    fake = gan.generate(noise, nn::constant(cond)).value();
  }
  return critic_loss(gan, batch.features, fake, cond, static_cast<T>(config.lambda_gp), gp_rng);
}

void write_train_log(std::ostream& out, const std::vector<TrainLogRow>& log) {
  out << "step\tL_D\tL_G_adv\tL_cls\tL_con\tL_kl\tL_sc\tL_total\n";
  out.precision(9);
  for (const auto& r : log) {
    out << r.step << '\t' << r.l_d << '\t' << r.l_g_adv << '\t' << r.l_cls << '\t' << r.l_con << '\t' << r.l_kl
        << '\t' << r.l_sc << '\t' << r.l_total << '\n';
  }
}

GanDims gan_dims(const ExperimentConfig& c) {
  return {c.d_v, c.d_a, c.hidden_g, c.hidden_d, nn::activation_from_string(c.generator_output)};
}

namespace {

MatrixF load_prior_vector(const std::string& path, int d_a) {
  std::ifstream in(path);
  if (!in) throw LoadError("missing file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError("prior vector file " + path + " is not valid JSON: " + e.what());
  }
  if (!j.is_array() || static_cast<int>(j.size()) != d_a) {
    throw ValidationError("prior vector file " + path + " must hold a JSON array of " + std::to_string(d_a) +
                          " numbers");
  }
  MatrixF row(1, d_a);
  for (int i = 0; i < d_a; ++i) {
    if (!j[static_cast<std::size_t>(i)].is_number()) throw ValidationError("prior vector file " + path + ": non-numeric entry");
    row(0, i) = j[static_cast<std::size_t>(i)].get<float>();
  }
  if (!row.allFinite()) throw ValidationError("prior vector file " + path + ": non-finite entry");
  return row;
}

double item_or_zero(const Var<float>& v) { return v.defined() ? static_cast<double>(v.item()) : 0.0; }

std::size_t batch_size_for(const ExperimentConfig& config, const DatasetBundle& bundle) {
  return std::min<std::size_t>(static_cast<std::size_t>(config.batch_size), bundle.split.train_seen.size());
}

void split_step(const std::vector<Var<float>>& grads, std::size_t offset, nn::AdamState<float>& adam,
                nn::ParamSet<float>& params) {
  nn::GradSet<float> g;
  for (std::size_t i = 0; i < params.size(); ++i) g.push_back(grads[offset + i].value());
  nn::adam_step(adam, params, g);
}

}  // namespace

VadsModel init_model(const ExperimentConfig& resolved_config, const DatasetBundle& bundle, const Rng& root) {
  resolved_config.check();
  require_valid(bundle);
  if (resolved_config.d_v != bundle.d_v() || resolved_config.d_a != bundle.d_a()) {
    throw ValidationError("config dimensions (d_v " + std::to_string(resolved_config.d_v) + ", d_a " +
                          std::to_string(resolved_config.d_a) + ") do not match the bundle (" +
                          std::to_string(bundle.d_v()) + ", " + std::to_string(bundle.d_a()) + ")");
  }
  VadsModel m;
  m.config = resolved_config;
  Rng g_init = root.derive("init.generator");
  Rng d_init = root.derive("init.critic");
  Rng v_init = root.derive("init.vdkl");
  Rng s_init = root.derive("init.vosu");
  m.gan = Gan<float>(gan_dims(resolved_config), g_init, d_init);
  m.vdkl = Vdkl<float>(vdkl_dims(resolved_config), static_cast<float>(resolved_config.alpha),
                       static_cast<float>(resolved_config.tau), resolved_config.prior_form, v_init);
  if (resolved_config.prior_form == PriorForm::random) {
    Rng r = root.derive("prior.random");
    m.vdkl.set_fixed_prior(nn::normal_matrix<float>(r, 1, resolved_config.d_a));
  } else if (resolved_config.prior_form == PriorForm::external) {
    m.vdkl.set_fixed_prior(load_prior_vector(resolved_config.prior_vector_file, resolved_config.d_a));
  }
  m.vosu = Vosu<float>(vosu_dims(resolved_config), s_init);
  m.vosu.update_prototypes(bundle.prototypes);
  if (resolved_config.lambda_cls > 0) m.classifier = pretrain_seen_classifier(bundle, resolved_config, root.derive("classifier"));
  m.seen_classes = bundle.seen_classes;
  return m;
}

TrainResult train(VadsModel& model, const DatasetBundle& bundle, const Rng& root) {
  const ExperimentConfig& config = model.config;
  config.check();
  require_valid(bundle);
  TrainResult result;
  GanStreams streams = GanStreams::from(root);
  data::BatchStream stream(bundle, batch_size_for(config, bundle), streams.batches);

  const nn::AdamOptions opts{config.lr, config.beta1, config.beta2, 1e-8};
  nn::AdamState<float> g_adam(model.gan.generator_params(), opts);
  nn::AdamState<float> d_adam(model.gan.critic_params(), opts);
  nn::AdamState<float> v_adam(model.vdkl.params(), opts);
  nn::AdamState<float> s_adam(model.vosu.sum_params(), opts);

  StepModels<float> models;
  models.gan = &model.gan;
  models.vdkl = config.use_vdkl ? &model.vdkl : nullptr;
  models.vosu = config.use_vosu ? &model.vosu : nullptr;
  models.classifier = (config.lambda_cls > 0 && model.classifier.defined()) ? &model.classifier : nullptr;

  StepBatch<float> sb;
  sb.table = bundle.prototypes;
  long step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (auto& batch : stream.next_epoch()) {
      sb.features = std::move(batch.features);
      sb.labels = std::move(batch.labels);
      sb.cls_targets = seen_targets(sb.labels, model.seen_classes);

      TrainLogRow row;
      for (int k = 0; k < config.critic_steps; ++k) {
        const CriticLoss<float> cl = critic_step_loss(models, sb, config, streams.encode, streams.noise, streams.gp);
        nn::adam_step(d_adam, model.gan.critic_params(), nn::gradients(cl.total, model.gan.critic_params()));
        row.l_d = cl.total.item();
      }

      const GeneratorLoss<float> gl = generator_loss(models, sb, config, streams.encode, streams.noise);
      if (models.vdkl != nullptr && config.effective_lambda_con() > 0 && !gl.con.defined()) ++result.skipped_contrastive;
      std::vector<Var<float>> wrt = model.gan.generator_params().vars();
      const std::size_t v_offset = wrt.size();
      if (models.vdkl != nullptr) wrt.insert(wrt.end(), model.vdkl.params().vars().begin(), model.vdkl.params().vars().end());
      const std::size_t s_offset = wrt.size();
      if (models.vosu != nullptr) {
        wrt.insert(wrt.end(), model.vosu.sum_params().vars().begin(), model.vosu.sum_params().vars().end());
      }
      const auto grads = nn::grad(gl.total, wrt);
      split_step(grads, 0, g_adam, model.gan.generator_params());
      if (models.vdkl != nullptr) split_step(grads, v_offset, v_adam, model.vdkl.params());
      if (models.vosu != nullptr) {
        split_step(grads, s_offset, s_adam, model.vosu.sum_params());
        model.vosu.update_prototypes(bundle.prototypes);
      }

      row.step = ++step;
      row.l_g_adv = gl.adversarial.item();
      row.l_cls = item_or_zero(gl.cls);
      row.l_con = item_or_zero(gl.con);
      row.l_kl = item_or_zero(gl.kl);
      row.l_sc = item_or_zero(gl.sc);
      row.l_total = gl.total.item();
      result.log.push_back(row);
    }
  }
  model.gan.mark_trained();
  return result;
}

ClswganBaseline::ClswganBaseline(const ExperimentConfig& resolved_config, const DatasetBundle& bundle,
                                 const Rng& root)
    : config_(resolved_config), root_(root) {
  config_.check();
  require_valid(bundle);
  Rng g_init = root.derive("init.generator");
  Rng d_init = root.derive("init.critic");
  gan_ = Gan<float>(gan_dims(config_), g_init, d_init);
  if (config_.lambda_cls > 0) classifier_ = pretrain_seen_classifier(bundle, config_, root.derive("classifier"));
  seen_classes_ = bundle.seen_classes;
}

TrainResult ClswganBaseline::train(const DatasetBundle& bundle) {
  TrainResult result;
  Rng noise_rng = root_.derive("gan.noise");
  Rng gp_rng = root_.derive("gan.gp");
  data::BatchStream stream(bundle, batch_size_for(config_, bundle), root_.derive("gan.batches"));
  const nn::AdamOptions opts{config_.lr, config_.beta1, config_.beta2, 1e-8};
  nn::AdamState<float> g_adam(gan_.generator_params(), opts);
  nn::AdamState<float> d_adam(gan_.critic_params(), opts);
  const float lambda_gp = static_cast<float>(config_.lambda_gp);
  const float lambda_cls = static_cast<float>(config_.lambda_cls);
  const Index d_a = bundle.prototypes.cols();
  long step = 0;
  for (int epoch = 0; epoch < config_.epochs; ++epoch) {
    for (const auto& batch : stream.next_epoch()) {
      const Index n = batch.features.rows();
      TrainLogRow row;
      for (int k = 0; k < config_.critic_steps; ++k) {
        const MatrixF noise = nn::normal_matrix<float>(noise_rng, n, d_a);
        const MatrixF fake = gan_.generate(noise, batch.prototypes);
        const CriticLoss<float> cl = critic_loss(gan_, batch.features, fake, batch.prototypes, lambda_gp, gp_rng);
        nn::adam_step(d_adam, gan_.critic_params(), nn::gradients(cl.total, gan_.critic_params()));
        row.l_d = cl.total.item();
      }
      const Var<float> cond = nn::constant(batch.prototypes);
      const Var<float> fake = gan_.generate(nn::constant(nn::normal_matrix<float>(noise_rng, n, d_a)), cond);
      const Var<float> adv = nn::neg(nn::mean(gan_.critic(fake, cond)));
      Var<float> total = adv;
      if (lambda_cls > 0) {
        const auto targets = seen_targets(batch.labels, seen_classes_);
        const Var<float> cls = nn::cross_entropy(classifier_.logits(fake), std::span<const Index>(targets));
        total = nn::add(total, nn::scale(cls, lambda_cls));
        row.l_cls = cls.item();
      }
      nn::adam_step(g_adam, gan_.generator_params(), nn::gradients(total, gan_.generator_params()));
      row.step = ++step;
      row.l_g_adv = adv.item();
      row.l_total = total.item();
      result.log.push_back(row);
    }
  }
  gan_.mark_trained();
  return result;
}

#define VADS_INSTANTIATE_CWGAN(T)                                                                                \
  template class Gan<T>;                                                                                         \
  template struct FrozenClassifier<T>;                                                                           \
  template Matrix<T> interpolate<T>(const Matrix<T>&, const Matrix<T>&, const Matrix<T>&);                       \
  template Var<T> gradient_penalty<T>(const Gan<T>&, const Matrix<T>&, const Var<T>&);                           \
  template CriticLoss<T> critic_loss<T>(const Gan<T>&, const Matrix<T>&, const Matrix<T>&, const Matrix<T>&, T, \
                                        Rng&);                                                                   \
  template CriticLoss<T> critic_loss_with<T>(const Gan<T>&, const Matrix<T>&, const Matrix<T>&,                 \
                                             const Matrix<T>&, T, const Matrix<T>&);                             \
  template GeneratorLoss<T> generator_loss<T>(const StepModels<T>&, const StepBatch<T>&,                        \
                                              const ExperimentConfig&, Rng&, Rng&);                              \
  template CriticLoss<T> critic_step_loss<T>(const StepModels<T>&, const StepBatch<T>&, const ExperimentConfig&, \
                                             Rng&, Rng&, Rng&);

VADS_INSTANTIATE_CWGAN(float)
VADS_INSTANTIATE_CWGAN(double)

template Gan<double> Gan<float>::cast<double>() const;

}  // namespace vads::model
