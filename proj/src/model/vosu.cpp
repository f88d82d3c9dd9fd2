#include "vads/model/vosu.hpp"

#include <string>

#include "vads/core/errors.hpp"
#include "vads/data/batches.hpp"
#include "vads/nn/adam.hpp"

namespace vads::model {

using nn::Activation;
using nn::MlpSpec;

template <typename T>
Vosu<T>::Vosu(const VosuDims& dims, Rng& init_rng, SumInit sum_init) : dims_(dims) {
  vsp_spec_ = MlpSpec::make({dims.d_v, dims.hidden, dims.d_a}, Activation::leaky_relu, Activation::identity);
  sum_spec_ = MlpSpec::make({dims.d_a, dims.d_a}, Activation::identity, Activation::identity);
  nn::init_mlp(vsp_spec_, vsp_, "vsp", init_rng);
  if (sum_init == SumInit::identity) {
    sum_.add(nn::weight_name("sum", 0), Matrix<T>::Identity(dims.d_a, dims.d_a));
    sum_.add(nn::bias_name("sum", 0), Matrix<T>::Zero(1, dims.d_a));
  } else {
    nn::init_mlp(sum_spec_, sum_, "sum", init_rng, 0.3);
  }
}

template <typename T>
Var<T> Vosu<T>::predict_semantic(const Var<T>& x) const {
  return nn::forward(vsp_spec_, vsp_, "vsp", x);
}

template <typename T>
Matrix<T> Vosu<T>::predict_semantic(const Matrix<T>& x) const {
  return nn::forward_value(vsp_spec_, vsp_, "vsp", x);
}

template <typename T>
Var<T> Vosu<T>::apply_sum(const Var<T>& table) const {
  return nn::forward(sum_spec_, sum_, "sum", table);
}

template <typename T>
Matrix<T> Vosu<T>::update_prototypes(const Matrix<T>& table) {
  if (table.cols() != dims_.d_a) {
    throw ValidationError("update_prototypes: table width " + std::to_string(table.cols()) + " != d_a " +
                          std::to_string(dims_.d_a));
  }
  cached_updated_ = nn::forward_value(sum_spec_, sum_, "sum", table);
  cached_source_ = table;
  cached_sum_values_.clear();
  for (std::size_t i = 0; i < sum_.size(); ++i) cached_sum_values_.push_back(sum_.value(i));
  return cached_updated_;
}

template <typename T>
bool Vosu<T>::cache_fresh() const {
  if (cached_source_.size() == 0 || cached_sum_values_.size() != sum_.size()) return false;
  for (std::size_t i = 0; i < sum_.size(); ++i) {
    if (cached_sum_values_[i] != sum_.value(i)) return false;
  }
  return true;
}

template <typename T>
Var<T> Vosu<T>::stage1_loss(const Var<T>& x, std::span<const int> labels, const Matrix<T>& table) const {
  if (static_cast<Index>(labels.size()) != x.rows()) throw ValidationError("stage1_loss: one label per row required");
  std::vector<Index> targets(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= table.rows()) {
      throw ValidationError("stage1_loss: label " + std::to_string(labels[i]) + " outside [0, " +
                            std::to_string(table.rows()) + ")");
    }
    targets[i] = labels[i];
  }
  const Var<T> updated = apply_sum(nn::constant(table));
  const Var<T> logits = nn::matmul(predict_semantic(x), nn::transpose(updated));
  return nn::cross_entropy(logits, std::span<const Index>(targets));
}

template <typename T>
Var<T> Vosu<T>::stage2_consistency() const {
  if (!cache_fresh()) throw ValidationError("stage2_consistency: prototype cache is stale; call update_prototypes");
  return consistency_loss(*this, apply_sum(nn::constant(cached_source_)));
}

template <typename T>
template <typename U>
Vosu<U> Vosu<T>::cast() const {
  Vosu<U> out;
  out.dims_ = dims_;
  out.vsp_spec_ = vsp_spec_;
  out.sum_spec_ = sum_spec_;
  out.vsp_ = vsp_.template cast<U>();
  out.sum_ = sum_.template cast<U>();
  return out;
}

template <typename T>
Var<T> consistency_loss(const Vosu<T>& state, const Var<T>& updated) {
  const Var<T> diff = nn::sub(state.apply_sum(updated), updated);
  return nn::scale(nn::sum(nn::abs(diff)), T(1) / static_cast<T>(updated.rows()));
}

Stage1Result run_stage1(Vosu<float>& state, const DatasetBundle& bundle, const ExperimentConfig& config, Rng rng) {
  require_valid(bundle);
  Stage1Result result;
  if (config.stage1_epochs <= 0) return result;
  const std::size_t bs = std::min<std::size_t>(static_cast<std::size_t>(config.batch_size), bundle.split.train_seen.size());
  data::BatchStream stream(bundle, bs, std::move(rng));
  const nn::AdamOptions opts{config.lr, config.beta1, config.beta2, 1e-8};
  nn::AdamState<float> vsp_adam(state.vsp_params(), opts);
  nn::AdamState<float> sum_adam(state.sum_params(), opts);
  for (int epoch = 0; epoch < config.stage1_epochs; ++epoch) {
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& batch : stream.next_epoch()) {
      const Var<float> loss = state.stage1_loss(nn::constant(batch.features), batch.labels, bundle.prototypes);
      std::vector<Var<float>> wrt = state.vsp_params().vars();
      const auto& sum_vars = state.sum_params().vars();
      wrt.insert(wrt.end(), sum_vars.begin(), sum_vars.end());
      const auto grads = nn::grad(loss, wrt);
      nn::GradSet<float> g_vsp;
      nn::GradSet<float> g_sum;
      for (std::size_t i = 0; i < grads.size(); ++i) {
        (i < state.vsp_params().size() ? g_vsp : g_sum).push_back(grads[i].value());
      }
      nn::adam_step(vsp_adam, state.vsp_params(), g_vsp);
      nn::adam_step(sum_adam, state.sum_params(), g_sum);
      total += loss.item();
      ++count;
      ++result.steps;
    }
    result.loss_curve.push_back(count > 0 ? total / static_cast<double>(count) : 0.0);
  }
  state.update_prototypes(bundle.prototypes);
  return result;
}

VosuDims vosu_dims(const ExperimentConfig& c) {
  return {c.d_v, c.d_a, c.hidden_vsp};
}

MatrixF cosine_matrix(const MatrixF& table) {
  Eigen::MatrixXd unit = table.cast<double>();
  for (Index r = 0; r < unit.rows(); ++r) {
    const double n = unit.row(r).norm();
    if (n > 0.0) unit.row(r) /= n;
  }
  return (unit * unit.transpose()).cast<float>();
}

double mean_offdiagonal_cosine(const MatrixF& table) {
  const Index n = table.rows();
  if (n < 2) throw ValidationError("mean_offdiagonal_cosine: need at least two rows");
  const MatrixF c = cosine_matrix(table);
  double total = 0.0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (i != j) total += c(i, j);
    }
  }
  return total / static_cast<double>(n * (n - 1));
}

template class Vosu<float>;
template class Vosu<double>;
template Vosu<double> Vosu<float>::cast<double>() const;
template Var<float> consistency_loss<float>(const Vosu<float>&, const Var<float>&);
template Var<double> consistency_loss<double>(const Vosu<double>&, const Var<double>&);

}  // namespace vads::model
