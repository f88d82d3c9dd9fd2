#include "vads/model/vdkl.hpp"

#include <string>

#include "vads/core/errors.hpp"

namespace vads::model {

using nn::Activation;
using nn::MlpSpec;

namespace {

// Large negative logit that removes a column from a row-wise logsumexp.
template <typename T>
constexpr T kMasked = T(-1e9);

}  // namespace

template <typename T>
Vdkl<T>::Vdkl(const VdklDims& dims, T alpha, T tau, PriorForm form, Rng& init_rng)
    : dims_(dims), alpha_(alpha), tau_(tau), form_(form) {
  if (alpha < T(0) || alpha > T(1)) throw ValidationError("Vdkl: alpha must lie in [0,1]");
  if (!(tau > T(0))) throw ValidationError("Vdkl: tau must be > 0");
  trunk_ = MlpSpec::make({dims.d_v, dims.hidden}, Activation::leaky_relu, Activation::leaky_relu);
  mu_head_ = MlpSpec::make({dims.hidden, dims.d_z}, Activation::identity, Activation::identity);
  log_var_head_ = MlpSpec::make({dims.hidden, dims.d_z}, Activation::identity, Activation::identity);
  dkl_ = MlpSpec::make({dims.d_z, dims.d_a, dims.d_a}, Activation::leaky_relu, Activation::identity);
  nn::init_mlp(trunk_, params_, "ve.trunk", init_rng);
  if (dims.d_l > 0) {
    latent_head_ = MlpSpec::make({dims.hidden, dims.d_l}, Activation::identity, Activation::identity);
    nn::init_mlp(latent_head_, params_, "ve.latent", init_rng);
  }
  nn::init_mlp(mu_head_, params_, "ve.mu", init_rng);
  nn::init_mlp(log_var_head_, params_, "ve.logvar", init_rng);
  nn::init_mlp(dkl_, params_, "dkl", init_rng);
  params_.add("prior", nn::normal_matrix<T>(init_rng, 1, dims.d_a, 0.02));
}

template <typename T>
void Vdkl<T>::set_fixed_prior(Matrix<T> row) {
  if (row.rows() != 1 || row.cols() != dims_.d_a) {
    throw ValidationError("fixed prior must be a 1 x " + std::to_string(dims_.d_a) + " row");
  }
  fixed_prior_ = std::move(row);
}

template <typename T>
Var<T> Vdkl<T>::trunk(const Var<T>& x) const {
  return nn::forward(trunk_, params_, "ve.trunk", x);
}

template <typename T>
EncodedBatch<T> Vdkl<T>::encode(const Var<T>& x, Rng& rng) const {
  return encode_with_noise(x, nn::normal_matrix<T>(rng, x.rows(), dims_.d_z));
}

template <typename T>
EncodedBatch<T> Vdkl<T>::encode_with_noise(const Var<T>& x, const Matrix<T>& eps) const {
  if (eps.rows() != x.rows() || eps.cols() != dims_.d_z) throw ValidationError("encode: eps shape mismatch");
  EncodedBatch<T> out;
  const Var<T> h = trunk(x);
  if (dims_.d_l > 0) {
    out.latent = nn::forward(latent_head_, params_, "ve.latent", h);
  } else {
    out.latent = nn::constant<T>(Matrix<T>::Zero(x.rows(), 0));
  }
  out.mu = nn::forward(mu_head_, params_, "ve.mu", h);
  out.log_var = nn::clamp(nn::forward(log_var_head_, params_, "ve.logvar", h), kLogVarMin, kLogVarMax);
  const Var<T> sigma = nn::exp(nn::scale(out.log_var, T(0.5)));
  out.z = nn::add(out.mu, nn::mul(sigma, nn::constant(eps)));
  return out;
}

template <typename T>
Var<T> Vdkl<T>::latent(const Var<T>& x) const {
  if (dims_.d_l == 0) {
    if (x.cols() != dims_.d_v) throw ValidationError("latent: input width mismatch");
    return nn::constant<T>(Matrix<T>::Zero(x.rows(), 0));
  }
  return nn::forward(latent_head_, params_, "ve.latent", trunk(x));
}

template <typename T>
Matrix<T> Vdkl<T>::latent_features(const Matrix<T>& x) const {
  nn::NoGradGuard no_grad;
  return latent(nn::constant(x)).value();
}

template <typename T>
Var<T> Vdkl<T>::local_bias(const Var<T>& codes) const {
  return nn::forward(dkl_, params_, "dkl", codes);
}

template <typename T>
Var<T> Vdkl<T>::prior_noise(const Var<T>& codes, Rng& noise_rng) const {
  return prior_noise_with(codes, nn::normal_matrix<T>(noise_rng, codes.rows(), dims_.d_a));
}

template <typename T>
Var<T> Vdkl<T>::prior_noise_with(const Var<T>& codes, const Matrix<T>& noise) const {
  if (codes.cols() != dims_.d_z) {
    throw ValidationError("prior_noise: code width " + std::to_string(codes.cols()) + " != d_z " +
                          std::to_string(dims_.d_z));
  }
  if (noise.rows() != codes.rows() || noise.cols() != dims_.d_a) {
    throw ValidationError("prior_noise: noise shape mismatch");
  }
  const Var<T> n = nn::constant(noise);
  Var<T> knowledge;
  switch (form_) {
    case PriorForm::none:
      return n;
    case PriorForm::learned:
      knowledge = nn::add_bias(local_bias(codes), params_.at("prior"));
      break;
    case PriorForm::random:
    case PriorForm::external:
      if (fixed_prior_.size() == 0) throw ValidationError("prior_noise: fixed prior vector not set");
      knowledge = nn::constant<T>(fixed_prior_.replicate(codes.rows(), 1));
      break;
  }
  return nn::add(nn::scale(knowledge, alpha_), nn::scale(n, T(1) - alpha_));
}

template <typename T>
Var<T> Vdkl<T>::synth_prior_noise(Index n, Rng& code_rng, Rng& noise_rng) const {
  const Var<T> codes = nn::constant(nn::normal_matrix<T>(code_rng, n, dims_.d_z));
  return prior_noise(codes, noise_rng);
}

template <typename T>
template <typename U>
Vdkl<U> Vdkl<T>::cast() const {
  Vdkl<U> out;
  out.dims_ = dims_;
  out.alpha_ = static_cast<U>(alpha_);
  out.tau_ = static_cast<U>(tau_);
  out.form_ = form_;
  out.trunk_ = trunk_;
  out.latent_head_ = latent_head_;
  out.mu_head_ = mu_head_;
  out.log_var_head_ = log_var_head_;
  out.dkl_ = dkl_;
  out.params_ = params_.template cast<U>();
  out.fixed_prior_ = fixed_prior_.template cast<U>();
  return out;
}

std::vector<Index> pick_positives(std::span<const int> labels, Rng& rng) {
  std::vector<Index> out(labels.size(), -1);
  std::vector<Index> candidates;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    candidates.clear();
    for (std::size_t j = 0; j < labels.size(); ++j) {
      if (j != i && labels[j] == labels[i]) candidates.push_back(static_cast<Index>(j));
    }
    if (!candidates.empty()) out[i] = candidates[rng.uniform_index(candidates.size())];
  }
  return out;
}

template <typename T>
Var<T> contrastive_loss(const Var<T>& latent, std::span<const int> labels, T tau, std::span<const Index> positives) {
  const Index n = latent.rows();
  if (static_cast<Index>(labels.size()) != n || static_cast<Index>(positives.size()) != n) {
    throw ValidationError("contrastive_loss: labels/positives must have one entry per row");
  }
  if (!(tau > T(0))) throw ValidationError("contrastive_loss: tau must be > 0");
  std::vector<Index> anchors;
  std::vector<Index> partner;
  for (Index i = 0; i < n; ++i) {
    const Index p = positives[static_cast<std::size_t>(i)];
    if (p < 0) continue;
    if (p >= n || p == i || labels[static_cast<std::size_t>(p)] != labels[static_cast<std::size_t>(i)]) {
      throw ValidationError("contrastive_loss: positive partner must be a distinct same-label sample");
    }
    anchors.push_back(i);
    partner.push_back(p);
  }
  if (anchors.empty()) {
    throw ValidationError(
        "contrastive_loss: batch holds no positive pair; use class-balanced sampling so every batch repeats labels");
  }

  const Var<T> unit = nn::normalize_rows(latent);
  const Var<T> sim = nn::scale(nn::matmul(unit, nn::transpose(unit)), T(1) / tau);
  const Var<T> rows = nn::gather_rows(sim, anchors);

  Matrix<T> mask(static_cast<Index>(anchors.size()), n);
  for (std::size_t a = 0; a < anchors.size(); ++a) {
    const int y = labels[static_cast<std::size_t>(anchors[a])];
    for (Index k = 0; k < n; ++k) {
      const bool keep = k == partner[a] || labels[static_cast<std::size_t>(k)] != y;
      mask(static_cast<Index>(a), k) = keep ? T(0) : kMasked<T>;
    }
  }
  const Var<T> denom = nn::logsumexp_rows(nn::add(rows, nn::constant(std::move(mask))));
  const Var<T> numer = nn::pick_cols(rows, std::span<const Index>(partner));
  return nn::mean(nn::sub(denom, numer));
}

template <typename T>
Var<T> kl_loss(const Var<T>& mu, const Var<T>& log_var) {
  if (mu.rows() != log_var.rows() || mu.cols() != log_var.cols()) {
    throw ValidationError("kl_loss: mu and log_var shapes differ");
  }
  if (!mu.value().allFinite() || !log_var.value().allFinite()) {
    throw ValidationError("kl_loss: non-finite input");
  }
  const Var<T> terms = nn::add_scalar(nn::sub(nn::add(nn::square(mu), nn::exp(log_var)), log_var), T(-1));
  return nn::scale(nn::sum(terms), T(0.5) / static_cast<T>(mu.rows()));
}

template <typename T>
VdklLosses<T> vdkl_losses(const Vdkl<T>& state, const Var<T>& x, std::span<const int> labels, Rng& rng,
                          bool with_contrastive) {
  VdklLosses<T> out;
  out.encoded = state.encode(x, rng);
  out.kl = kl_loss(out.encoded.mu, out.encoded.log_var);
  if (with_contrastive) {
    const auto positives = pick_positives(labels, rng);
    out.con = contrastive_loss(out.encoded.latent, labels, state.tau(), std::span<const Index>(positives));
  }
  return out;
}

VdklDims vdkl_dims(const ExperimentConfig& c) {
  return {c.d_v, c.d_a, c.d_l, c.d_z, c.hidden_ve};
}

#define VADS_INSTANTIATE_VDKL(T)                                                                                  \
  template class Vdkl<T>;                                                                                         \
  template Var<T> contrastive_loss<T>(const Var<T>&, std::span<const int>, T, std::span<const Index>);           \
  template Var<T> kl_loss<T>(const Var<T>&, const Var<T>&);                                                       \
  template VdklLosses<T> vdkl_losses<T>(const Vdkl<T>&, const Var<T>&, std::span<const int>, Rng&, bool);

VADS_INSTANTIATE_VDKL(float)
VADS_INSTANTIATE_VDKL(double)

template Vdkl<double> Vdkl<float>::cast<double>() const;
template Vdkl<float> Vdkl<double>::cast<float>() const;

}  // namespace vads::model
