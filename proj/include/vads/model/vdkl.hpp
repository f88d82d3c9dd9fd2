#pragma once

#include <span>
#include <vector>

#include "vads/core/config.hpp"
#include "vads/core/rng.hpp"
#include "vads/nn/mlp.hpp"

namespace vads::model {

using nn::Index;
using nn::Var;

struct VdklDims {
  Index d_v = 0;
  Index d_a = 0;
  Index d_l = 0;  // 0 disables the latent-feature head
  Index d_z = 0;
  Index hidden = 0;
};

template <typename T>
struct EncodedBatch {
  Var<T> latent;   // l, n x d_l
  Var<T> mu;       // n x d_z
  Var<T> log_var;  // n x d_z, clamped to [-10, 10]
  Var<T> z;        // mu + exp(log_var / 2) * eps
};

/// Visual encoder, domain-knowledge network and global prior.
///
/// VE is a leaky-ReLU trunk [d_v -> hidden] with three affine heads: the
/// latent feature l, and mu / log-variance of the latent code z. DKL maps a
/// code to the local bias b ([d_z -> d_a -> d_a]); `prior` is the global
/// vector p. The prior noise handed to the generator is
///
///   Z' = alpha * (b + p) + (1 - alpha) * n,  n ~ N(0, 1) drawn per call.
///
/// With PriorForm::none, Z' = n. With random / external, b + p is replaced
/// by a fixed row set through set_fixed_prior().
template <typename T>
class Vdkl {
 public:
  static constexpr T kLogVarMin = T(-10);
  static constexpr T kLogVarMax = T(10);

  Vdkl() = default;
  Vdkl(const VdklDims& dims, T alpha, T tau, PriorForm form, Rng& init_rng);

  const VdklDims& dims() const { return dims_; }
  T alpha() const { return alpha_; }
  T tau() const { return tau_; }
  PriorForm prior_form() const { return form_; }

  nn::ParamSet<T>& params() { return params_; }
  const nn::ParamSet<T>& params() const { return params_; }

  void set_fixed_prior(Matrix<T> row);
  const Matrix<T>& fixed_prior() const { return fixed_prior_; }

  /// Reparameterized encoding with eps ~ N(0,1) drawn from rng.
  EncodedBatch<T> encode(const Var<T>& x, Rng& rng) const;
  EncodedBatch<T> encode_with_noise(const Var<T>& x, const Matrix<T>& eps) const;

  /// Deterministic latent feature l (no sampling).
  Var<T> latent(const Var<T>& x) const;
  Matrix<T> latent_features(const Matrix<T>& x) const;

  /// b = DKL(z).
  Var<T> local_bias(const Var<T>& codes) const;

  /// Z' from codes (encoded z in training, N(0,1) draws at synthesis).
  Var<T> prior_noise(const Var<T>& codes, Rng& noise_rng) const;
  Var<T> prior_noise_with(const Var<T>& codes, const Matrix<T>& noise) const;

  /// Synthesis mode: codes ~ N(0,1) of width d_z from code_rng, then Z'.
  Var<T> synth_prior_noise(Index n, Rng& code_rng, Rng& noise_rng) const;

  template <typename U>
  Vdkl<U> cast() const;

 private:
  template <typename U>
  friend class Vdkl;

  Var<T> trunk(const Var<T>& x) const;

  VdklDims dims_;
  T alpha_ = T(0.9);
  T tau_ = T(0.15);
  PriorForm form_ = PriorForm::learned;
  nn::MlpSpec trunk_;
  nn::MlpSpec latent_head_;
  nn::MlpSpec mu_head_;
  nn::MlpSpec log_var_head_;
  nn::MlpSpec dkl_;
  nn::ParamSet<T> params_;
  Matrix<T> fixed_prior_;
};

/// For each anchor, one same-label partner drawn uniformly among the other
/// samples, or -1 when the anchor's label occurs once.
std::vector<Index> pick_positives(std::span<const int> labels, Rng& rng);

/// In-batch InfoNCE on l2-normalized rows, minimization form:
///
///   mean_i -log( e^{s(i,p_i)} / (e^{s(i,p_i)} + sum_{k: y_k != y_i} e^{s(i,k)}) )
///
/// with s(i,j) = <l_i, l_j> / tau. Anchors without a positive are skipped;
/// a batch with none throws.
template <typename T>
Var<T> contrastive_loss(const Var<T>& latent, std::span<const int> labels, T tau, std::span<const Index> positives);

/// Closed-form KL(N(mu, sigma^2) || N(0, 1)), summed over dims, mean over rows.
template <typename T>
Var<T> kl_loss(const Var<T>& mu, const Var<T>& log_var);

template <typename T>
struct VdklLosses {
  Var<T> con;
  Var<T> kl;
  EncodedBatch<T> encoded;
};

/// One encode pass shared by both losses. rng supplies eps, then the
/// positive partners. `with_contrastive` = false skips L_con (left undefined).
template <typename T>
VdklLosses<T> vdkl_losses(const Vdkl<T>& state, const Var<T>& x, std::span<const int> labels, Rng& rng,
                          bool with_contrastive = true);

VdklDims vdkl_dims(const ExperimentConfig& resolved_config);

}  // namespace vads::model
