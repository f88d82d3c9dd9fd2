#pragma once

#include <span>
#include <vector>

#include "vads/core/config.hpp"
#include "vads/core/dataset.hpp"
#include "vads/core/rng.hpp"
#include "vads/nn/mlp.hpp"

namespace vads::model {

using nn::Index;
using nn::Var;

struct VosuDims {
  Index d_v = 0;
  Index d_a = 0;
  Index hidden = 0;
};

enum class SumInit { identity, random };

/// Visual-semantic prediction network VSP [d_v -> hidden -> d_a] and the
/// semantic updation mapping SUM [d_a -> d_a] (identity activation).
///
/// The updated prototype table SUM(A) is cached by update_prototypes(); the
/// cache is stale as soon as the SUM parameters or the source table change.
template <typename T>
class Vosu {
 public:
  Vosu() = default;
  Vosu(const VosuDims& dims, Rng& init_rng, SumInit sum_init = SumInit::identity);

  const VosuDims& dims() const { return dims_; }

  nn::ParamSet<T>& vsp_params() { return vsp_; }
  const nn::ParamSet<T>& vsp_params() const { return vsp_; }
  nn::ParamSet<T>& sum_params() { return sum_; }
  const nn::ParamSet<T>& sum_params() const { return sum_; }

  /// a_hat = VSP(x).
  Var<T> predict_semantic(const Var<T>& x) const;
  Matrix<T> predict_semantic(const Matrix<T>& x) const;

  /// Row-wise SUM, differentiable.
  Var<T> apply_sum(const Var<T>& table) const;

  /// SUM(A), cached together with A and the SUM parameters it came from.
  Matrix<T> update_prototypes(const Matrix<T>& table);
  bool cache_fresh() const;
  const Matrix<T>& cached_updated() const { return cached_updated_; }
  const Matrix<T>& cached_source() const { return cached_source_; }

  /// Cross-entropy of VSP(x) . SUM(A)^T over every class of A.
  Var<T> stage1_loss(const Var<T>& x, std::span<const int> labels, const Matrix<T>& table) const;

  /// L_sc on the cached source table with gradient through both SUM
  /// applications. Throws when the cache is stale.
  Var<T> stage2_consistency() const;

  template <typename U>
  Vosu<U> cast() const;

 private:
  template <typename U>
  friend class Vosu;

  VosuDims dims_;
  nn::MlpSpec vsp_spec_;
  nn::MlpSpec sum_spec_;
  nn::ParamSet<T> vsp_;
  nn::ParamSet<T> sum_;
  Matrix<T> cached_source_;
  Matrix<T> cached_updated_;
  std::vector<Matrix<T>> cached_sum_values_;
};

/// mean over rows of || SUM(adot) - adot ||_1.
template <typename T>
Var<T> consistency_loss(const Vosu<T>& state, const Var<T>& updated);

struct Stage1Result {
  std::vector<double> loss_curve;  // mean L_ce per epoch
  long steps = 0;
};

/// Adam on VSP and SUM jointly over train_seen batches. `rng` drives the
/// batch order.
Stage1Result run_stage1(Vosu<float>& state, const DatasetBundle& bundle, const ExperimentConfig& config, Rng rng);

VosuDims vosu_dims(const ExperimentConfig& resolved_config);

/// Mean cosine similarity over distinct row pairs.
double mean_offdiagonal_cosine(const MatrixF& table);
MatrixF cosine_matrix(const MatrixF& table);

}  // namespace vads::model
