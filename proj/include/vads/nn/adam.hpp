#pragma once

#include <cmath>

#include "vads/nn/params.hpp"

namespace vads::nn {

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam moments for one ParamSet.
template <typename T>
struct AdamState {
  AdamOptions options;
  long step = 0;
  std::vector<Matrix<T>> m;
  std::vector<Matrix<T>> v;

  AdamState() = default;
  AdamState(const ParamSet<T>& params, AdamOptions opts) : options(opts) {
    for (const auto& var : params.vars()) {
      m.push_back(Matrix<T>::Zero(var.rows(), var.cols()));
      v.push_back(Matrix<T>::Zero(var.rows(), var.cols()));
    }
  }
};

/// theta <- theta - lr * m_hat / (sqrt(v_hat) + eps).
template <typename T>
void adam_step(AdamState<T>& state, ParamSet<T>& params, const GradSet<T>& grads) {
  if (grads.size() != params.size() || state.m.size() != params.size()) {
    throw ValidationError("adam_step: gradient/moment count does not match parameters");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    const auto& p = params.value(i);
    if (grads[i].rows() != p.rows() || grads[i].cols() != p.cols() || state.m[i].rows() != p.rows() ||
        state.m[i].cols() != p.cols()) {
      throw ValidationError("adam_step: shape mismatch for '" + params.name(i) + "'");
    }
  }
  state.step += 1;
  const auto& o = state.options;
  const T b1 = static_cast<T>(o.beta1);
  const T b2 = static_cast<T>(o.beta2);
  const T c1 = static_cast<T>(1.0 - std::pow(o.beta1, static_cast<double>(state.step)));
  const T c2 = static_cast<T>(1.0 - std::pow(o.beta2, static_cast<double>(state.step)));
  const T lr = static_cast<T>(o.lr);
  const T eps = static_cast<T>(o.eps);
  for (std::size_t i = 0; i < grads.size(); ++i) {
    auto& m = state.m[i];
    auto& v = state.v[i];
    const auto& g = grads[i];
    m = b1 * m + (T(1) - b1) * g;
    v = b2 * v + (T(1) - b2) * g.cwiseProduct(g);
    if (lr == T(0)) continue;
    auto& p = params.mutable_value(i);
    p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  }
}

}  // namespace vads::nn
