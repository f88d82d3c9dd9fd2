#pragma once

#include <vector>

#include "vads/core/rng.hpp"
#include "vads/nn/adam.hpp"
#include "vads/nn/mlp.hpp"

namespace vads::nn {

struct SoftmaxTrainOptions {
  int epochs = 25;
  double lr = 1e-3;
  double beta1 = 0.5;
  double beta2 = 0.999;
  std::size_t batch_size = 64;
};

/// Single affine layer followed by softmax, parameters "cls.w0"/"cls.b0".
template <typename T>
struct LinearSoftmax {
  MlpSpec spec;
  ParamSet<T> params;

  LinearSoftmax() = default;
  LinearSoftmax(Index in, Index classes)
      : spec(MlpSpec::make({in, classes}, Activation::identity, Activation::identity)) {}

  Var<T> logits(const Var<T>& x) const { return forward(spec, params, "cls", x); }

  Matrix<T> logits_value(const Matrix<T>& x) const { return forward_value(spec, params, "cls", x); }

  /// Row-wise argmax (first maximum on ties).
  std::vector<Index> predict(const Matrix<T>& x) const {
    const Matrix<T> z = logits_value(x);
    std::vector<Index> out(static_cast<std::size_t>(z.rows()));
    for (Index r = 0; r < z.rows(); ++r) z.row(r).maxCoeff(&out[static_cast<std::size_t>(r)]);
    return out;
  }
};

/// Adam-trained multinomial logistic regression on (x, targets); targets
/// are column indices in [0, classes). Minibatches of a fresh shuffle per
/// epoch; the trailing short batch is kept.
template <typename T>
LinearSoftmax<T> train_linear_softmax(const Matrix<T>& x, const std::vector<Index>& targets, Index classes,
                                      const SoftmaxTrainOptions& opts, Rng& rng) {
  if (x.rows() == 0) throw ValidationError("train_linear_softmax: no training rows");
  if (static_cast<Index>(targets.size()) != x.rows()) {
    throw ValidationError("train_linear_softmax: target count differs from rows");
  }
  LinearSoftmax<T> model(x.cols(), classes);
  init_mlp(model.spec, model.params, "cls", rng, 0.02);
  AdamState<T> adam(model.params, {opts.lr, opts.beta1, opts.beta2, 1e-8});

  std::vector<std::size_t> order(static_cast<std::size_t>(x.rows()));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const std::size_t bs = std::max<std::size_t>(1, opts.batch_size);
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    shuffle(order, rng);
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t end = std::min(order.size(), start + bs);
      Matrix<T> xb(static_cast<Index>(end - start), x.cols());
      std::vector<Index> yb(end - start);
      for (std::size_t i = start; i < end; ++i) {
        xb.row(static_cast<Index>(i - start)) = x.row(static_cast<Index>(order[i]));
        yb[i - start] = targets[order[i]];
      }
      Var<T> loss = cross_entropy(model.logits(constant(std::move(xb))), std::span<const Index>(yb));
      adam_step(adam, model.params, gradients(loss, model.params));
    }
  }
  return model;
}

}  // namespace vads::nn
