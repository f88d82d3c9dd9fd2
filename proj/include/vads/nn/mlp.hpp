#pragma once

#include <string>
#include <vector>

#include "vads/nn/autograd.hpp"
#include "vads/nn/params.hpp"

namespace vads::nn {

enum class Activation { leaky_relu, relu, sigmoid, identity };

Activation activation_from_string(const std::string& s);
std::string to_string(Activation a);

/// Fully connected stack. widths = {in, h1, ..., out}; activations has one
/// entry per layer, the last being the output activation. Leaky ReLU uses
/// slope 0.2.
struct MlpSpec {
  std::vector<Index> widths;
  std::vector<Activation> activations;

  std::size_t layers() const { return widths.empty() ? 0 : widths.size() - 1; }
  Index in_width() const { return widths.front(); }
  Index out_width() const { return widths.back(); }
  void check() const;

  /// Hidden layers share `hidden`, last layer uses `output`.
  static MlpSpec make(std::vector<Index> widths, Activation hidden, Activation output);
};

/// Parameter names: <prefix>.w<k> (in x out) and <prefix>.b<k> (1 x out).
inline std::string weight_name(const std::string& prefix, std::size_t k) { return prefix + ".w" + std::to_string(k); }
inline std::string bias_name(const std::string& prefix, std::size_t k) { return prefix + ".b" + std::to_string(k); }

/// Adds the layer parameters: weights ~ N(0, stddev^2), biases 0.
template <typename T>
void init_mlp(const MlpSpec& spec, ParamSet<T>& params, const std::string& prefix, Rng& rng,
              double stddev = 0.02) {
  spec.check();
  for (std::size_t k = 0; k < spec.layers(); ++k) {
    params.add(weight_name(prefix, k), normal_matrix<T>(rng, spec.widths[k], spec.widths[k + 1], stddev));
    params.add(bias_name(prefix, k), Matrix<T>::Zero(1, spec.widths[k + 1]));
  }
}

template <typename T>
Var<T> activate(const Var<T>& x, Activation a) {
  switch (a) {
    case Activation::leaky_relu: return leaky_relu(x, T(0.2));
    case Activation::relu: return relu(x);
    case Activation::sigmoid: return sigmoid(x);
    case Activation::identity: return x;
  }
  return x;
}

template <typename T>
Var<T> forward(const MlpSpec& spec, const ParamSet<T>& params, const std::string& prefix, const Var<T>& input) {
  if (input.cols() != spec.in_width()) {
    throw ValidationError("forward(" + prefix + "): input width " + std::to_string(input.cols()) +
                          " != expected " + std::to_string(spec.in_width()));
  }
  Var<T> h = input;
  for (std::size_t k = 0; k < spec.layers(); ++k) {
    h = add_bias(matmul(h, params.at(weight_name(prefix, k))), params.at(bias_name(prefix, k)));
    h = activate(h, spec.activations[k]);
  }
  return h;
}

template <typename T>
Matrix<T> forward_value(const MlpSpec& spec, const ParamSet<T>& params, const std::string& prefix,
                        const Matrix<T>& input) {
  NoGradGuard no_grad;
  return forward(spec, params, prefix, constant(input)).value();
}

}  // namespace vads::nn
