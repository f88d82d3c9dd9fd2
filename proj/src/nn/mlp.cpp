#include "vads/nn/mlp.hpp"

namespace vads::nn {

Activation activation_from_string(const std::string& s) {
  if (s == "leaky_relu") return Activation::leaky_relu;
  if (s == "relu") return Activation::relu;
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "identity") return Activation::identity;
  throw ValidationError("unknown activation '" + s + "'");
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::leaky_relu: return "leaky_relu";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::identity: return "identity";
  }
  return "identity";
}

void MlpSpec::check() const {
  if (widths.size() < 2) throw ValidationError("MlpSpec needs at least one layer");
  for (auto w : widths) {
    if (w <= 0) throw ValidationError("MlpSpec widths must be positive");
  }
  if (activations.size() != layers()) throw ValidationError("MlpSpec needs one activation per layer");
}

MlpSpec MlpSpec::make(std::vector<Index> widths, Activation hidden, Activation output) {
  MlpSpec s;
  s.widths = std::move(widths);
  const std::size_t n = s.widths.size() < 2 ? 0 : s.widths.size() - 1;
  s.activations.assign(n, hidden);
  if (n > 0) s.activations.back() = output;
  s.check();
  return s;
}

}  // namespace vads::nn
