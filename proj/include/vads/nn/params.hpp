#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vads/core/errors.hpp"
#include "vads/core/rng.hpp"
#include "vads/nn/autograd.hpp"

namespace vads::nn {

/// Named trainable arrays. Copies are deep: a copied ParamSet owns fresh
/// leaf nodes, so training one copy never touches the other.
template <typename T>
class ParamSet {
 public:
  ParamSet() = default;
  ParamSet(const ParamSet& other) { copy_from(other); }
  ParamSet& operator=(const ParamSet& other) {
    if (this != &other) {
      names_.clear();
      vars_.clear();
      copy_from(other);
    }
    return *this;
  }
  ParamSet(ParamSet&&) noexcept = default;
  ParamSet& operator=(ParamSet&&) noexcept = default;

  void add(std::string name, Matrix<T> value) {
    if (contains(name)) throw ValidationError("duplicate parameter name '" + name + "'");
    names_.push_back(std::move(name));
    vars_.push_back(parameter<T>(std::move(value)));
  }

  bool contains(std::string_view name) const { return find(name) != npos; }

  const Var<T>& at(std::string_view name) const {
    const auto i = find(name);
    if (i == npos) throw ValidationError("no parameter named '" + std::string(name) + "'");
    return vars_[i];
  }
  Var<T>& at(std::string_view name) {
    const auto i = find(name);
    if (i == npos) throw ValidationError("no parameter named '" + std::string(name) + "'");
    return vars_[i];
  }

  std::size_t size() const { return vars_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<Var<T>>& vars() const { return vars_; }
  const std::string& name(std::size_t i) const { return names_[i]; }
  const Matrix<T>& value(std::size_t i) const { return vars_[i].value(); }
  Matrix<T>& mutable_value(std::size_t i) { return vars_[i].mutable_value(); }

  std::size_t element_count() const {
    std::size_t n = 0;
    for (const auto& v : vars_) n += static_cast<std::size_t>(v.value().size());
    return n;
  }

  bool all_finite() const {
    for (const auto& v : vars_) {
      if (!v.value().allFinite()) return false;
    }
    return true;
  }

  template <typename U>
  ParamSet<U> cast() const {
    ParamSet<U> out;
    for (std::size_t i = 0; i < vars_.size(); ++i) out.add(names_[i], vars_[i].value().template cast<U>());
    return out;
  }

  friend bool operator==(const ParamSet& a, const ParamSet& b) {
    if (a.names_ != b.names_) return false;
    for (std::size_t i = 0; i < a.vars_.size(); ++i) {
      const auto& x = a.vars_[i].value();
      const auto& y = b.vars_[i].value();
      if (x.rows() != y.rows() || x.cols() != y.cols() || x != y) return false;
    }
    return true;
  }

 private:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  std::size_t find(std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i) {
      if (names_[i] == name) return i;
    }
    return npos;
  }

  void copy_from(const ParamSet& other) {
    for (std::size_t i = 0; i < other.vars_.size(); ++i) add(other.names_[i], other.vars_[i].value());
  }

  std::vector<std::string> names_;
  std::vector<Var<T>> vars_;
};

/// Gradient arrays aligned with a ParamSet's order.
template <typename T>
using GradSet = std::vector<Matrix<T>>;

/// d loss / d params for every entry of the set.
template <typename T>
GradSet<T> gradients(const Var<T>& loss, const ParamSet<T>& params) {
  auto gs = grad(loss, params.vars(), false);
  GradSet<T> out;
  out.reserve(gs.size());
  for (auto& g : gs) out.push_back(g.value());
  return out;
}

/// Matrix of i.i.d. N(0, stddev^2) draws, row-major fill order. Draws are
/// made in double so float and double runs see the same stream.
template <typename T>
Matrix<T> normal_matrix(Rng& rng, Index rows, Index cols, double stddev = 1.0) {
  Matrix<T> m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(stddev * rng.normal());
  return m;
}

template <typename T>
Matrix<T> uniform_matrix(Rng& rng, Index rows, Index cols) {
  Matrix<T> m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(rng.uniform());
  return m;
}

}  // namespace vads::nn
