#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace vads {

/// Seeded random stream.
///
/// Every stochastic operation in the toolkit draws from an Rng. Sub-streams
/// obtained with derive() depend only on the parent seed and the name, never
/// on how many values the parent has produced, so adding draws to one
/// component does not perturb another.
///
/// Normal and uniform variates are computed here rather than through the
/// <random> distributions, whose output is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  Rng derive(std::string_view name) const;

  std::uint64_t next_u64();
  /// Uniform on [0, 1).
  double uniform();
  /// Standard normal (Box-Muller, one variate per call).
  double normal();
  /// Uniform integer in [0, n). n must be positive.
  std::size_t uniform_index(std::size_t n);

  std::uint64_t seed() const { return seed_; }

  /// Text serialization of the engine state (for checkpoints).
  std::string state() const;
  void set_state(const std::string& state);

  friend bool operator==(const Rng& a, const Rng& b) { return a.engine_ == b.engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

/// In-place Fisher-Yates shuffle: for i = n..2, swap v[i-1] with
/// v[uniform_index(i)].
void shuffle(std::vector<std::size_t>& v, Rng& rng);

}  // namespace vads
