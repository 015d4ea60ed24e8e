#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "proxbundle/types.hpp"

namespace proxbundle {

/// Reproducible random stream.
///
/// Bits come from std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Floating-point conversions and the normal sampler are done here
/// rather than through <random> distributions, whose algorithms are
/// implementation-defined.
///
/// Independent substreams are derived by hashing a parent seed with a list of
/// integer coordinates (SplitMix64 finalizer, folded left to right), so a
/// trial's stream depends only on where it sits in the experiment grid.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t draws() const { return draws_; }

  std::uint64_t next_u64() {
    ++draws_;
    return engine_();
  }
  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  /// Standard normal via the Marsaglia polar method.
  double normal();
  Vector normal_vector(Eigen::Index n);

  static std::uint64_t mix(std::uint64_t x);
  static std::uint64_t derive(std::uint64_t parent, std::initializer_list<std::uint64_t> coords);
  Rng substream(std::initializer_list<std::uint64_t> coords) const { return Rng(derive(seed_, coords)); }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::uint64_t draws_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace proxbundle
