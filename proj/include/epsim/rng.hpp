#pragma once

#include <cstdint>
#include <string_view>

namespace epsim::rng {

/// Deterministic counter-style generator (splitmix64 core).
///
/// Contract: identical (seed, call sequence) produces identical output on
/// every platform. Integer state transitions are exact; the Poisson sampler
/// below consumes only uniforms, products and one std::exp per 256 units of
/// mean, so draws are reproducible bit-for-bit on a given binary and stable
/// to the last ulp across standard libm implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();

  /// Standard normal via Marsaglia polar rejection.
  double normal();

  /// Poisson deviate with the given mean (mean <= 0 yields 0).
  /// Inversion by product of uniforms, split into chunks of mean 256
  /// so the running product never underflows.
  std::uint64_t poisson(double mean);

  /// Derive an independent stream from (seed, stream index); documented
  /// mixing so adding streams never perturbs existing ones.
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream);

  /// FNV-1a 64-bit hash, used to key streams by channel label.
  static std::uint64_t hash_label(std::string_view label);

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace epsim::rng
