#include "epsim/rng.hpp"

#include <cmath>

namespace epsim::rng {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t Rng::next_u64() { return splitmix64(state_); }

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  have_spare_ = true;
  return u * f;
}

std::uint64_t Rng::poisson(double mean) {
  if (!(mean > 0.0)) return 0;
  std::uint64_t total = 0;
  constexpr double kChunk = 256.0;
  while (mean > 0.0) {
    const double mu = mean > kChunk ? kChunk : mean;
    mean -= mu;
    const double limit = std::exp(-mu);
    double prod = 1.0;
    std::uint64_t k = 0;
    do {
      ++k;
      prod *= uniform();
    } while (prod > limit);
    total += k - 1;
  }
  return total;
}

std::uint64_t Rng::mix(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t x = stream;
  std::uint64_t h = splitmix64(x);
  x = seed ^ h;
  return splitmix64(x);
}

std::uint64_t Rng::hash_label(std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace epsim::rng
