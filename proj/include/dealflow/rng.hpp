#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace dealflow {

// One splitmix64 step; used to derive well-separated seeds from (seed, stream).
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic random stream addressed by (seed, stream_index).
//
// Every consumer that must be reproducible across runs and thread counts draws
// from one of these. The variate transforms are spelled out here instead of
// using std::*_distribution because distribution output sequences are
// implementation-defined; mt19937_64 itself is fully specified.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_index) {
    std::uint64_t s = seed;
    std::uint64_t a = splitmix64_next(s);
    s ^= 0x6a09e667f3bcc908ULL + stream_index * 0x9e3779b97f4a7c15ULL;
    std::uint64_t b = splitmix64_next(s);
    gen_.seed(a ^ (b << 1));
  }

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on (0, 1]; never returns 0, so log() below is safe.
  double uniform01() {
    return (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;
  }

  // Exponential with the given rate (mean 1/rate).
  double exponential(double rate) { return -std::log(uniform01()) / rate; }

  // Standard normal via Box-Muller (cosine branch only; no hidden cache state,
  // so the draw count per call is fixed).
  double normal01() {
    double u1 = uniform01();
    double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  // exp(N(mu, sigma^2)); sigma == 0 degenerates to the point mass exp(mu).
  double lognormal(double mu, double sigma) {
    if (sigma == 0.0) return std::exp(mu);
    return std::exp(mu + sigma * normal01());
  }

  // Integer in [0, n); rejection-sampled to avoid modulo bias.
  std::uint64_t uniform_below(std::uint64_t n) {
    if (n == 0) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return x % n;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace dealflow
