#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace hka {

/// Counter-mixed xoshiro256++ generator with exact (non-approximate) samplers
/// for every distribution the process simulators need.
///
/// All samplers consume the stream in a fixed order, so a given (seed, call
/// sequence) reproduces bit-identical draws on every platform and worker
/// count.  Parallel code derives one independent stream per work chunk with
/// derive_seed() instead of sharing a generator.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    // splitmix64 expansion; never yields the all-zero state.
    std::uint64_t z = seed;
    for (auto& word : state_) {
      z += 0x9e3779b97f4a7c15ull;
      std::uint64_t x = z;
      x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
      x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
      word = x ^ (x >> 31);
    }
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform draw in the open interval (0,1); never returns an endpoint.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; the second draw of each pair is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  double exponential() { return -std::log(uniform()); }

  /// Gamma(shape, 1) by Marsaglia-Tsang squeeze; shape < 1 lifted via
  /// Gamma(shape) = Gamma(shape + 1) * U^(1/shape).  shape == 0 returns 0.
  double gamma(double shape) {
    if (shape == 0.0) return 0.0;
    if (shape < 1.0) {
      const double u = uniform();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / (3.0 * std::sqrt(d));
    for (;;) {
      double x;
      double v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  /// Poisson(mean) by inversion, split additively so each inversion runs at a
  /// small mean; exact for all means.
  std::uint64_t poisson(double mean) {
    std::uint64_t total = 0;
    while (mean > 30.0) {
      total += poisson_small(30.0);
      mean -= 30.0;
    }
    return total + poisson_small(mean);
  }

  /// Noncentral chi-squared with df > 0 degrees of freedom and noncentrality
  /// lambda >= 0, sampled exactly: for df >= 1 as (Z + sqrt(lambda))^2 plus an
  /// independent central part, otherwise through a Poisson mixture of centrals.
  double noncentral_chi_squared(double df, double lambda) {
    if (df >= 1.0) {
      const double z = normal() + std::sqrt(lambda);
      const double central = df > 1.0 ? 2.0 * gamma(0.5 * (df - 1.0)) : 0.0;
      return z * z + central;
    }
    const std::uint64_t j = poisson(0.5 * lambda);
    return 2.0 * gamma(0.5 * df + static_cast<double>(j));
  }

  /// Inverse Gaussian(mean mu, shape lambda) by the two-root transform method.
  double inverse_gaussian(double mu, double lambda) {
    const double nu = normal();
    const double y = nu * nu;
    const double x = mu + 0.5 * mu * mu * y / lambda -
                     0.5 * (mu / lambda) * std::sqrt(4.0 * mu * lambda * y + mu * mu * y * y);
    const double u = uniform();
    if (u <= mu / (mu + x)) return x;
    return mu * mu / x;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t poisson_small(double mean) {
    if (mean <= 0.0) return 0;
    const double limit = std::exp(-mean);
    std::uint64_t k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform();
    } while (p > limit);
    return k - 1;
  }

  std::array<std::uint64_t, 4> state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Independent stream for (seed, stream); used to give every Monte Carlo work
/// chunk and every simulated path its own generator.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t x = seed + (stream + 1) * 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace hka
