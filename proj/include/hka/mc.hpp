#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hka/processes.hpp"
#include "hka/rng.hpp"

namespace hka {

/// A Monte Carlo estimate is always a (mean, standard error) pair; callers
/// that need a bare number must decide explicitly what to do with the error.
struct MCEstimate {
  double mean = 0.0;
  double se = 0.0;
  std::int64_t n = 0;
  std::uint64_t seed = 0;
};

namespace mc_detail {
/// Draws are partitioned into fixed blocks regardless of worker count; each
/// block owns an independent generator and its partial sums are reduced in
/// block order.  This is what makes results bit-identical across 1, 4, or 16
/// OpenMP workers.
constexpr std::int64_t kBlock = 1 << 16;
}  // namespace mc_detail

/// Mean and standard error of n draws of sample(rng).  The parallel flag only
/// selects whether blocks run under OpenMP; it never changes the result bits.
/// Non-finite draws abort the estimate with the offending draw index.
template <class SampleFn>
MCEstimate chunked_estimate(std::int64_t n, std::uint64_t seed, SampleFn&& sample,
                            bool parallel = true) {
  if (n <= 0) throw std::invalid_argument("chunked_estimate: n must be positive");
  const std::int64_t blocks = (n + mc_detail::kBlock - 1) / mc_detail::kBlock;
  std::vector<double> sums(blocks, 0.0);
  std::vector<double> sq_sums(blocks, 0.0);
  std::vector<std::int64_t> bad(blocks, -1);
#pragma omp parallel for schedule(static) if (parallel)
  for (std::int64_t b = 0; b < blocks; ++b) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(b)));
    const std::int64_t begin = b * mc_detail::kBlock;
    const std::int64_t end = std::min(n, begin + mc_detail::kBlock);
    double s = 0.0;
    double s2 = 0.0;
    for (std::int64_t i = begin; i < end; ++i) {
      const double v = sample(rng);
      if (!std::isfinite(v)) {
        if (bad[b] < 0) bad[b] = i;
        continue;
      }
      s += v;
      s2 += v * v;
    }
    sums[b] = s;
    sq_sums[b] = s2;
  }
  for (std::int64_t b = 0; b < blocks; ++b) {
    if (bad[b] >= 0) {
      throw std::runtime_error("chunked_estimate: non-finite sample at draw index " +
                               std::to_string(bad[b]));
    }
  }
  double total = 0.0;
  double total_sq = 0.0;
  for (std::int64_t b = 0; b < blocks; ++b) {
    total += sums[b];
    total_sq += sq_sums[b];
  }
  MCEstimate est;
  est.n = n;
  est.seed = seed;
  est.mean = total / static_cast<double>(n);
  const double var =
      n > 1 ? std::max(0.0, (total_sq - static_cast<double>(n) * est.mean * est.mean) /
                                static_cast<double>(n - 1))
            : 0.0;
  est.se = std::sqrt(var / static_cast<double>(n));
  return est;
}

/// Serial reference: the identical block schedule run on one worker; kept for
/// testing and the benchmark, bit-identical to the parallel path.
template <class SampleFn>
MCEstimate chunked_estimate_serial(std::int64_t n, std::uint64_t seed, SampleFn&& sample) {
  return chunked_estimate(n, seed, std::forward<SampleFn>(sample), false);
}

/// Estimate of E[f(Y)] where Y is one exact transition of length t from x.
MCEstimate estimate(const std::function<double(const State&)>& f, const ProcessSpec& spec,
                    const State& x, double t, std::int64_t n, std::uint64_t seed,
                    bool parallel = true);

}  // namespace hka
