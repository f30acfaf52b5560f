// Timing comparison of the OpenMP block reduction against the serial
// reference, plus a hard equality check: both orderings must agree bit for
// bit, whatever the worker count.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cmath>

#include "hka/mc.hpp"
#include "hka/processes.hpp"

namespace {

double bench(bool parallel, std::int64_t n, double* out_mean) {
  const hka::BrownianDrift process{{0.25}};
  hka::State x0;
  x0.push_back(0.0);
  const auto start = std::chrono::steady_clock::now();
  const hka::MCEstimate est = hka::chunked_estimate(
      n, 20260822,
      [&](hka::Rng& rng) {
        hka::State y;
        hka::sample_transition_into(hka::ProcessSpec{process}, x0, 1.0, rng, y);
        return std::exp(-std::fabs(y[0]));
      },
      parallel);
  const auto stop = std::chrono::steady_clock::now();
  *out_mean = est.mean;
  return std::chrono::duration<double>(stop - start).count();
}

}  // namespace

int main(int argc, char** argv) {
  const std::int64_t n = argc > 1 ? std::atoll(argv[1]) : 4000000;
  double serial_mean = 0.0;
  double parallel_mean = 0.0;
  const double serial_s = bench(false, n, &serial_mean);
  const double parallel_s = bench(true, n, &parallel_mean);
  std::printf("n=%lld\n", static_cast<long long>(n));
  std::printf("serial    %8.3fs  mean=%.17g\n", serial_s, serial_mean);
  std::printf("parallel  %8.3fs  mean=%.17g  speedup=%.2fx\n", parallel_s, parallel_mean,
              serial_s / parallel_s);
  if (serial_mean != parallel_mean) {
    std::printf("FAIL: parallel mean differs from the serial reference\n");
    return 1;
  }
  std::printf("bitwise identical: yes\n");
  return 0;
}
