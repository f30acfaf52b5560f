#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "hka/mc.hpp"
#include "hka/processes.hpp"
#include "hka/quadrature.hpp"

using namespace hka;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

State scalar(double v) {
  State x;
  x.push_back(v);
  return x;
}

/// Two-sample Kolmogorov-Smirnov distance.
double ks_distance(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0.0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j]) {
      ++i;
    } else {
      ++j;
    }
    const double fa = static_cast<double>(i) / a.size();
    const double fb = static_cast<double>(j) / b.size();
    d = std::max(d, std::fabs(fa - fb));
  }
  return d;
}

/// 0.1% critical value for the two-sample statistic; a genuine law mismatch
/// keeps D roughly constant while the critical value shrinks with n, so the
/// tight level costs no power at these sample sizes.
double ks_critical(std::size_t n, std::size_t m) {
  return 1.949 * std::sqrt(static_cast<double>(n + m) / (static_cast<double>(n) * m));
}

std::vector<double> draw_increments(const ProcessSpec& spec, double x0, double dt, int hops,
                                    std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    State x = scalar(x0);
    for (int h = 0; h < hops; ++h) x = sample_transition(spec, x, dt, rng);
    out[i] = x[0];
  }
  return out;
}

MCEstimate moment(const ProcessSpec& spec, double x0, double t, std::int64_t n,
                  std::uint64_t seed, double power) {
  const State x = scalar(x0);
  return chunked_estimate(n, seed, [&](Rng& rng) {
    State y;
    sample_transition_into(spec, x, t, rng, y);
    return std::pow(y[0], power);
  });
}

void check_density_is_a_density(const ProcessSpec& spec, double t, double x0) {
  const State x = scalar(x0);
  const double mass = integrate_or_throw(
      [&](double y) { return transition_density(spec, t, x, scalar(y)); }, -kInf, kInf);
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));
}

void check_sampler_matches_density(const ProcessSpec& spec, double t, double x0,
                                   std::uint64_t seed) {
  // Empirical probability of {X_t <= q} against the density integral, at the
  // sampled median; binomial standard error.
  const std::size_t n = 40000;
  auto sample = draw_increments(spec, x0, t, 1, n, seed);
  std::nth_element(sample.begin(), sample.begin() + n / 2, sample.end());
  const double q = sample[n / 2];
  const State x = scalar(x0);
  const double p = integrate_or_throw(
      [&](double y) { return transition_density(spec, t, x, scalar(y)); }, -kInf, q);
  double hits = 0.0;
  for (double v : sample) hits += v <= q ? 1.0 : 0.0;
  const double phat = hits / n;
  const double se = std::sqrt(p * (1.0 - p) / n);
  CHECK(std::fabs(phat - p) <= 4.0 * se);
}

}  // namespace

TEST_CASE("validation rejects inadmissible parameters") {
  CHECK_THROWS_AS(validate(ProcessSpec{BrownianDrift{{}}}), std::invalid_argument);
  CHECK_THROWS_AS(validate(ProcessSpec{OrnsteinUhlenbeck{0.5}}), std::invalid_argument);
  CHECK_THROWS_AS(validate(ProcessSpec{CoxIngersollRoss{0.5, 0.1, -1.0}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(validate(ProcessSpec{CauchyProcess{-1.0, {0.0}}}), std::invalid_argument);
  CHECK_THROWS_AS(validate(ProcessSpec{GammaSubordinator{0.0, 1.0}}), std::invalid_argument);
  CHECK_NOTHROW(validate(ProcessSpec{OrnsteinUhlenbeck{-0.5}}));
}

TEST_CASE("levy flags and mirroring") {
  CHECK(is_levy(ProcessSpec{BrownianDrift{{0.1}}}));
  CHECK(is_levy(ProcessSpec{CauchyProcess{1.0, {0.0}}}));
  CHECK(is_levy(ProcessSpec{GammaSubordinator{1.0, 1.0}}));
  CHECK_FALSE(is_levy(ProcessSpec{OrnsteinUhlenbeck{-0.5}}));
  CHECK_FALSE(is_levy(ProcessSpec{CoxIngersollRoss{0.5, 0.1, 0.2}}));

  // The mirrored law at y is the original law at -y (both from the origin).
  const ProcessSpec bm{BrownianDrift{{0.7}}};
  const ProcessSpec mbm = mirrored(bm);
  for (double y : {-1.3, -0.2, 0.4, 2.0}) {
    CHECK(transition_density(mbm, 0.8, scalar(0.0), scalar(y)) ==
          doctest::Approx(transition_density(bm, 0.8, scalar(0.0), scalar(-y))).epsilon(1e-14));
  }
  CHECK_THROWS_AS(mirrored(ProcessSpec{CoxIngersollRoss{0.5, 0.1, 0.2}}), std::exception);
}

TEST_CASE("ou conditional law uses the explosive drift convention") {
  // With generator -mu x d/dx + (1/2) d^2/dx^2 and mu < 0, the conditional
  // mean x e^{-mu t} grows: from x = 1 over t = 2 at mu = -1/2 it is e^{+1}.
  const OrnsteinUhlenbeck ou{-0.5};
  CHECK(ou_conditional_mean(ou, 1.0, 2.0) == doctest::Approx(std::exp(1.0)).epsilon(1e-14));
  CHECK(ou_conditional_variance(ou, 2.0) ==
        doctest::Approx((std::exp(2.0) - 1.0)).epsilon(1e-14));

  const auto est = moment(ProcessSpec{ou}, 1.0, 2.0, 200000, 41, 1.0);
  CHECK(std::fabs(est.mean - std::exp(1.0)) <= 4.0 * est.se);
  const auto est2 = moment(ProcessSpec{ou}, 1.0, 2.0, 200000, 42, 2.0);
  const double second = (std::exp(2.0) - 1.0) + std::exp(2.0);  // Var + mean^2
  CHECK(std::fabs(est2.mean - second) <= 4.0 * est2.se);
}

TEST_CASE("cir moments match the square-root diffusion") {
  const CoxIngersollRoss cir{0.8, 0.15, 0.3};
  const double x0 = 0.05;
  const double t = 1.7;
  const double decay = std::exp(-cir.kappa * t);
  const double mean = cir.theta + (x0 - cir.theta) * decay;
  const double var =
      x0 * cir.sigma * cir.sigma * (decay - decay * decay) / cir.kappa +
      cir.theta * cir.sigma * cir.sigma * (1.0 - decay) * (1.0 - decay) / (2.0 * cir.kappa);
  const auto m1 = moment(ProcessSpec{cir}, x0, t, 400000, 43, 1.0);
  CHECK(std::fabs(m1.mean - mean) <= 4.0 * m1.se);
  const auto m2 = moment(ProcessSpec{cir}, x0, t, 400000, 44, 2.0);
  CHECK(std::fabs(m2.mean - (var + mean * mean)) <= 4.0 * m2.se);
}

TEST_CASE("subordinator increments have the advertised moments") {
  const double eta = 1.3;
  const double gamma = 0.9;
  const double t = 0.7;
  {
    const ProcessSpec sub{GammaSubordinator{eta, gamma}};
    const auto m1 = moment(sub, 0.0, t, 200000, 45, 1.0);
    CHECK(std::fabs(m1.mean - eta * t / gamma) <= 4.0 * m1.se);
    const auto m2 = moment(sub, 0.0, t, 200000, 46, 2.0);
    const double second = eta * t / (gamma * gamma) + std::pow(eta * t / gamma, 2);
    CHECK(std::fabs(m2.mean - second) <= 4.0 * m2.se);
  }
  {
    const ProcessSpec sub{InverseGaussianSubordinator{eta, gamma}};
    const double mean = eta * t * std::sqrt(M_PI / gamma);
    const double shape = 2.0 * M_PI * eta * eta * t * t;
    const auto m1 = moment(sub, 0.0, t, 200000, 47, 1.0);
    CHECK(std::fabs(m1.mean - mean) <= 4.0 * m1.se);
    const auto m2 = moment(sub, 0.0, t, 200000, 48, 2.0);
    const double second = mean * mean * mean / shape + mean * mean;
    CHECK(std::fabs(m2.mean - second) <= 4.0 * m2.se);
  }
}

TEST_CASE("subordinated wieners have subordinator variance and symmetric law") {
  const double eta = 1.1;
  const double gamma = 1.4;
  const double t = 0.9;
  {
    const ProcessSpec vg{VarianceGammaWiener{eta, gamma}};
    const auto m2 = moment(vg, 0.0, t, 300000, 49, 2.0);
    CHECK(std::fabs(m2.mean - eta * t / gamma) <= 4.0 * m2.se);
    auto plus = draw_increments(vg, 0.0, t, 1, 20000, 50);
    auto minus = draw_increments(vg, 0.0, t, 1, 20000, 51);
    for (double& v : minus) v = -v;
    CHECK(ks_distance(plus, minus) <= ks_critical(20000, 20000));
  }
  {
    const ProcessSpec nig{NormalInverseGaussianWiener{eta, gamma}};
    const auto m2 = moment(nig, 0.0, t, 300000, 52, 2.0);
    CHECK(std::fabs(m2.mean - eta * t * std::sqrt(M_PI / gamma)) <= 4.0 * m2.se);
    auto plus = draw_increments(nig, 0.0, t, 1, 20000, 53);
    auto minus = draw_increments(nig, 0.0, t, 1, 20000, 54);
    for (double& v : minus) v = -v;
    CHECK(ks_distance(plus, minus) <= ks_critical(20000, 20000));
  }
}

TEST_CASE("one transition and a composed pair agree in law") {
  const std::size_t n = 20000;
  int idx = 0;
  for (const ProcessSpec& spec :
       {ProcessSpec{BrownianDrift{{0.4}}}, ProcessSpec{OrnsteinUhlenbeck{-0.6}},
        ProcessSpec{CoxIngersollRoss{0.8, 0.15, 0.3}}, ProcessSpec{CauchyProcess{0.7, {0.2}}},
        ProcessSpec{GammaSubordinator{1.2, 1.0}},
        ProcessSpec{VarianceGammaWiener{1.0, 1.0}}}) {
    CAPTURE(idx);
    const double x0 = std::holds_alternative<CoxIngersollRoss>(spec) ? 0.1 : 0.0;
    const auto one = draw_increments(spec, x0, 1.0, 1, n, 60 + idx);
    const auto two = draw_increments(spec, x0, 0.5, 2, n, 80 + idx);
    CHECK(ks_distance(one, two) <= ks_critical(n, n));
    ++idx;
  }
}

TEST_CASE("cauchy scaling: X_t has the law of t X_1") {
  const ProcessSpec cauchy{CauchyProcess{1.0, {0.0}}};
  const double t = 2.5;
  auto at_t = draw_increments(cauchy, 0.0, t, 1, 20000, 90);
  auto scaled = draw_increments(cauchy, 0.0, 1.0, 1, 20000, 91);
  for (double& v : scaled) v *= t;
  CHECK(ks_distance(at_t, scaled) <= ks_critical(20000, 20000));
}

TEST_CASE("closed form densities integrate to one and match their samplers") {
  check_density_is_a_density(ProcessSpec{BrownianDrift{{0.4}}}, 0.8, 0.3);
  check_density_is_a_density(ProcessSpec{OrnsteinUhlenbeck{-0.6}}, 0.8, 0.3);
  check_density_is_a_density(ProcessSpec{CauchyProcess{0.7, {0.2}}}, 0.8, 0.3);
  check_sampler_matches_density(ProcessSpec{BrownianDrift{{0.4}}}, 0.8, 0.3, 92);
  check_sampler_matches_density(ProcessSpec{OrnsteinUhlenbeck{-0.6}}, 0.8, 0.3, 93);
  check_sampler_matches_density(ProcessSpec{CauchyProcess{0.7, {0.2}}}, 0.8, 0.3, 94);
}

TEST_CASE("cir exponential transform against simulation") {
  const CoxIngersollRoss cir{0.8, 0.15, 0.3};
  const double u = -1.4;
  const double t = 1.2;
  const double x0 = 0.07;
  const double closed = cir_exp_transform(cir, u, t, x0);
  const State x = scalar(x0);
  const auto est = chunked_estimate(400000, 95, [&](Rng& rng) {
    State y;
    sample_transition_into(ProcessSpec{cir}, x, t, rng, y);
    return std::exp(u * y[0]);
  });
  CHECK(std::fabs(est.mean - closed) <= 4.0 * est.se);
  CHECK(cir_exp_transform(cir, u, 0.0, x0) == doctest::Approx(std::exp(u * x0)).epsilon(1e-15));
  CHECK_THROWS_AS(cir_exp_transform(cir, 0.5, 1.0, x0), std::invalid_argument);
}

TEST_CASE("path sampling validates its grid and reproduces by seed") {
  const ProcessSpec spec{BrownianDrift{{0.2}}};
  const std::vector<double> bad_start{0.5, 1.0};
  CHECK_THROWS_AS(sample_path(spec, scalar(0.0), bad_start, 1), std::invalid_argument);
  const std::vector<double> not_increasing{0.0, 1.0, 1.0};
  CHECK_THROWS_AS(sample_path(spec, scalar(0.0), not_increasing, 1), std::invalid_argument);

  const std::vector<double> grid{0.0, 0.5, 1.0, 2.0};
  const PathGrid a = sample_path(spec, scalar(0.0), grid, 7);
  const PathGrid b = sample_path(spec, scalar(0.0), grid, 7);
  const PathGrid c = sample_path(spec, scalar(0.0), grid, 8);
  REQUIRE(a.states.size() == 4);
  CHECK(a.states[3][0] == b.states[3][0]);
  CHECK(a.states[3][0] != c.states[3][0]);
}
