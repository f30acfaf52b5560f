#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

#include "hka/kernels.hpp"
#include "hka/quadrature.hpp"

using namespace hka;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

State scalar(double v) {
  State x;
  x.push_back(v);
  return x;
}

double normal_density(double x, double var) {
  return std::exp(-0.5 * x * x / var) / std::sqrt(2.0 * M_PI * var);
}

/// Gamma mixing density of the subordinator at time t.
double gamma_density(double s, double shape, double rate) {
  return std::exp(shape * std::log(rate) + (shape - 1.0) * std::log(s) - rate * s -
                  std::lgamma(shape));
}

}  // namespace

TEST_CASE("constant expectation kernels propagate exactly") {
  ExpectationKernel k;
  k.h = ConstantH{2.0};
  k.process = BrownianDrift{{0.4}};
  const KernelSpec spec{k};
  CHECK(eval(spec, 0.0, scalar(0.3)) == 2.0);
  CHECK(eval(spec, 5.0, scalar(-1.0)) == 2.0);
  const Model m = make_model(spec, scalar(0.0));
  const auto check = check_propagation(m.kernel, m.driver, 1.0, 0.5, scalar(0.2), 10000, 1);
  CHECK(check.lhs.mean == 1.0 * 2.0);
  CHECK(check.z == 0.0);
}

TEST_CASE("gaussian bump expectation kernel matches its quadrature estimator") {
  ExpectationKernel closed;
  closed.h = GaussBumpH{1.2};
  closed.process = BrownianDrift{{0.25}};
  ExpectationKernel quad = closed;
  quad.estimator = Estimator::quadrature;
  for (double t : {0.3, 1.0, 2.5}) {
    for (double x : {-0.7, 0.0, 1.4}) {
      CHECK(eval(KernelSpec{closed}, t, scalar(x)) ==
            doctest::Approx(eval(KernelSpec{quad}, t, scalar(x))).epsilon(1e-9));
    }
  }
  // Sampling estimators refuse silent point evaluation.
  ExpectationKernel mc = closed;
  mc.estimator = Estimator::monte_carlo;
  CHECK_FALSE(exactly_evaluable(KernelSpec{mc}));
  CHECK_THROWS_AS(eval(KernelSpec{mc}, 1.0, scalar(0.0)), std::invalid_argument);
  const auto est = eval_mc(KernelSpec{mc}, 0.8, scalar(0.1), 50000, 2);
  const double exact = eval(KernelSpec{closed}, 0.8, scalar(0.1));
  CHECK(std::fabs(est.mean - exact) <= 4.0 * est.se);
  // At t = 0 the expectation is h(x) itself, exactly.
  const auto at0 = eval_mc(KernelSpec{mc}, 0.0, scalar(0.3), 100, 3);
  CHECK(at0.mean == std::exp(-0.5 * 1.2 * 1.2 * 0.09));
  CHECK(at0.se == 0.0);
}

TEST_CASE("levy density kernel is the mirrored transition density") {
  LevyDensityKernel k{CauchyProcess{0.8, {0.3}}};
  const KernelSpec spec{k};
  const Model m = make_model(spec, scalar(0.0));
  // Driver is the mirrored process.
  const auto* cp = std::get_if<CauchyProcess>(&m.driver);
  REQUIRE(cp != nullptr);
  CHECK(cp->drift[0] == -0.3);
  const double t = 0.7;
  const double x = 1.1;
  CHECK(eval(spec, t, scalar(x)) ==
        doctest::Approx((0.8 * t) / M_PI /
                        ((0.8 * t) * (0.8 * t) + (x - 0.3 * t) * (x - 0.3 * t)))
            .epsilon(1e-12));
  CHECK_THROWS_AS(eval(spec, 0.0, scalar(0.0)), std::invalid_argument);
  // Non-Levy processes cannot back a convolution kernel.
  CHECK_THROWS_AS(make_model(KernelSpec{LevyDensityKernel{CoxIngersollRoss{0.5, 0.1, 0.2}}},
                             scalar(0.1)),
                  std::invalid_argument);
}

TEST_CASE("affine kernel sums positive transform terms") {
  AffineCirKernel k;
  k.a = {0.6, 0.4};
  k.mu = {-1.0, -2.5};
  k.process = CoxIngersollRoss{0.8, 0.15, 0.3};
  const KernelSpec spec{k};
  const double direct = 0.6 * cir_exp_transform(k.process, -1.0, 1.3, 0.2) +
                        0.4 * cir_exp_transform(k.process, -2.5, 1.3, 0.2);
  CHECK(eval(spec, 1.3, scalar(0.2)) == doctest::Approx(direct).epsilon(1e-14));
  CHECK(eval(spec, 0.0, scalar(0.2)) ==
        doctest::Approx(0.6 * std::exp(-0.2) + 0.4 * std::exp(-0.5)).epsilon(1e-14));
  AffineCirKernel bad = k;
  bad.mu = {-1.0, 0.5};
  CHECK_THROWS_AS(make_model(KernelSpec{bad}, scalar(0.1)), std::invalid_argument);
}

TEST_CASE("eigen kernels validate their pairing at construction") {
  EigenKernel good;
  good.g = ExpLinearEigen{{1.0}};
  good.process = BrownianDrift{{1.0}};
  const Model m = make_model(KernelSpec{good}, scalar(0.0));
  const double nu = eigen_rate(good.g, good.process);
  CHECK(nu == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(eval(m.kernel, 2.0, scalar(0.3)) ==
        doctest::Approx(1.0 + std::exp(nu * 2.0 + 0.3)).epsilon(1e-14));

  // Eigen relationship holds only when the drift beats |c|^2/2.
  EigenKernel weak = good;
  weak.process = BrownianDrift{{0.3}};
  CHECK_THROWS_WITH_AS(make_model(KernelSpec{weak}, scalar(0.0)),
                       doctest::Contains("needs <c,kappa> > |c|^2/2"), std::invalid_argument);

  // Unsupported pairings are rejected, not silently mispriced.
  CHECK_THROWS_AS(eigen_rate(EigenFunc{ExpLinearEigen{{1.0}}},
                             ProcessSpec{OrnsteinUhlenbeck{-0.5}}),
                  std::invalid_argument);
  // The squared-exponential eigenfunction must share the reversion speed.
  EigenKernel mismatched;
  mismatched.g = SquaredExpEigen{-0.5};
  mismatched.process = OrnsteinUhlenbeck{-0.3};
  CHECK_THROWS_AS(make_model(KernelSpec{mismatched}, scalar(0.0)), std::invalid_argument);
  EigenKernel ou_good;
  ou_good.g = SquaredExpEigen{-0.5};
  ou_good.process = OrnsteinUhlenbeck{-0.5};
  CHECK_NOTHROW(make_model(KernelSpec{ou_good}, scalar(0.0)));
}

TEST_CASE("eigen sum kernels evaluate decreasing coefficient sums") {
  EigenSumKernel k;
  k.terms.push_back(EigenSumTerm{0.7, 0.2, ExpLinearEigen{{0.5}}});
  k.terms.push_back(EigenSumTerm{0.3, 0.0, ExpLinearEigen{{1.0}}});
  k.process = BrownianDrift{{1.0}};
  const KernelSpec spec{k};
  const double x = 0.4;
  CHECK(eval(spec, 1.5, scalar(x)) ==
        doctest::Approx(0.7 * std::exp(-0.3) * std::exp(0.5 * x) +
                        0.3 * std::exp(1.0 * x))
            .epsilon(1e-14));
  EigenSumKernel bad = k;
  bad.terms[0].weight = -0.1;
  CHECK_THROWS_AS(make_model(KernelSpec{bad}, scalar(0.0)), std::invalid_argument);
  EigenSumKernel growing = k;
  growing.terms[0].decay = -0.1;
  CHECK_THROWS_AS(make_model(KernelSpec{growing}, scalar(0.0)), std::invalid_argument);
}

TEST_CASE("weighted kernel with a constant base is the exponential integral") {
  auto base = std::make_shared<const KernelSpec>(KernelSpec{[] {
    ExpectationKernel e;
    e.h = ConstantH{1.0};
    e.process = BrownianDrift{{0.0}};
    return e;
  }()});
  WeightedKernel k;
  k.base = base;
  k.weight = ExpWeight{0.8};
  const KernelSpec spec{k};
  for (double t : {0.0, 0.5, 2.0}) {
    CHECK(eval(spec, t, scalar(0.3)) ==
          doctest::Approx(std::exp(-0.8 * t) / 0.8).epsilon(1e-9));
  }
}

TEST_CASE("weighted kernel over the heat kernel is the laplace resolvent") {
  auto base = std::make_shared<const KernelSpec>(
      KernelSpec{LevyDensityKernel{BrownianDrift{{0.0}}}});
  WeightedKernel k;
  k.base = base;
  k.weight = ExpWeight{0.6};
  const KernelSpec spec{k};
  const double root = std::sqrt(2.0 * 0.6);
  for (double t : {0.0, 1.0}) {
    for (double x : {-1.2, 0.4, 2.0}) {
      const double expected = std::exp(-0.6 * t) * std::exp(-std::fabs(x) * root) / root;
      CHECK(eval(spec, t, scalar(x)) == doctest::Approx(expected).epsilon(1e-8));
    }
  }
  const QuadResult qr = weighted_eval(k, 0.5, scalar(0.2));
  CHECK(qr.converged);
  CHECK(qr.error <= 1e-8);
  // Weighted kernels need an exactly evaluable propagation base.
  WeightedKernel nested;
  nested.base = std::make_shared<const KernelSpec>(spec);
  nested.weight = ExpWeight{0.5};
  CHECK_THROWS_AS(make_model(KernelSpec{nested}, scalar(0.0)), std::invalid_argument);
}

TEST_CASE("killed kernel closed forms: constant potential and square-root rates") {
  KilledKernel flat;
  flat.v = ConstantPotential{0.0};
  flat.process = BrownianDrift{{0.2}};
  CHECK(eval(KernelSpec{flat}, 3.0, scalar(0.5)) == doctest::Approx(1.0).epsilon(1e-15));
  flat.v = ConstantPotential{0.07};
  CHECK(eval(KernelSpec{flat}, 3.0, scalar(0.5)) ==
        doctest::Approx(std::exp(-0.21)).epsilon(1e-14));

  KilledKernel cir;
  cir.v = IdentityPotential{};
  cir.process = CoxIngersollRoss{0.8, 0.15, 0.3};
  const KernelSpec spec{cir};
  const double closed = eval(spec, 1.4, scalar(0.1));
  CHECK(closed > 0.0);
  CHECK(closed < 1.0);
  CHECK(eval(spec, 0.0, scalar(0.1)) == doctest::Approx(1.0).epsilon(1e-14));
  const auto mc = killed_eval_mc(cir, 1.4, scalar(0.1), 20000, 4);
  CHECK(std::fabs(mc.mean - closed) <= 3.0 * mc.se);

  // Quadrature has no meaning for path functionals; Monte Carlo does.
  KilledKernel bad = cir;
  bad.estimator = Estimator::quadrature;
  CHECK_THROWS_AS(make_model(KernelSpec{bad}, scalar(0.1)), std::invalid_argument);
  KilledKernel sampling = cir;
  sampling.estimator = Estimator::monte_carlo;
  CHECK_FALSE(exactly_evaluable(KernelSpec{sampling}));
  // Closed form exists only for the potentials above.
  KilledKernel unsupported;
  unsupported.v = IdentityPotential{};
  unsupported.process = BrownianDrift{{0.2}};
  CHECK_THROWS_AS(make_model(KernelSpec{unsupported}, scalar(0.0)), std::invalid_argument);
}

TEST_CASE("trace u families: symmetry, monotone origin value, reference values") {
  const TraceFamily fams[] = {
      TraceFamily{GaussHeatU{}}, TraceFamily{QuadGaussU{1.3}}, TraceFamily{CauchySymU{0.9}},
      TraceFamily{VarianceGammaU{1.5, 1.1}}, TraceFamily{NormalInverseGaussianU{0.8, 1.2}}};
  for (const auto& fam : fams) {
    for (double t : {0.6, 1.0, 2.7}) {
      for (double x : {0.3, 1.1, 2.4}) {
        CHECK(trace_u(fam, t, x) == doctest::Approx(trace_u(fam, t, -x)).epsilon(1e-12));
        CHECK(trace_u(fam, t, x) <= trace_u0(fam, t) * (1.0 + 1e-12));
      }
      CHECK(trace_u0(fam, t + 0.4) < trace_u0(fam, t));
    }
  }
  CHECK(trace_u0(GaussHeatU{}, 2.0) == doctest::Approx(1.0 / std::sqrt(4.0 * M_PI)));
  CHECK(trace_u(GaussHeatU{}, 2.0, 1.0) ==
        doctest::Approx(std::exp(-0.25) / std::sqrt(4.0 * M_PI)).epsilon(1e-14));
  CHECK(trace_u0(QuadGaussU{1.3}, 2.0) ==
        doctest::Approx(1.0 / std::sqrt(2.0 * 1.69 + 1.0)).epsilon(1e-14));
  CHECK(trace_u0(CauchySymU{0.9}, 2.0) == doctest::Approx(1.0 / (M_PI * 1.8)).epsilon(1e-14));
}

TEST_CASE("variance gamma origin value and gamma-mixture integral") {
  // u(t, 0) = sqrt(gamma/(2 pi)) Gamma(eta t - 1/2) / Gamma(eta t).
  const double eta = 1.5;
  const double gam = 1.1;
  for (double t : {0.5, 1.0, 2.0}) {
    const double expected = std::sqrt(gam / (2.0 * M_PI)) *
                            std::exp(std::lgamma(eta * t - 0.5) - std::lgamma(eta * t));
    CHECK(trace_u0(VarianceGammaU{eta, gam}, t) == doctest::Approx(expected).epsilon(1e-12));
  }
  CHECK(trace_u0(VarianceGammaU{1.0, 1.0}, 1.0) ==
        doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK_THROWS_AS(trace_u0(VarianceGammaU{1.0, 1.0}, 0.4), std::domain_error);

  // Against direct quadrature of the normal-at-gamma-time mixture.
  for (double t : {0.6, 1.3}) {
    for (double x : {0.2, 1.0, 3.5}) {
      const double expected = integrate_or_throw(
          [&](double s) {
            return normal_density(x, s) * gamma_density(s, eta * t, gam);
          },
          0.0, kInf);
      CHECK(trace_u(VarianceGammaU{eta, gam}, t, x) ==
            doctest::Approx(expected).epsilon(1e-7));
    }
  }
}

TEST_CASE("normal inverse gaussian kernel matches its subordination integral") {
  const double eta = 0.8;
  const double gam = 1.2;
  for (double t : {0.5, 1.4}) {
    for (double x : {0.3, 1.2, 2.8}) {
      const double mean = eta * t * std::sqrt(M_PI / gam);
      const double shape = 2.0 * M_PI * eta * eta * t * t;
      const double expected = integrate_or_throw(
          [&](double s) {
            const double ig = std::sqrt(shape / (2.0 * M_PI * s * s * s)) *
                              std::exp(-shape * (s - mean) * (s - mean) / (2.0 * mean * mean * s));
            return normal_density(x, s) * ig;
          },
          0.0, kInf);
      CHECK(trace_u(NormalInverseGaussianU{eta, gam}, t, x) ==
            doctest::Approx(expected).epsilon(1e-7));
    }
  }
}

TEST_CASE("trace models: state price density and validation") {
  const KernelSpec spec{TraceKernel{GaussHeatU{}, 1.0, 3.0}};
  const Model m = make_model(spec, scalar(0.0));
  CHECK(m.trace_mode);
  CHECK(std::holds_alternative<BrownianDrift>(m.driver));
  CHECK(spd_value(m, 0.0, scalar(0.0)) ==
        doctest::Approx(4.0 / std::sqrt(2.0 * M_PI)).epsilon(1e-14));

  CHECK_THROWS_AS(make_model(KernelSpec{TraceKernel{GaussHeatU{}, 1.0, 2.0}}, scalar(0.0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_model(KernelSpec{TraceKernel{GaussHeatU{}, 0.0, 3.0}}, scalar(0.0)),
                  std::invalid_argument);
  CHECK_THROWS_WITH_AS(
      make_model(KernelSpec{TraceKernel{VarianceGammaU{1.0, 1.0}, 0.45, 3.0}}, scalar(0.0)),
      doctest::Contains("eta*lambda must exceed 1/2"), std::invalid_argument);

  // Derived drivers per family.
  CHECK(std::holds_alternative<CauchyProcess>(
      make_model(KernelSpec{TraceKernel{CauchySymU{0.9}, 1.0, 3.0}}, scalar(0.0)).driver));
  CHECK(std::holds_alternative<VarianceGammaWiener>(
      make_model(KernelSpec{TraceKernel{VarianceGammaU{1.5, 1.1}, 1.0, 3.0}}, scalar(0.0))
          .driver));
  CHECK(std::holds_alternative<NormalInverseGaussianWiener>(
      make_model(KernelSpec{TraceKernel{NormalInverseGaussianU{0.8, 1.2}, 1.0, 3.0}},
                 scalar(0.0))
          .driver));
}

TEST_CASE("conditional state price density collapses to the spot value at T = t") {
  // Trace family.
  {
    const Model m = make_model(KernelSpec{TraceKernel{QuadGaussU{1.1}, 0.9, 2.6}}, scalar(0.0));
    for (double t : {0.2, 1.5}) {
      CHECK(conditional_spd(m, t, t, scalar(0.7)) ==
            doctest::Approx(eval(m.kernel, t, scalar(0.7))).epsilon(1e-13));
    }
  }
  // Propagation family: conditional is the kernel at 2T - t.
  {
    LevyDensityKernel k{BrownianDrift{{0.3}}};
    const Model m = make_model(KernelSpec{k}, scalar(0.0));
    CHECK(conditional_spd(m, 0.5, 1.25, scalar(0.4)) ==
          doctest::Approx(eval(m.kernel, 2.0, scalar(0.4))).epsilon(1e-13));
  }
  // Weighted family.
  {
    WeightedKernel k;
    k.base = std::make_shared<const KernelSpec>(
        KernelSpec{LevyDensityKernel{BrownianDrift{{0.0}}}});
    k.weight = ExpWeight{0.6};
    const Model m = make_model(KernelSpec{k}, scalar(0.0));
    for (double t : {0.4, 1.1}) {
      CHECK(conditional_spd(m, t, t, scalar(0.5)) ==
            doctest::Approx(eval(m.kernel, t, scalar(0.5))).epsilon(1e-8));
    }
  }
  // Killed family carries the accumulated potential through.
  {
    KilledKernel k;
    k.v = IdentityPotential{};
    k.process = CoxIngersollRoss{0.8, 0.15, 0.3};
    const Model m = make_model(KernelSpec{k}, scalar(0.1));
    const double acc = 0.35;
    CHECK(conditional_spd(m, 0.8, 0.8, scalar(0.2), acc) ==
          doctest::Approx(std::exp(-acc) * eval(m.kernel, 0.8, scalar(0.2))).epsilon(1e-13));
    CHECK(spd_value(m, 0.8, scalar(0.2), acc) ==
          doctest::Approx(std::exp(-acc) * eval(m.kernel, 0.8, scalar(0.2))).epsilon(1e-13));
    CHECK_THROWS_AS(spd_value(m, 0.8, scalar(0.2)), std::invalid_argument);
  }
}

TEST_CASE("trace conditional expectation evolves only the stochastic term") {
  const double lambda = 1.0;
  const double c = 3.0;
  const Model m = make_model(KernelSpec{TraceKernel{GaussHeatU{}, lambda, c}}, scalar(0.0));
  const double t = 0.5;
  const double T = 2.0;
  const double x = 0.8;
  const double expected = trace_u(GaussHeatU{}, lambda + 2.0 * T - t, x) +
                          c * trace_u0(GaussHeatU{}, lambda + T);
  CHECK(conditional_spd(m, t, T, scalar(x)) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("propagation check statistic is sane for the heat kernel") {
  LevyDensityKernel k{BrownianDrift{{0.3}}};
  const Model m = make_model(KernelSpec{k}, scalar(0.0));
  const auto check = check_propagation(m.kernel, m.driver, 0.8, 0.6, scalar(0.4), 200000, 5);
  CHECK(check.rhs == doctest::Approx(eval(m.kernel, 1.4, scalar(0.4))).epsilon(1e-14));
  CHECK(std::fabs(check.z) <= 4.0);
  CHECK(check.lhs.se > 0.0);
}

TEST_CASE("model construction validates the starting point") {
  CHECK_THROWS_WITH_AS(
      make_model(KernelSpec{LevyDensityKernel{BrownianDrift{{0.1, 0.2}}}}, scalar(0.0)),
      doctest::Contains("dimension"), std::invalid_argument);
  AffineCirKernel k;
  k.a = {1.0};
  k.mu = {-1.0};
  k.process = CoxIngersollRoss{0.8, 0.15, 0.3};
  CHECK_THROWS_AS(make_model(KernelSpec{k}, scalar(-0.1)), std::invalid_argument);
}
