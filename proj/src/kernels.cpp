#include "hka/kernels.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include "hka/rng.hpp"
#include "hka/specfun.hpp"

namespace hka {

namespace {

constexpr double kPi = 3.14159265358979323846;

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

State zero_state(int d) {
  State x;
  for (int i = 0; i < d; ++i) x.push_back(0.0);
  return x;
}

double h_eval(const HFunc& h, const State& y) {
  if (const auto* c = std::get_if<ConstantH>(&h)) return c->value;
  const auto& b = std::get<GaussBumpH>(h);
  return std::exp(-0.5 * b.alpha * b.alpha * y[0] * y[0]);
}

double potential_eval(const Potential& v, const State& y) {
  if (const auto* c = std::get_if<ConstantPotential>(&v)) return c->r;
  return y[0];
}

double weight_eval(const WeightFunc& w, double t, double s) {
  const auto& e = std::get<ExpWeight>(w);
  return std::exp(-e.alpha * (t + s));
}

/// Closed form of E[h(X^x_t)] for a Gaussian-step driver and the quadratic
/// bump h; the integral is a Lemma-A1 Gaussian-quadratic moment.
double expectation_closed(const ExpectationKernel& k, double t, const State& x) {
  if (const auto* c = std::get_if<ConstantH>(&k.h)) return c->value;
  const auto& b = std::get<GaussBumpH>(k.h);
  if (t == 0.0) return h_eval(k.h, x);
  double m = 0.0;
  double v = 0.0;
  if (const auto* bm = std::get_if<BrownianDrift>(&k.process)) {
    m = x[0] - bm->kappa[0] * t;
    v = t;
  } else if (const auto* ou = std::get_if<OrnsteinUhlenbeck>(&k.process)) {
    m = ou_conditional_mean(*ou, x[0], t);
    v = ou_conditional_variance(*ou, t);
  } else {
    throw std::invalid_argument(
        "expectation kernel: closed form needs a Gaussian-step driver (brownian or ou)");
  }
  return gaussian_quadratic_integral(m, v, -0.5 * b.alpha * b.alpha,
                                     -std::numeric_limits<double>::infinity(),
                                     std::numeric_limits<double>::infinity());
}

double expectation_quadrature(const ExpectationKernel& k, double t, const State& x) {
  if (t == 0.0) return h_eval(k.h, x);
  const auto value = integrate_or_throw(
      [&](double y) {
        State ys;
        ys.push_back(y);
        return h_eval(k.h, ys) * transition_density(k.process, t, x, ys);
      },
      -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
      k.quad);
  return value;
}

/// Zero-coupon value E[exp(-int_0^t X_s ds)] of the square-root diffusion in
/// the exponential-affine form A(t) e^{-B(t) x}, evaluated through e^{-g t}
/// scalings so large horizons stay in range; g = sqrt(kappa^2 + 2 sigma^2).
double cir_killed_closed(const CoxIngersollRoss& p, double t, double x) {
  if (t == 0.0) return 1.0;
  const double g = std::sqrt(p.kappa * p.kappa + 2.0 * p.sigma * p.sigma);
  const double em = -std::expm1(-g * t);  // 1 - e^{-g t}
  const double den = (g + p.kappa) * em + 2.0 * g * std::exp(-g * t);
  const double b = 2.0 * em / den;
  const double log_a =
      (2.0 * p.kappa * p.theta / (p.sigma * p.sigma)) *
      (std::log(2.0 * g) + 0.5 * (p.kappa + g) * t - g * t - std::log(den));
  return std::exp(log_a - b * x);
}

ProcessSpec trace_driver(const TraceFamily& fam) {
  return std::visit(
      [](const auto& u) -> ProcessSpec {
        using T = std::decay_t<decltype(u)>;
        if constexpr (std::is_same_v<T, GaussHeatU>) {
          return BrownianDrift{{0.0}};
        } else if constexpr (std::is_same_v<T, QuadGaussU>) {
          return BrownianDrift{{0.0}};
        } else if constexpr (std::is_same_v<T, CauchySymU>) {
          return CauchyProcess{u.theta, {0.0}};
        } else if constexpr (std::is_same_v<T, VarianceGammaU>) {
          return VarianceGammaWiener{u.eta, u.gamma};
        } else {
          return NormalInverseGaussianWiener{u.eta, u.gamma};
        }
      },
      fam);
}

void validate_trace_family(const TraceFamily& fam) {
  std::visit(
      [](const auto& u) {
        using T = std::decay_t<decltype(u)>;
        if constexpr (std::is_same_v<T, QuadGaussU>) {
          require(u.alpha > 0.0, "trace kernel: alpha must be positive");
        } else if constexpr (std::is_same_v<T, CauchySymU>) {
          require(u.theta > 0.0, "trace kernel: theta must be positive");
        } else if constexpr (std::is_same_v<T, VarianceGammaU> ||
                             std::is_same_v<T, NormalInverseGaussianU>) {
          require(u.eta > 0.0, "trace kernel: eta must be positive");
          require(u.gamma > 0.0, "trace kernel: gamma must be positive");
        }
      },
      fam);
}

/// Spot check E[g(X^x_t)] = e^{nu t} g(x) by simulation at a few random
/// points; a mismatch means the (g, process) pair passed validation but is
/// not actually an eigenfunction relationship, which is a construction bug.
void spot_check_eigenfunction(const EigenFunc& g, const ProcessSpec& process) {
  const double nu = eigen_rate(g, process);
  const int d = dim(process);
  Rng rng(0x5eed5eedULL);
  for (int check = 0; check < 5; ++check) {
    const double t = 0.1 + 1.4 * rng.uniform();
    State x = zero_state(d);
    for (int i = 0; i < d; ++i) x[i] = 2.0 * rng.uniform() - 1.0;
    const auto est = chunked_estimate(
        20000, derive_seed(0x5eedc4ecULL, static_cast<std::uint64_t>(check)),
        [&](Rng& r) {
          State y;
          sample_transition_into(process, x, t, r, y);
          return eigen_eval(g, y);
        },
        false);
    const double expected = std::exp(nu * t) * eigen_eval(g, x);
    const double z = est.se > 0.0 ? (est.mean - expected) / est.se : 0.0;
    if (std::fabs(z) > 5.0) {
      char buf[160];
      std::snprintf(buf, sizeof(buf),
                    "eigenfunction spot check failed: |z| = %.2f at t = %.3f "
                    "(mc %.6g vs %.6g)",
                    std::fabs(z), t, est.mean, expected);
      throw std::invalid_argument(buf);
    }
  }
}

/// The shipped weight family satisfies f(t, u-s) <= f(t-s, u) identically;
/// sampled verification guards any future weight against silent violation.
void spot_check_weight_inequality(const WeightFunc& w) {
  Rng rng(0x7e167e16ULL);
  for (int i = 0; i < 64; ++i) {
    const double t = 0.1 + 5.0 * rng.uniform();
    const double s = t * rng.uniform();
    const double u = s + 5.0 * rng.uniform();
    const double lhs = weight_eval(w, t, u - s);
    const double rhs = weight_eval(w, t - s, u);
    if (lhs > rhs * (1.0 + 1e-12)) {
      throw std::invalid_argument("weighted kernel: weight violates f(t,u-s) <= f(t-s,u)");
    }
  }
}

bool is_propagation_family(const KernelSpec& k) {
  return std::holds_alternative<LevyDensityKernel>(k.v) ||
         std::holds_alternative<ExpectationKernel>(k.v) ||
         std::holds_alternative<AffineCirKernel>(k.v) ||
         std::holds_alternative<EigenKernel>(k.v);
}

ProcessSpec kernel_driver(const KernelSpec& k) {
  return std::visit(
      [](const auto& fam) -> ProcessSpec {
        using T = std::decay_t<decltype(fam)>;
        if constexpr (std::is_same_v<T, LevyDensityKernel>) {
          return mirrored(fam.process);
        } else if constexpr (std::is_same_v<T, WeightedKernel>) {
          return kernel_driver(*fam.base);
        } else if constexpr (std::is_same_v<T, TraceKernel>) {
          return trace_driver(fam.u);
        } else {
          return fam.process;
        }
      },
      k.v);
}

void validate_kernel(const KernelSpec& k) {
  std::visit(
      [&](const auto& fam) {
        using T = std::decay_t<decltype(fam)>;
        if constexpr (std::is_same_v<T, LevyDensityKernel>) {
          validate(fam.process);
          require(is_levy(fam.process),
                  "levy_density kernel: driver must have independent increments");
          require(std::holds_alternative<BrownianDrift>(fam.process) ||
                      std::holds_alternative<CauchyProcess>(fam.process),
                  "levy_density kernel: needs a closed-form density (brownian or cauchy)");
        } else if constexpr (std::is_same_v<T, ExpectationKernel>) {
          validate(fam.process);
          if (const auto* c = std::get_if<ConstantH>(&fam.h)) {
            require(c->value > 0.0, "expectation kernel: constant h must be positive");
          } else {
            const auto& b = std::get<GaussBumpH>(fam.h);
            require(b.alpha > 0.0, "expectation kernel: alpha must be positive");
            require(dim(fam.process) == 1,
                    "expectation kernel: the quadratic bump h is one-dimensional");
          }
          if (fam.estimator == Estimator::closed_form &&
              std::holds_alternative<GaussBumpH>(fam.h)) {
            require(std::holds_alternative<BrownianDrift>(fam.process) ||
                        std::holds_alternative<OrnsteinUhlenbeck>(fam.process),
                    "expectation kernel: closed form needs a Gaussian-step driver "
                    "(brownian or ou); use the quadrature or mc estimator instead");
          }
          if (fam.estimator == Estimator::quadrature) {
            require(dim(fam.process) == 1,
                    "expectation kernel: quadrature estimator is one-dimensional");
            require(std::holds_alternative<BrownianDrift>(fam.process) ||
                        std::holds_alternative<OrnsteinUhlenbeck>(fam.process) ||
                        std::holds_alternative<CauchyProcess>(fam.process),
                    "expectation kernel: quadrature needs a closed-form density");
          }
          require(fam.mc_n >= 2, "expectation kernel: mc_n must be at least 2");
        } else if constexpr (std::is_same_v<T, AffineCirKernel>) {
          validate(ProcessSpec{fam.process});
          require(!fam.a.empty(), "affine_cir kernel: needs at least one term");
          require(fam.a.size() == fam.mu.size(),
                  "affine_cir kernel: a and mu must have equal length");
          for (double a : fam.a) require(a > 0.0, "affine_cir kernel: weights must be positive");
          for (double mu : fam.mu) {
            require(mu <= 0.0, "affine_cir kernel: exponents must be nonpositive");
          }
        } else if constexpr (std::is_same_v<T, EigenKernel>) {
          validate(fam.process);
          const double nu = eigen_rate(fam.g, fam.process);
          if (!(nu < 0.0)) {
            char buf[128];
            std::snprintf(buf, sizeof(buf),
                          "eigen kernel: rate must be negative, got %.6g "
                          "(needs <c,kappa> > |c|^2/2 for the drifted Brownian driver)",
                          nu);
            throw std::invalid_argument(buf);
          }
        } else if constexpr (std::is_same_v<T, EigenSumKernel>) {
          validate(fam.process);
          require(!fam.terms.empty(), "eigen_sum kernel: needs at least one term");
          for (const auto& term : fam.terms) {
            require(term.weight > 0.0, "eigen_sum kernel: weights must be positive");
            require(term.decay >= 0.0, "eigen_sum kernel: decays must be nonnegative");
            const double nu = eigen_rate(term.g, fam.process);
            require(nu < 0.0, "eigen_sum kernel: every eigenfunction rate must be negative");
          }
        } else if constexpr (std::is_same_v<T, WeightedKernel>) {
          require(fam.base != nullptr, "weighted kernel: base kernel missing");
          validate_kernel(*fam.base);
          require(is_propagation_family(*fam.base),
                  "weighted kernel: base must be a plain propagation kernel "
                  "(levy_density, expectation, affine_cir, or eigen)");
          require(exactly_evaluable(*fam.base),
                  "weighted kernel: base must be exactly evaluable under the integral");
          const auto& e = std::get<ExpWeight>(fam.weight);
          require(e.alpha > 0.0, "weighted kernel: alpha must be positive");
        } else if constexpr (std::is_same_v<T, KilledKernel>) {
          validate(fam.process);
          if (const auto* c = std::get_if<ConstantPotential>(&fam.v)) {
            require(c->r >= 0.0, "killed kernel: potential must be nonnegative");
          }
          if (fam.estimator == Estimator::closed_form) {
            const bool const_ok = std::holds_alternative<ConstantPotential>(fam.v);
            const bool cir_ok = std::holds_alternative<IdentityPotential>(fam.v) &&
                                std::holds_alternative<CoxIngersollRoss>(fam.process);
            require(const_ok || cir_ok,
                    "killed kernel: closed form needs a constant potential or the "
                    "square-root diffusion with the identity potential");
          }
          require(fam.estimator != Estimator::quadrature,
                  "killed kernel: estimators are closed_form or monte_carlo");
          require(fam.grid_step > 0.0, "killed kernel: grid_step must be positive");
          require(fam.mc_n >= 2, "killed kernel: mc_n must be at least 2");
          if (std::holds_alternative<IdentityPotential>(fam.v)) {
            require(dim(fam.process) == 1, "killed kernel: identity potential is scalar");
          }
        } else if constexpr (std::is_same_v<T, TraceKernel>) {
          validate_trace_family(fam.u);
          require(fam.lambda > 0.0, "trace kernel: lambda must be positive");
          require(fam.c > 2.0, "trace kernel: c must be greater than 2");
          if (const auto* vg = std::get_if<VarianceGammaU>(&fam.u)) {
            if (!(vg->eta * fam.lambda > 0.5)) {
              char buf[160];
              std::snprintf(buf, sizeof(buf),
                            "trace kernel: eta*lambda must exceed 1/2 so u(lambda+t, 0) "
                            "stays finite, got %.6g",
                            vg->eta * fam.lambda);
              throw std::invalid_argument(buf);
            }
          }
        }
      },
      k.v);
}

}  // namespace

double eigen_eval(const EigenFunc& g, const State& x) {
  if (const auto* e = std::get_if<ExpLinearEigen>(&g)) {
    double dot = 0.0;
    for (std::size_t i = 0; i < e->c.size(); ++i) dot += e->c[i] * x[i];
    return std::exp(dot);
  }
  const auto& q = std::get<SquaredExpEigen>(g);
  return std::exp(q.mu * x[0] * x[0]);
}

double eigen_rate(const EigenFunc& g, const ProcessSpec& process) {
  if (const auto* e = std::get_if<ExpLinearEigen>(&g)) {
    const auto* bm = std::get_if<BrownianDrift>(&process);
    if (bm == nullptr || bm->kappa.size() != e->c.size()) {
      throw std::invalid_argument(
          "eigen kernel: exp-linear g pairs with the drifted Brownian driver of "
          "matching dimension");
    }
    double c2 = 0.0;
    double ck = 0.0;
    for (std::size_t i = 0; i < e->c.size(); ++i) {
      c2 += e->c[i] * e->c[i];
      ck += e->c[i] * bm->kappa[i];
    }
    return 0.5 * c2 - ck;
  }
  const auto& q = std::get<SquaredExpEigen>(g);
  const auto* ou = std::get_if<OrnsteinUhlenbeck>(&process);
  if (ou == nullptr || ou->dim != 1) {
    throw std::invalid_argument(
        "eigen kernel: squared-exponential g pairs with the scalar OU driver");
  }
  if (q.mu != ou->mu_speed) {
    throw std::invalid_argument(
        "eigen kernel: squared-exponential g needs mu equal to the OU mu_speed");
  }
  if (!(q.mu < 0.0)) {
    throw std::invalid_argument("eigen kernel: squared-exponential mu must be negative");
  }
  return q.mu;
}

double trace_u(const TraceFamily& fam, double t, double x) {
  if (!(t > 0.0)) throw std::invalid_argument("trace kernel: u needs t > 0");
  return std::visit(
      [&](const auto& u) -> double {
        using T = std::decay_t<decltype(u)>;
        if constexpr (std::is_same_v<T, GaussHeatU>) {
          return std::exp(-0.5 * x * x / t) / std::sqrt(2.0 * kPi * t);
        } else if constexpr (std::is_same_v<T, QuadGaussU>) {
          const double a2 = u.alpha * u.alpha;
          const double den = t * a2 + 1.0;
          return std::exp(-0.5 * a2 * x * x / den) / std::sqrt(den);
        } else if constexpr (std::is_same_v<T, CauchySymU>) {
          const double ct = u.theta * t;
          return ct / (kPi * (ct * ct + x * x));
        } else if constexpr (std::is_same_v<T, VarianceGammaU>) {
          if (x == 0.0) return trace_u0(fam, t);
          const double nt = u.eta * t;
          const double ax = std::fabs(x);
          // Gamma-subordinated Gaussian density, written through K_{nt - 1/2};
          // log space keeps deep tails from underflowing the Bessel factor.
          const double log_u = 0.5 * std::log(2.0 / kPi) - std::lgamma(nt) +
                               (0.5 * nt + 0.25) * std::log(u.gamma) +
                               (0.25 - 0.5 * nt) * std::log(2.0) +
                               (nt - 0.5) * std::log(ax) +
                               log_bessel_k(nt - 0.5, ax * std::sqrt(2.0 * u.gamma));
          return std::exp(log_u);
        } else {
          const double nt = u.eta * t;
          const double b = 0.5 * x * x + kPi * nt * nt;
          const double arg = 2.0 * std::sqrt(u.gamma * b);
          // Inverse-Gaussian-subordinated Gaussian density: the e^{2 eta t
          // sqrt(pi gamma)} factor and K_1 nearly cancel, so combine in logs.
          const double log_u = std::log(nt) + 0.5 * std::log(2.0 * u.gamma / kPi) +
                               2.0 * nt * std::sqrt(kPi * u.gamma) + log_bessel_k(1.0, arg) -
                               0.5 * std::log(b);
          return std::exp(log_u);
        }
      },
      fam);
}

double trace_u0(const TraceFamily& fam, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("trace kernel: u needs t > 0");
  return std::visit(
      [&](const auto& u) -> double {
        using T = std::decay_t<decltype(u)>;
        if constexpr (std::is_same_v<T, GaussHeatU>) {
          return 1.0 / std::sqrt(2.0 * kPi * t);
        } else if constexpr (std::is_same_v<T, QuadGaussU>) {
          return 1.0 / std::sqrt(t * u.alpha * u.alpha + 1.0);
        } else if constexpr (std::is_same_v<T, CauchySymU>) {
          return 1.0 / (kPi * u.theta * t);
        } else if constexpr (std::is_same_v<T, VarianceGammaU>) {
          const double nt = u.eta * t;
          if (!(nt > 0.5)) {
            throw std::domain_error(
                "trace kernel: u(t, 0) is finite only for eta * t > 1/2");
          }
          return std::sqrt(u.gamma / (2.0 * kPi)) *
                 std::exp(std::lgamma(nt - 0.5) - std::lgamma(nt));
        } else {
          const double nt = u.eta * t;
          const double arg = 2.0 * nt * std::sqrt(kPi * u.gamma);
          return std::exp(0.5 * std::log(2.0 * u.gamma) - std::log(kPi) + arg +
                          log_bessel_k(1.0, arg));
        }
      },
      fam);
}

double eval(const KernelSpec& k, double t, const State& x) {
  return std::visit(
      [&](const auto& fam) -> double {
        using T = std::decay_t<decltype(fam)>;
        if constexpr (std::is_same_v<T, LevyDensityKernel>) {
          return transition_density(fam.process, t, zero_state(dim(fam.process)), x);
        } else if constexpr (std::is_same_v<T, ExpectationKernel>) {
          switch (fam.estimator) {
            case Estimator::closed_form:
              return expectation_closed(fam, t, x);
            case Estimator::quadrature:
              return expectation_quadrature(fam, t, x);
            case Estimator::monte_carlo:
              throw std::invalid_argument(
                  "expectation kernel: configured for sampling; use eval_mc");
          }
          throw std::logic_error("expectation kernel: unknown estimator");
        } else if constexpr (std::is_same_v<T, AffineCirKernel>) {
          double sum = 0.0;
          for (std::size_t i = 0; i < fam.a.size(); ++i) {
            sum += fam.a[i] * cir_exp_transform(fam.process, fam.mu[i], t, x[0]);
          }
          return sum;
        } else if constexpr (std::is_same_v<T, EigenKernel>) {
          const double nu = eigen_rate(fam.g, fam.process);
          return 1.0 + std::exp(nu * t) * eigen_eval(fam.g, x);
        } else if constexpr (std::is_same_v<T, EigenSumKernel>) {
          double sum = 0.0;
          for (const auto& term : fam.terms) {
            sum += term.weight * std::exp(-term.decay * t) * eigen_eval(term.g, x);
          }
          return sum;
        } else if constexpr (std::is_same_v<T, WeightedKernel>) {
          const auto result = weighted_eval(fam, t, x);
          if (!result.converged) {
            throw std::runtime_error("weighted kernel: quadrature did not converge");
          }
          return result.value;
        } else if constexpr (std::is_same_v<T, KilledKernel>) {
          if (fam.estimator == Estimator::monte_carlo) {
            throw std::invalid_argument(
                "killed kernel: configured for sampling; use eval_mc");
          }
          return killed_eval_closed(fam, t, x);
        } else {
          return trace_u(fam.u, fam.lambda + t, x[0]) +
                 fam.c * trace_u0(fam.u, fam.lambda + t);
        }
      },
      k.v);
}

bool exactly_evaluable(const KernelSpec& k) {
  if (const auto* e = std::get_if<ExpectationKernel>(&k.v)) {
    return e->estimator != Estimator::monte_carlo;
  }
  if (const auto* kd = std::get_if<KilledKernel>(&k.v)) {
    return kd->estimator != Estimator::monte_carlo;
  }
  return true;
}

MCEstimate eval_mc(const KernelSpec& k, double t, const State& x, std::int64_t n,
                   std::uint64_t seed) {
  if (const auto* e = std::get_if<ExpectationKernel>(&k.v)) {
    if (t == 0.0) return MCEstimate{h_eval(e->h, x), 0.0, n, seed};
    return chunked_estimate(n, seed, [&](Rng& r) {
      State y;
      sample_transition_into(e->process, x, t, r, y);
      return h_eval(e->h, y);
    });
  }
  if (const auto* kd = std::get_if<KilledKernel>(&k.v)) {
    return killed_eval_mc(*kd, t, x, n, seed);
  }
  throw std::invalid_argument("eval_mc: kernel family has no sampling estimator");
}

QuadResult weighted_eval(const WeightedKernel& k, double t, const State& x) {
  const KernelSpec& base = *k.base;
  return integrate(
      [&](double s) { return eval(base, s, x) * weight_eval(k.weight, t, s); }, 0.0,
      std::numeric_limits<double>::infinity(), k.quad);
}

double killed_eval_closed(const KilledKernel& k, double t, const State& x) {
  if (const auto* c = std::get_if<ConstantPotential>(&k.v)) return std::exp(-c->r * t);
  const auto* cir = std::get_if<CoxIngersollRoss>(&k.process);
  if (cir == nullptr) {
    throw std::invalid_argument(
        "killed kernel: identity-potential closed form needs the square-root diffusion");
  }
  return cir_killed_closed(*cir, t, x[0]);
}

MCEstimate killed_eval_mc(const KilledKernel& k, double t, const State& x, std::int64_t n,
                          std::uint64_t seed) {
  if (t == 0.0) return MCEstimate{1.0, 0.0, n, seed};
  const int steps = std::max<int>(1, static_cast<int>(std::ceil(t / k.grid_step)));
  const double dt = t / steps;
  return chunked_estimate(n, seed, [&](Rng& r) {
    State y = x;
    State next;
    double acc = 0.0;
    double v_prev = potential_eval(k.v, y);
    for (int i = 0; i < steps; ++i) {
      sample_transition_into(k.process, y, dt, r, next);
      const double v_next = potential_eval(k.v, next);
      acc += 0.5 * (v_prev + v_next) * dt;
      y = next;
      v_prev = v_next;
    }
    return std::exp(-acc);
  });
}

Model make_model(KernelSpec kernel, State x0) {
  validate_kernel(kernel);
  if (const auto* e = std::get_if<EigenKernel>(&kernel.v)) {
    spot_check_eigenfunction(e->g, e->process);
  }
  if (const auto* es = std::get_if<EigenSumKernel>(&kernel.v)) {
    for (const auto& term : es->terms) spot_check_eigenfunction(term.g, es->process);
  }
  if (const auto* w = std::get_if<WeightedKernel>(&kernel.v)) {
    spot_check_weight_inequality(w->weight);
  }
  Model m;
  m.driver = kernel_driver(kernel);
  m.trace_mode = std::holds_alternative<TraceKernel>(kernel.v);
  m.kernel = std::move(kernel);
  if (static_cast<int>(x0.size()) != dim(m.driver)) {
    char buf[128];
    std::snprintf(buf, sizeof(buf),
                  "model: x0 has %d components but the %s driver has dimension %d",
                  static_cast<int>(x0.size()), process_name(m.driver), dim(m.driver));
    throw std::invalid_argument(buf);
  }
  if (std::holds_alternative<CoxIngersollRoss>(m.driver) && x0[0] < 0.0) {
    throw std::invalid_argument("model: the square-root driver needs x0 >= 0");
  }
  m.x0 = std::move(x0);
  return m;
}

double spd_value(const Model& m, double t, const State& x,
                 std::optional<double> accumulated_potential) {
  if (std::holds_alternative<KilledKernel>(m.kernel.v)) {
    if (!accumulated_potential.has_value()) {
      throw std::invalid_argument(
          "state price density of a killed kernel needs the accumulated potential "
          "integral along the path");
    }
    return eval(m.kernel, t, x) * std::exp(-*accumulated_potential);
  }
  return eval(m.kernel, t, x);
}

double conditional_spd(const Model& m, double t, double T, const State& x,
                       double accumulated_potential) {
  if (!(T >= t)) throw std::invalid_argument("conditional_spd: needs T >= t");
  return std::visit(
      [&](const auto& fam) -> double {
        using T_ = std::decay_t<decltype(fam)>;
        if constexpr (std::is_same_v<T_, EigenSumKernel>) {
          double sum = 0.0;
          for (const auto& term : fam.terms) {
            const double nu = eigen_rate(term.g, fam.process);
            sum += term.weight * std::exp(-term.decay * T) * std::exp(nu * (T - t)) *
                   eigen_eval(term.g, x);
          }
          return sum;
        } else if constexpr (std::is_same_v<T_, WeightedKernel>) {
          const double s = T - t;
          const auto result = integrate(
              [&](double v) {
                return eval(*fam.base, v, x) * weight_eval(fam.weight, T, v - s);
              },
              s, std::numeric_limits<double>::infinity(), fam.quad);
          if (!result.converged) {
            throw std::runtime_error("weighted kernel: conditional quadrature did not converge");
          }
          return result.value;
        } else if constexpr (std::is_same_v<T_, KilledKernel>) {
          if (fam.estimator == Estimator::monte_carlo) {
            throw std::invalid_argument(
                "killed kernel: closed conditional needs the closed-form estimator");
          }
          return std::exp(-accumulated_potential) *
                 killed_eval_closed(fam, 2.0 * T - t, x);
        } else if constexpr (std::is_same_v<T_, TraceKernel>) {
          return trace_u(fam.u, fam.lambda + 2.0 * T - t, x[0]) +
                 fam.c * trace_u0(fam.u, fam.lambda + T);
        } else {
          // Propagation families: E[p(T, X_T) | X_t = x] = p(T + (T - t), x).
          return eval(m.kernel, 2.0 * T - t, x);
        }
      },
      m.kernel.v);
}

PropagationCheck check_propagation(const KernelSpec& k, const ProcessSpec& driver, double t,
                                   double s, const State& x, std::int64_t n,
                                   std::uint64_t seed) {
  // For the trace construction the propagating object is the symmetric kernel
  // u itself; the shifted-plus-constant state price kernel is only a
  // supermartingale.
  std::function<double(double, const State&)> p;
  if (const auto* tr = std::get_if<TraceKernel>(&k.v)) {
    p = [tr](double tt, const State& y) { return trace_u(tr->u, tt, y[0]); };
  } else {
    p = [&k](double tt, const State& y) { return eval(k, tt, y); };
  }
  PropagationCheck check;
  check.lhs = chunked_estimate(n, seed, [&](Rng& r) {
    State y;
    sample_transition_into(driver, x, s, r, y);
    return p(t, y);
  });
  check.rhs = p(t + s, x);
  const double diff = check.lhs.mean - check.rhs;
  check.z = diff == 0.0 ? 0.0 : diff / check.lhs.se;
  return check;
}

}  // namespace hka
