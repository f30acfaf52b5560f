#include "hka/pricing.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "hka/specfun.hpp"

namespace hka {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

void require_exact(const Model& m, const char* who) {
  if (!exactly_evaluable(m.kernel)) {
    throw std::invalid_argument(std::string(who) +
                                ": kernel is configured for sampling; use the closed_form "
                                "or quadrature estimator for pricing");
  }
}

/// Accrual-weighted sum of conditional state price densities over the payment
/// dates, as seen from the option maturity.
double coupon_leg(const Model& m, const TenorStructure& tenor, const State& y) {
  double sum = 0.0;
  for (std::size_t i = 1; i < tenor.dates.size(); ++i) {
    const double tau = tenor.dates[i] - tenor.dates[i - 1];
    sum += tau * conditional_spd(m, tenor.maturity(), tenor.dates[i], y);
  }
  return sum;
}

/// Killed-kernel simulations carry the accumulated potential along the path;
/// every other family needs only one exact transition to the horizon.
template <class Fn>
MCEstimate simulate_at_horizon(const Model& m, const State& x, double span, std::int64_t n,
                               std::uint64_t seed, Fn&& value) {
  if (const auto* killed = std::get_if<KilledKernel>(&m.kernel.v)) {
    const int steps =
        span > 0.0 ? std::max<int>(1, static_cast<int>(std::ceil(span / killed->grid_step)))
                   : 0;
    const double dt = steps > 0 ? span / steps : 0.0;
    const Potential& pot = killed->v;
    return chunked_estimate(n, seed, [&, steps, dt](Rng& r) {
      State y = x;
      State next;
      double acc = 0.0;
      double v_prev = std::holds_alternative<ConstantPotential>(pot)
                          ? std::get<ConstantPotential>(pot).r
                          : y[0];
      for (int i = 0; i < steps; ++i) {
        sample_transition_into(m.driver, y, dt, r, next);
        const double v_next = std::holds_alternative<ConstantPotential>(pot)
                                  ? std::get<ConstantPotential>(pot).r
                                  : next[0];
        acc += 0.5 * (v_prev + v_next) * dt;
        y = next;
        v_prev = v_next;
      }
      return value(y, acc);
    });
  }
  return chunked_estimate(n, seed, [&](Rng& r) {
    State y;
    sample_transition_into(m.driver, x, span, r, y);
    return value(y, 0.0);
  });
}

}  // namespace

TenorStructure make_tenor(std::vector<double> dates) {
  require(dates.size() >= 2, "tenor: needs the option maturity and at least one payment");
  require(dates.front() > 0.0, "tenor: dates must be positive");
  for (std::size_t i = 1; i < dates.size(); ++i) {
    require(dates[i] > dates[i - 1], "tenor: dates must be strictly increasing");
  }
  TenorStructure t;
  t.dates = std::move(dates);
  return t;
}

TenorStructure make_tenor(double t_alpha, double t_beta, double period) {
  require(period > 0.0, "tenor: period must be positive");
  require(t_beta > t_alpha, "tenor: needs t_beta > t_alpha");
  std::vector<double> dates;
  dates.push_back(t_alpha);
  // Fixed count keeps the terminal date exact instead of accumulating steps.
  const int payments = static_cast<int>(std::lround((t_beta - t_alpha) / period));
  require(payments >= 1 && std::fabs(t_alpha + payments * period - t_beta) < 1e-9,
          "tenor: span must be a whole number of periods");
  for (int i = 1; i <= payments; ++i) dates.push_back(t_alpha + i * period);
  dates.back() = t_beta;
  return make_tenor(std::move(dates));
}

double bond_price(const Model& m, double t, double T, const State& x) {
  require(T >= t && t >= 0.0, "bond_price: needs 0 <= t <= T");
  require_exact(m, "bond_price");
  // For killed kernels the path factor e^{-int V} is common to numerator and
  // denominator, so the bond is the plain ratio of killed-kernel values.
  return conditional_spd(m, t, T, x) / eval(m.kernel, t, x);
}

DiscountCurve initial_curve(const Model& m, const std::vector<double>& maturities) {
  require(!maturities.empty(), "initial_curve: needs at least one maturity");
  DiscountCurve curve;
  for (std::size_t i = 0; i < maturities.size(); ++i) {
    require(maturities[i] > 0.0, "initial_curve: maturities must be positive");
    require(i == 0 || maturities[i] > maturities[i - 1],
            "initial_curve: maturities must be strictly increasing");
    curve.maturities.push_back(maturities[i]);
    curve.discounts.push_back(bond_price(m, 0.0, maturities[i], m.x0));
  }
  return curve;
}

double zero_yield(const Model& m, double t, double tenor, const State& x) {
  require(tenor > 0.0, "zero_yield: tenor must be positive");
  return -std::log(bond_price(m, t, t + tenor, x)) / tenor;
}

double short_rate(const Model& m, double t, const State& x) {
  require_exact(m, "short_rate");
  const double h = 1e-5;
  if (!(t > h)) {
    throw std::invalid_argument("short_rate: t is too close to the domain boundary");
  }
  const auto deriv = [&](double step) {
    return (eval(m.kernel, t + step, x) - eval(m.kernel, t - step, x)) / (2.0 * step);
  };
  const double d = (4.0 * deriv(0.5 * h) - deriv(h)) / 3.0;
  return -d / eval(m.kernel, t, x);
}

double swap_rate(const Model& m, double t, const State& x, const TenorStructure& tenor) {
  require(t <= tenor.maturity(), "swap_rate: needs t <= the option maturity");
  double annuity = 0.0;
  for (std::size_t i = 1; i < tenor.dates.size(); ++i) {
    const double tau = tenor.dates[i] - tenor.dates[i - 1];
    annuity += tau * bond_price(m, t, tenor.dates[i], x);
  }
  return (bond_price(m, t, tenor.maturity(), x) - bond_price(m, t, tenor.terminal(), x)) /
         annuity;
}

MCEstimate swaption_price_mc(const Model& m, const SwaptionSpec& spec, double t,
                             const State& x, std::int64_t n, std::uint64_t seed) {
  require(spec.strike >= 0.0, "swaption: strike must be nonnegative");
  require(t >= 0.0 && t <= spec.tenor.maturity(), "swaption: needs 0 <= t <= maturity");
  require_exact(m, "swaption_price_mc");
  const double t_alpha = spec.tenor.maturity();
  const double denom = eval(m.kernel, t, x);
  return simulate_at_horizon(
      m, x, t_alpha - t, n, seed, [&](const State& y, double acc) {
        double v = eval(m.kernel, t_alpha, y) -
                   conditional_spd(m, t_alpha, spec.tenor.terminal(), y) -
                   spec.strike * coupon_leg(m, spec.tenor, y);
        if (v < 0.0) v = 0.0;
        return std::exp(-acc) * v / denom;
      });
}

double swaption_eigen_closed(const Model& m, const SwaptionSpec& spec, double t,
                             const State& x) {
  const auto* eig = std::get_if<EigenKernel>(&m.kernel.v);
  if (eig == nullptr) {
    throw std::invalid_argument("swaption_eigen_closed: model kernel is not an eigen kernel");
  }
  require(spec.strike >= 0.0, "swaption: strike must be nonnegative");
  require(t >= 0.0 && t <= spec.tenor.maturity(), "swaption: needs 0 <= t <= maturity");
  const double nu = eigen_rate(eig->g, eig->process);
  const double t_alpha = spec.tenor.maturity();
  const double t_beta = spec.tenor.terminal();

  // The payoff {p(T_a, Y) - p(2 T_b - T_a, Y) - K sum tau_i p(2 T_i - T_a, Y)}^+
  // with p(t, y) = 1 + e^{nu t} g(y) collapses to {A g(Y) - B}^+: the constant
  // parts telescope into B = K (T_b - T_a) and the e^{nu .} coefficients
  // collect into A.
  double coupon = 0.0;
  double b_const = 0.0;
  for (std::size_t i = 1; i < spec.tenor.dates.size(); ++i) {
    const double tau = spec.tenor.dates[i] - spec.tenor.dates[i - 1];
    coupon += tau * std::exp(nu * (2.0 * spec.tenor.dates[i] - t_alpha));
    b_const += tau;
  }
  const double a_const = std::exp(nu * t_alpha) - std::exp(nu * (2.0 * t_beta - t_alpha)) -
                         spec.strike * coupon;
  const double b = spec.strike * b_const;
  const double denom = eval(m.kernel, t, x);
  if (a_const <= 0.0) return 0.0;  // payoff never positive: g > 0, B >= 0
  const double s = t_alpha - t;

  if (const auto* g = std::get_if<ExpLinearEigen>(&eig->g)) {
    const auto& bm = std::get<BrownianDrift>(eig->process);
    double c2 = 0.0;
    double ck = 0.0;
    double cx = 0.0;
    for (std::size_t i = 0; i < g->c.size(); ++i) {
      c2 += g->c[i] * g->c[i];
      ck += g->c[i] * bm.kappa[i];
      cx += g->c[i] * x[i];
    }
    // <c, Y> over the drifted Brownian step is Gaussian with mean
    // <c, x> - <c, kappa> s and variance |c|^2 s.
    return bs_integral(a_const * std::exp(cx), b, std::sqrt(c2 * s), -ck * s) / denom;
  }

  const auto& g = std::get<SquaredExpEigen>(eig->g);
  const auto& ou = std::get<OrnsteinUhlenbeck>(eig->process);
  if (s == 0.0) {
    const double intrinsic = a_const * eigen_eval(eig->g, x) - b;
    return intrinsic > 0.0 ? intrinsic / denom : 0.0;
  }
  const double mean = ou_conditional_mean(ou, x[0], s);
  const double var = ou_conditional_variance(ou, s);
  if (b == 0.0) {
    return a_const *
           gaussian_quadratic_integral(mean, var, g.mu,
                                       -std::numeric_limits<double>::infinity(),
                                       std::numeric_limits<double>::infinity()) /
           denom;
  }
  // g(y) = e^{mu y^2} <= 1, so with B >= A the payoff cannot be positive;
  // otherwise it is positive exactly on |Y| < bound.
  if (b >= a_const) return 0.0;
  const double bound = std::sqrt(std::log(b / a_const) / g.mu);
  const double sd = std::sqrt(var);
  const double prob = std_normal_cdf((bound - mean) / sd) - std_normal_cdf((-bound - mean) / sd);
  const double gauss = gaussian_quadratic_integral(mean, var, g.mu, -bound, bound);
  const double value = a_const * gauss - b * prob;
  return value > 0.0 ? value / denom : 0.0;
}

MCEstimate derivative_price(const Model& m, const std::function<double(double)>& payoff,
                            double t, double T, std::int64_t n, std::uint64_t seed) {
  require(0.0 < t && t <= T, "derivative_price: needs 0 < t <= T");
  require_exact(m, "derivative_price");
  const double denom = eval(m.kernel, 0.0, m.x0);
  return simulate_at_horizon(m, m.x0, t, n, seed, [&](const State& y, double acc) {
    const double spd_t = eval(m.kernel, t, y);
    return std::exp(-acc) * spd_t * payoff(conditional_spd(m, t, T, y) / spd_t) / denom;
  });
}

}  // namespace hka
