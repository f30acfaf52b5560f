#pragma once

namespace hka {

/// Standard normal distribution function, accurate to full double precision
/// across the whole axis (implemented through the complementary error
/// function, so the tails do not lose relative accuracy at moderate |x|).
double std_normal_cdf(double x);

/// Inverse of std_normal_cdf on (0,1); rational initial guess polished with
/// one Halley step.  Used for z thresholds of statistical test suites.
double inv_std_normal_cdf(double p);

/// E[(a e^{c Z + d} - b)^+] for Z standard normal, in closed form:
/// a e^{d + c^2/2} Phi(c - z) - b Phi(-z) with z = (log(b/a) - d)/c for c > 0,
/// and the mirrored expression for c < 0.  Requires a >= 0 and b >= 0; the
/// degenerate cases (a = 0, b = 0, or c = 0) reduce to elementary limits and
/// are returned exactly.
double bs_integral(double a, double b, double c, double d);

/// Modified Bessel function of the second kind K_p(x) for real order p and
/// x > 0; symmetric in the order, K_p = K_{-p}.  Overflow (x too small for
/// the order's growth) is signalled with std::overflow_error rather than
/// returned as infinity; results below the smallest normal double underflow
/// to zero silently.
double bessel_k(double p, double x);

/// log K_p(x), finite also where K_p(x) itself overflows or underflows a
/// double (asymptotic forms take over outside the representable range).
double log_bessel_k(double p, double x);

/// Integral of e^{mu x^2} against the normal density N(m, v) over [a, b]
/// (either bound may be infinite):
///   (1 - 2 mu v)^{-1/2} e^{mu m^2/(1 - 2 mu v)}
///     * [Phi((b - m~)/sqrt(v~)) - Phi((a - m~)/sqrt(v~))]
/// with m~ = m/(1 - 2 mu v), v~ = v/(1 - 2 mu v).  Requires v > 0, mu <= 0
/// and a <= b; mu = 0 degrades to the plain normal probability of [a, b].
double gaussian_quadratic_integral(double m, double v, double mu, double a, double b);

}  // namespace hka
