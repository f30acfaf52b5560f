#include "hka/specfun.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace hka {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

double phi_density(double x) {
  return 0.39894228040143267794 * std::exp(-0.5 * x * x);
}

}  // namespace

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double inv_std_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("inv_std_normal_cdf: p must lie in (0,1)");
  // Acklam's rational approximation, then one Halley refinement against the
  // erfc-based distribution function.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = std_normal_cdf(x) - p;
  const double u = e / phi_density(x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

double bs_integral(double a, double b, double c, double d) {
  if (a < 0.0 || b < 0.0) throw std::invalid_argument("bs_integral: a and b must be nonnegative");
  if (a == 0.0) return 0.0;
  if (b == 0.0) return a * std::exp(d + 0.5 * c * c);
  if (c == 0.0) {
    const double v = a * std::exp(d) - b;
    return v > 0.0 ? v : 0.0;
  }
  const double z = (std::log(b / a) - d) / c;
  const double lead = a * std::exp(d + 0.5 * c * c);
  if (c > 0.0) return lead * std_normal_cdf(c - z) - b * std_normal_cdf(-z);
  return lead * std_normal_cdf(z - c) - b * std_normal_cdf(z);
}

double bessel_k(double p, double x) {
  if (!(x > 0.0)) throw std::domain_error("bessel_k: x must be positive");
  const double v = std::cyl_bessel_k(std::fabs(p), x);
  if (std::isinf(v)) {
    throw std::overflow_error("bessel_k: K_" + std::to_string(p) + "(" + std::to_string(x) +
                              ") exceeds the double exponent range");
  }
  return v;
}

double log_bessel_k(double p, double x) {
  if (!(x > 0.0)) throw std::domain_error("log_bessel_k: x must be positive");
  const double ap = std::fabs(p);
  const double v = std::cyl_bessel_k(ap, x);
  if (v > 0.0 && std::isfinite(v)) return std::log(v);
  if (std::isinf(v) || v == 0.0) {
    if (x >= 1.0) {
      // Underflow regime: leading large-argument expansion.
      const double mu = 4.0 * ap * ap;
      const double corr = 1.0 + (mu - 1.0) / (8.0 * x) + (mu - 1.0) * (mu - 9.0) / (128.0 * x * x);
      return -x + 0.5 * (std::log(3.14159265358979323846 / 2.0) - std::log(x)) + std::log(corr);
    }
    // Overflow regime (small x, large order): K_p(x) ~ Gamma(p)/2 * (2/x)^p.
    return -0.69314718055994530942 + std::lgamma(ap) + ap * std::log(2.0 / x);
  }
  throw std::runtime_error("log_bessel_k: evaluation failed");
}

double gaussian_quadratic_integral(double m, double v, double mu, double a, double b) {
  if (!(v > 0.0)) throw std::invalid_argument("gaussian_quadratic_integral: v must be positive");
  if (mu > 0.0) throw std::invalid_argument("gaussian_quadratic_integral: mu must be nonpositive");
  if (a > b) throw std::invalid_argument("gaussian_quadratic_integral: requires a <= b");
  const double s = std::sqrt(v);
  if (mu == 0.0) return std_normal_cdf((b - m) / s) - std_normal_cdf((a - m) / s);
  const double den = 1.0 - 2.0 * mu * v;  // > 1
  const double mt = m / den;
  const double vt = v / den;
  const double st = std::sqrt(vt);
  const double scale = std::exp(mu * m * m / den) / std::sqrt(den);
  return scale * (std_normal_cdf((b - mt) / st) - std_normal_cdf((a - mt) / st));
}

}  // namespace hka
