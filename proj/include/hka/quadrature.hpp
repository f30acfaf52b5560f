#pragma once

#include <functional>

namespace hka {

/// Tolerances and limits for adaptive integration.
struct QuadratureSpec {
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  int max_subdivisions = 2000;
  /// Integrands on semi-infinite domains are treated as zero beyond this
  /// point of the original variable.
  double truncation_bound = 1e12;
};

struct QuadResult {
  double value = 0.0;
  double error = 0.0;  // estimated absolute error
  int subdivisions = 0;
  bool converged = false;
};

/// Adaptive Gauss-Kronrod 15(7) integration of f over [a, b]; either endpoint
/// may be infinite (semi-infinite and doubly infinite domains are mapped onto
/// finite intervals before adapting).  Integrable endpoint singularities are
/// handled by subdivision.  Non-convergence is reported through the result,
/// never silently hidden.
QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     const QuadratureSpec& spec = {});

/// integrate(), but a failure to reach the requested tolerances throws
/// std::runtime_error naming the interval and the error estimate reached.
double integrate_or_throw(const std::function<double(double)>& f, double a, double b,
                          const QuadratureSpec& spec = {});

}  // namespace hka
