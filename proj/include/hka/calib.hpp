#pragma once

/// Least-squares calibration of kernel-family parameters to an initial
/// discount curve.  The forward map is the model's own curve (initial_curve);
/// residuals are differences of log discounts at the target curve's knots, so
/// no interpolation of the target ever happens.
///
/// Box bounds are enforced by a smooth sigmoid reparameterization, so the
/// optimizer works in an unconstrained internal space and every parameter
/// vector it ever evaluates is feasible (c > 2, lambda > 0, and so on).

#include <string>
#include <vector>

#include "hka/kernels.hpp"
#include "hka/pricing.hpp"

namespace hka {

struct ParamSpec {
  std::string name;
  double init = 0.0;
  double lower = 0.0;
  double upper = 0.0;  // bounds are strict: the open interval (lower, upper)
};

struct CalibrationProblem {
  /// Kernel-family tag, one of: trace_gauss_heat, trace_quad_gauss,
  /// trace_cauchy, affine_cir, eigen_bm.
  std::string family;
  DiscountCurve target;
  std::vector<ParamSpec> params;
  /// Residual norm at or below which the fit counts as converged.
  double success_residual = 1e-6;
};

struct FitResult {
  std::vector<double> params;  // natural units, inside the bounds
  double residual_norm = 0.0;  // sqrt of the sum of squared log-discount residuals
  int iterations = 0;          // objective evaluations spent
  bool converged = false;
  std::string message;
};

/// Problem skeleton for a family: parameter names, default inits, bounds.
/// The target curve is moved into the returned problem.
CalibrationProblem make_problem(const std::string& family, DiscountCurve target);

/// Builds the model a parameter vector describes.  Families whose initial
/// curve would be insensitive to some parameter at the origin (the trace
/// deterministic term, the eigen weight) pin the initial state at 1; for
/// affine_cir the initial state is itself the last fitted parameter.
Model model_for_params(const std::string& family, const std::vector<double>& params);

/// Root of the calibration loss at these parameters.
double curve_residual_norm(const Model& m, const DiscountCurve& target);

/// Simplex search with one restart, then a finite-difference Gauss-Newton
/// polish.  Best-so-far parameters are always returned, converged or not;
/// converged means residual_norm <= problem.success_residual.
FitResult fit(const CalibrationProblem& problem, const std::vector<double>& init,
              int max_iters = 2000, double tol = 1e-14);

}  // namespace hka
