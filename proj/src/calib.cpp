#include "hka/calib.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <utility>

namespace hka {

namespace {

constexpr double kBadLoss = 1e100;

double to_internal(double value, const ParamSpec& p) {
  double f = (value - p.lower) / (p.upper - p.lower);
  f = std::min(std::max(f, 1e-12), 1.0 - 1e-12);
  return std::log(f / (1.0 - f));
}

double from_internal(double s, const ParamSpec& p) {
  const double f = 1.0 / (1.0 + std::exp(-s));
  return p.lower + (p.upper - p.lower) * f;
}

std::vector<double> naturals(const std::vector<double>& s, const std::vector<ParamSpec>& specs) {
  std::vector<double> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = from_internal(s[i], specs[i]);
  return out;
}

void check_curve(const DiscountCurve& target) {
  if (target.maturities.empty() || target.maturities.size() != target.discounts.size()) {
    throw std::invalid_argument("calibration target: maturities and discounts must be "
                                "nonempty and of equal length");
  }
  for (std::size_t i = 0; i < target.maturities.size(); ++i) {
    if (!(target.maturities[i] >= 0.0)) {
      throw std::invalid_argument("calibration target: maturities must be nonnegative");
    }
    if (i > 0 && !(target.maturities[i] > target.maturities[i - 1])) {
      throw std::invalid_argument("calibration target: maturities must be increasing");
    }
    if (!(target.discounts[i] > 0.0)) {
      throw std::invalid_argument("calibration target: discounts must be positive");
    }
  }
}

/// Log-discount residuals at the target's own knots.
std::vector<double> residuals(const Model& m, const DiscountCurve& target) {
  std::vector<double> r(target.maturities.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    r[i] = std::log(bond_price(m, 0.0, target.maturities[i], m.x0)) -
           std::log(target.discounts[i]);
  }
  return r;
}

struct Objective {
  const CalibrationProblem* problem;
  int evals = 0;

  bool residuals_at(const std::vector<double>& s, std::vector<double>& out) {
    ++evals;
    try {
      const Model m = model_for_params(problem->family, naturals(s, problem->params));
      out = residuals(m, problem->target);
    } catch (const std::exception&) {
      return false;
    }
    for (double v : out) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  double loss(const std::vector<double>& s) {
    std::vector<double> r;
    if (!residuals_at(s, r)) return kBadLoss;
    double sum = 0.0;
    for (double v : r) sum += v * v;
    return sum;
  }
};

struct SimplexPoint {
  std::vector<double> s;
  double f;
};

/// Nelder-Mead downhill simplex in the unconstrained internal space.
void simplex_search(Objective& obj, std::vector<double>& best_s, double& best_f, double step,
                    int max_iters, double tol) {
  const std::size_t k = best_s.size();
  std::vector<SimplexPoint> pts(k + 1);
  pts[0] = {best_s, best_f};
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<double> s = best_s;
    s[i] += step;
    pts[i + 1] = {s, obj.loss(s)};
  }
  auto by_f = [](const SimplexPoint& a, const SimplexPoint& b) { return a.f < b.f; };
  for (int iter = 0; iter < max_iters; ++iter) {
    std::sort(pts.begin(), pts.end(), by_f);
    if (pts.back().f - pts.front().f <= tol * (1.0 + std::fabs(pts.front().f))) break;
    std::vector<double> centroid(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) centroid[j] += pts[i].s[j] / static_cast<double>(k);
    }
    auto blend = [&](double w) {
      std::vector<double> s(k);
      for (std::size_t j = 0; j < k; ++j) s[j] = centroid[j] + w * (pts.back().s[j] - centroid[j]);
      return s;
    };
    const auto reflected = blend(-1.0);
    const double fr = obj.loss(reflected);
    if (fr < pts.front().f) {
      const auto expanded = blend(-2.0);
      const double fe = obj.loss(expanded);
      pts.back() = fe < fr ? SimplexPoint{expanded, fe} : SimplexPoint{reflected, fr};
      continue;
    }
    if (fr < pts[k - 1].f) {
      pts.back() = {reflected, fr};
      continue;
    }
    const auto contracted = blend(0.5);
    const double fc = obj.loss(contracted);
    if (fc < pts.back().f) {
      pts.back() = {contracted, fc};
      continue;
    }
    for (std::size_t i = 1; i <= k; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        pts[i].s[j] = pts[0].s[j] + 0.5 * (pts[i].s[j] - pts[0].s[j]);
      }
      pts[i].f = obj.loss(pts[i].s);
    }
  }
  std::sort(pts.begin(), pts.end(), by_f);
  if (pts.front().f < best_f) {
    best_s = pts.front().s;
    best_f = pts.front().f;
  }
}

/// Damped Gauss-Newton with a forward-difference Jacobian.  All supported
/// families evaluate in closed form, so the finite differences are clean.
void gauss_newton_polish(Objective& obj, std::vector<double>& best_s, double& best_f) {
  const std::size_t k = best_s.size();
  std::vector<double> r;
  if (!obj.residuals_at(best_s, r)) return;
  const std::size_t nres = r.size();
  double damping = 1e-3;
  for (int iter = 0; iter < 30; ++iter) {
    Eigen::MatrixXd jac(nres, k);
    Eigen::VectorXd rv(nres);
    for (std::size_t i = 0; i < nres; ++i) rv(i) = r[i];
    bool jac_ok = true;
    for (std::size_t j = 0; j < k && jac_ok; ++j) {
      const double h = 1e-6 * (1.0 + std::fabs(best_s[j]));
      std::vector<double> s = best_s;
      s[j] += h;
      std::vector<double> rj;
      jac_ok = obj.residuals_at(s, rj);
      if (!jac_ok) break;
      for (std::size_t i = 0; i < nres; ++i) jac(i, j) = (rj[i] - r[i]) / h;
    }
    if (!jac_ok) return;
    bool improved = false;
    while (damping < 1e10) {
      Eigen::MatrixXd lhs = jac.transpose() * jac;
      lhs.diagonal().array() += damping;
      const Eigen::VectorXd delta = lhs.ldlt().solve(-jac.transpose() * rv);
      std::vector<double> s = best_s;
      for (std::size_t j = 0; j < k; ++j) s[j] += delta(j);
      const double f = obj.loss(s);
      if (f < best_f) {
        best_s = std::move(s);
        best_f = f;
        damping = std::max(damping * 0.1, 1e-12);
        improved = true;
        if (delta.norm() < 1e-13 || best_f < 1e-30) return;
        break;
      }
      damping *= 10.0;
    }
    if (!improved) return;
    if (!obj.residuals_at(best_s, r)) return;
  }
}

}  // namespace

CalibrationProblem make_problem(const std::string& family, DiscountCurve target) {
  check_curve(target);
  CalibrationProblem problem;
  problem.family = family;
  problem.target = std::move(target);
  if (family == "trace_gauss_heat") {
    problem.params = {{"lambda", 1.0, 1e-3, 1e3}, {"c", 3.0, 2.0 + 1e-6, 1e3}};
  } else if (family == "trace_quad_gauss") {
    problem.params = {{"lambda", 1.0, 1e-3, 1e3},
                      {"c", 3.0, 2.0 + 1e-6, 1e3},
                      {"alpha", 1.0, 1e-3, 1e3}};
  } else if (family == "trace_cauchy") {
    problem.params = {{"lambda", 1.0, 1e-3, 1e3},
                      {"c", 3.0, 2.0 + 1e-6, 1e3},
                      {"theta", 1.0, 1e-3, 1e3}};
  } else if (family == "affine_cir") {
    problem.params = {{"mu", -1.0, -50.0, -1e-6},
                      {"kappa", 0.05, 1e-4, 5.0},
                      {"theta", 1.0, 1e-4, 50.0},
                      {"sigma", 0.1, 1e-3, 2.0},
                      {"x0", 1.0, 1e-4, 50.0}};
  } else if (family == "eigen_bm") {
    problem.params = {{"c", 1.0, 1e-3, 50.0}, {"margin", 0.5, 1e-6, 50.0}};
  } else {
    throw std::invalid_argument(
        "unknown calibration family '" + family +
        "'; valid: trace_gauss_heat, trace_quad_gauss, trace_cauchy, affine_cir, eigen_bm");
  }
  return problem;
}

Model model_for_params(const std::string& family, const std::vector<double>& params) {
  auto need = [&](std::size_t n) {
    if (params.size() != n) {
      throw std::invalid_argument("model_for_params: family '" + family + "' takes " +
                                  std::to_string(n) + " parameters");
    }
  };
  State unit;
  unit.push_back(1.0);
  if (family == "trace_gauss_heat") {
    need(2);
    KernelSpec k{TraceKernel{GaussHeatU{}, params[0], params[1]}};
    return make_model(k, unit);
  }
  if (family == "trace_quad_gauss") {
    need(3);
    KernelSpec k{TraceKernel{QuadGaussU{params[2]}, params[0], params[1]}};
    return make_model(k, unit);
  }
  if (family == "trace_cauchy") {
    need(3);
    KernelSpec k{TraceKernel{CauchySymU{params[2]}, params[0], params[1]}};
    return make_model(k, unit);
  }
  if (family == "affine_cir") {
    need(5);
    AffineCirKernel fam;
    fam.a = {1.0};
    fam.mu = {params[0]};
    fam.process = CoxIngersollRoss{params[1], params[2], params[3]};
    KernelSpec k{fam};
    State x0;
    x0.push_back(params[4]);
    return make_model(k, x0);
  }
  if (family == "eigen_bm") {
    need(2);
    EigenKernel fam;
    fam.g = ExpLinearEigen{{params[0]}};
    fam.process = BrownianDrift{{0.5 * params[0] + params[1]}};
    KernelSpec k{fam};
    return make_model(k, unit);
  }
  throw std::invalid_argument(
      "unknown calibration family '" + family +
      "'; valid: trace_gauss_heat, trace_quad_gauss, trace_cauchy, affine_cir, eigen_bm");
}

double curve_residual_norm(const Model& m, const DiscountCurve& target) {
  check_curve(target);
  const auto r = residuals(m, target);
  double sum = 0.0;
  for (double v : r) sum += v * v;
  return std::sqrt(sum);
}

FitResult fit(const CalibrationProblem& problem, const std::vector<double>& init, int max_iters,
              double tol) {
  check_curve(problem.target);
  if (init.size() != problem.params.size()) {
    throw std::invalid_argument("fit: init has " + std::to_string(init.size()) +
                                " entries but the problem has " +
                                std::to_string(problem.params.size()) + " parameters");
  }
  for (std::size_t i = 0; i < init.size(); ++i) {
    const auto& p = problem.params[i];
    if (!(p.lower < p.upper)) {
      throw std::invalid_argument("fit: parameter '" + p.name + "' has an empty bound interval");
    }
    if (!(init[i] > p.lower && init[i] < p.upper)) {
      throw std::invalid_argument("fit: init for '" + p.name + "' is outside its bounds");
    }
  }
  if (max_iters < 1) throw std::invalid_argument("fit: max_iters must be positive");

  Objective obj{&problem};
  std::vector<double> s(init.size());
  for (std::size_t i = 0; i < init.size(); ++i) s[i] = to_internal(init[i], problem.params[i]);
  double f = obj.loss(s);

  simplex_search(obj, s, f, 0.25, max_iters, tol);
  simplex_search(obj, s, f, 0.05, max_iters / 2, tol);
  gauss_newton_polish(obj, s, f);

  FitResult result;
  result.params = naturals(s, problem.params);
  result.residual_norm = f >= kBadLoss ? std::numeric_limits<double>::infinity() : std::sqrt(f);
  result.iterations = obj.evals;
  result.converged = result.residual_norm <= problem.success_residual;
  result.message = result.converged
                       ? "converged"
                       : "residual_norm " + std::to_string(result.residual_norm) +
                             " above success threshold " +
                             std::to_string(problem.success_residual) + "; best-so-far returned";
  return result;
}

}  // namespace hka
