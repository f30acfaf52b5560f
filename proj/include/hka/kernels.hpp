#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include "hka/mc.hpp"
#include "hka/processes.hpp"
#include "hka/quadrature.hpp"

namespace hka {

struct KernelSpec;

// ---------------------------------------------------------------------------
// Building blocks

/// g(x) = exp(<c, x>); an eigenfunction of the drifted Brownian generator with
/// rate |c|^2/2 - <c, kappa>.
struct ExpLinearEigen {
  std::vector<double> c;
};

/// g(x) = exp(mu x^2) with mu < 0; an eigenfunction of the one-dimensional
/// Ornstein-Uhlenbeck generator with the same mu, rate mu.
struct SquaredExpEigen {
  double mu;
};

using EigenFunc = std::variant<ExpLinearEigen, SquaredExpEigen>;

double eigen_eval(const EigenFunc& g, const State& x);

/// Semigroup rate nu with E[g(X_t^x)] = e^{nu t} g(x); throws when the pair
/// (g, process) is not an eigenfunction relationship this library knows.
double eigen_rate(const EigenFunc& g, const ProcessSpec& process);

struct ConstantH {
  double value;
};

/// h(y) = exp(-alpha^2 y^2 / 2), one-dimensional.
struct GaussBumpH {
  double alpha;
};

using HFunc = std::variant<ConstantH, GaussBumpH>;

enum class Estimator { closed_form, quadrature, monte_carlo };

struct ConstantPotential {
  double r;
};

/// V(x) = x (first coordinate).
struct IdentityPotential {};

using Potential = std::variant<ConstantPotential, IdentityPotential>;

/// f(t, s) = exp(-alpha (t + s)); satisfies the weight inequality
/// f(t, u - s) <= f(t - s, u) with equality.
struct ExpWeight {
  double alpha;
};

using WeightFunc = std::variant<ExpWeight>;

// ---------------------------------------------------------------------------
// Kernel families.  Each represents a positive function p(t, x) whose value
// at the driver state is the state price density of the induced model.

/// p(t, x) = transition density of the process at time t from the origin.
/// The model driver is the mirrored process (the law of x - X_t), under which
/// E[p(t, X_s^x)] = p(t + s, x) by convolution.
struct LevyDensityKernel {
  ProcessSpec process;
};

/// p(t, x) = E[h(X_t^x)] for bounded nonnegative h.
struct ExpectationKernel {
  HFunc h;
  ProcessSpec process;
  Estimator estimator = Estimator::closed_form;
  std::int64_t mc_n = 100000;
  QuadratureSpec quad;
};

/// p(t, x) = sum_i a_i E[e^{mu_i X_t} | X_0 = x] over a square-root diffusion,
/// a_i > 0, mu_i <= 0; evaluated through the closed-form transform.
struct AffineCirKernel {
  std::vector<double> a;
  std::vector<double> mu;
  CoxIngersollRoss process;
};

/// p(t, x) = 1 + e^{nu t} g(x) with nu = eigen_rate(g, process) < 0.
struct EigenKernel {
  EigenFunc g;
  ProcessSpec process;
};

/// One term A(t) g(x) with A(t) = weight e^{-decay t}, weight > 0, decay >= 0.
struct EigenSumTerm {
  double weight;
  double decay;
  EigenFunc g;
};

/// v(t, x) = sum_i A_i(t) g_i(x): decreasing positive coefficients against
/// nonnegative eigenfunctions, a supermartingale along the driver.
struct EigenSumKernel {
  std::vector<EigenSumTerm> terms;
  ProcessSpec process;
};

/// q(t, x) = integral_0^inf p(s, x) f(t, s) ds over a base kernel p.
struct WeightedKernel {
  std::shared_ptr<const KernelSpec> base;
  WeightFunc weight;
  QuadratureSpec quad;
};

/// q(t, x) = E[exp(-integral_0^t V(X_s^x) ds)]; closed form for the
/// square-root diffusion with V(x) = x, path simulation otherwise.
struct KilledKernel {
  Potential v;
  ProcessSpec process;
  Estimator estimator = Estimator::closed_form;
  double grid_step = 0.00390625;  // 2^-8
  std::int64_t mc_n = 100000;
};

// Symmetric kernels u(t, x) for the trace construction.  The state price
// density is pi_t = u(lambda + t, X_t) + c u(lambda + t, 0) with c > 2,
// lambda > 0, and E[pi_T | F_t] = u(lambda + 2T - t, X_t) + c u(lambda + T, 0).

/// u(t, x) = e^{-x^2/(2t)}/sqrt(2 pi t): the Gaussian heat kernel.
struct GaussHeatU {};

/// u(t, x) = (t alpha^2 + 1)^{-1/2} e^{-alpha^2 x^2 / (2 (t alpha^2 + 1))}.
struct QuadGaussU {
  double alpha;
};

/// u(t, x) = theta t / (pi ((theta t)^2 + x^2)): driftless Cauchy density.
struct CauchySymU {
  double theta;
};

/// Density of a Wiener process at an independent Gamma subordinator time;
/// u(t, 0) is finite only for eta t > 1/2.
struct VarianceGammaU {
  double eta;
  double gamma;
};

/// Density of a Wiener process at an independent inverse Gaussian time.
struct NormalInverseGaussianU {
  double eta;
  double gamma;
};

using TraceFamily = std::variant<GaussHeatU, QuadGaussU, CauchySymU, VarianceGammaU,
                                 NormalInverseGaussianU>;

struct TraceKernel {
  TraceFamily u;
  double lambda;
  double c;
};

struct KernelSpec {
  std::variant<LevyDensityKernel, ExpectationKernel, AffineCirKernel, EigenKernel,
               EigenSumKernel, WeightedKernel, KilledKernel, TraceKernel>
      v;
};

// ---------------------------------------------------------------------------
// Kernel evaluation

/// u(t, x) and u(t, 0) for the trace families (t > 0); heavy-tail members are
/// evaluated in log space so large states underflow gracefully.
double trace_u(const TraceFamily& fam, double t, double x);
double trace_u0(const TraceFamily& fam, double t);

/// Exact evaluation of the kernel function at (t, x): closed form or
/// deterministic quadrature.  Throws for Monte Carlo estimators; those go
/// through eval_mc so an error bar is never silently dropped.
double eval(const KernelSpec& k, double t, const State& x);

/// True when eval() is available (closed form or quadrature).
bool exactly_evaluable(const KernelSpec& k);

/// Monte Carlo evaluation for kernels configured with a sampling estimator.
MCEstimate eval_mc(const KernelSpec& k, double t, const State& x, std::int64_t n,
                   std::uint64_t seed);

/// Weighted kernel value with its quadrature error estimate.
QuadResult weighted_eval(const WeightedKernel& k, double t, const State& x);

/// Killed kernel closed form; requires the square-root diffusion with V(x)=x
/// (the exponential-affine bond formula) or a constant potential.
double killed_eval_closed(const KilledKernel& k, double t, const State& x);

/// Killed kernel by path simulation with trapezoidal accumulation of V.
MCEstimate killed_eval_mc(const KilledKernel& k, double t, const State& x, std::int64_t n,
                          std::uint64_t seed);

// ---------------------------------------------------------------------------
// Models

/// A kernel together with the driver process its states follow and a starting
/// point.  trace_mode marks the supermartingale construction, whose
/// conditional expectations take the dedicated form above.
struct Model {
  KernelSpec kernel;
  ProcessSpec driver;
  State x0;
  bool trace_mode = false;
};

/// Validates cross-field compatibility, derives the driver (mirroring the
/// process for density kernels, building the subordinated driver for trace
/// families), and spot-checks eigenfunction relationships by simulation;
/// a failed spot check is a construction error.
Model make_model(KernelSpec kernel, State x0);

/// State price density pi_t at state x.  Killed kernels need the accumulated
/// potential integral along the path; everyone else ignores it.
double spd_value(const Model& m, double t, const State& x,
                 std::optional<double> accumulated_potential = std::nullopt);

/// E[pi_T | X_t = x] in closed form (exact families only), the quantity that
/// prices a T-bond when divided by pi_t.
double conditional_spd(const Model& m, double t, double T, const State& x,
                       double accumulated_potential = 0.0);

struct PropagationCheck {
  MCEstimate lhs;  // Monte Carlo estimate of E[p(t, X_s^x)]
  double rhs;      // p(t + s, x)
  double z;        // (lhs.mean - rhs) / lhs.se
};

/// Simulation check of E[p(t, X_s^x)] = p(t + s, x) for an exactly evaluable
/// kernel along the given driver.
PropagationCheck check_propagation(const KernelSpec& k, const ProcessSpec& driver, double t,
                                   double s, const State& x, std::int64_t n,
                                   std::uint64_t seed);

}  // namespace hka
