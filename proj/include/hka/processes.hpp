#pragma once

#include <boost/container/static_vector.hpp>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "hka/rng.hpp"

namespace hka {

/// Coordinate vector of a driver state.  Drivers have independent coordinates
/// and stay low-dimensional, so states are capped at 8 components.
using State = boost::container::static_vector<double, 8>;

/// Brownian motion with constant drift -kappa (generator Laplacian/2 - kappa.grad);
/// dimension is kappa.size().
struct BrownianDrift {
  std::vector<double> kappa;
};

/// Ornstein-Uhlenbeck coordinates with generator -mu x.grad + Laplacian/2 and
/// mu_speed < 0.  Over a step dt the conditional law is
/// N(x e^{-mu dt}, (1 - e^{-2 mu dt})/(2 mu)) per coordinate; the variance is
/// positive exactly when mu < 0, which sample_transition asserts.
struct OrnsteinUhlenbeck {
  double mu_speed;
  int dim = 1;
};

/// dX = kappa (theta - X) dt + sigma sqrt(X) dW on [0, inf); transitions are
/// sampled exactly through the noncentral chi-squared law.
struct CoxIngersollRoss {
  double kappa;
  double theta;
  double sigma;
};

/// Isotropic Cauchy process with scale theta and linear drift; dimension is
/// drift.size().
struct CauchyProcess {
  double theta;
  std::vector<double> drift;
};

/// Increasing Levy process whose increment over dt is Gamma(eta dt, rate gamma).
struct GammaSubordinator {
  double eta;
  double gamma;
};

/// Increasing Levy process whose increment over dt is inverse Gaussian with
/// mean eta dt sqrt(pi/gamma) and shape 2 pi eta^2 dt^2.
struct InverseGaussianSubordinator {
  double eta;
  double gamma;
};

/// Wiener process evaluated at an independent Gamma subordinator time.
struct VarianceGammaWiener {
  double eta;
  double gamma;
};

/// Wiener process evaluated at an independent inverse Gaussian subordinator time.
struct NormalInverseGaussianWiener {
  double eta;
  double gamma;
};

using ProcessSpec =
    std::variant<BrownianDrift, OrnsteinUhlenbeck, CoxIngersollRoss, CauchyProcess,
                 GammaSubordinator, InverseGaussianSubordinator, VarianceGammaWiener,
                 NormalInverseGaussianWiener>;

int dim(const ProcessSpec& spec);

/// Short stable family tag ("brownian", "ou", ...) used in messages and configs.
const char* process_name(const ProcessSpec& spec);

/// Throws std::invalid_argument with the offending parameter when the spec is
/// outside its admissible region.
void validate(const ProcessSpec& spec);

/// True for processes with stationary independent increments.
bool is_levy(const ProcessSpec& spec);

/// The process with every increment negated (the law of x - X_t for X started
/// at the origin).  Defined for the translation-invariant density drivers.
ProcessSpec mirrored(const ProcessSpec& spec);

/// One exact transition of length dt from x, written into out (out may alias x).
void sample_transition_into(const ProcessSpec& spec, const State& x, double dt, Rng& rng,
                            State& out);

State sample_transition(const ProcessSpec& spec, const State& x, double dt, Rng& rng);

/// Density of X_t^x at y for the closed-form density families (BrownianDrift,
/// OrnsteinUhlenbeck, CauchyProcess); t > 0.
double transition_density(const ProcessSpec& spec, double t, const State& x, const State& y);

/// E[e^{u X_t} | X_0 = x] for the square-root diffusion, u <= 0, in closed
/// form through the noncentral chi-squared transform; lies in (0, 1] and
/// reduces to e^{u x} at t = 0.
double cir_exp_transform(const CoxIngersollRoss& p, double u, double t, double x);

/// Per-coordinate conditional law of the Ornstein-Uhlenbeck step: mean
/// x e^{-mu dt}, variance (1 - e^{-2 mu dt})/(2 mu) (positive for mu < 0).
double ou_conditional_mean(const OrnsteinUhlenbeck& p, double x, double dt);
double ou_conditional_variance(const OrnsteinUhlenbeck& p, double dt);

struct PathGrid {
  std::vector<double> times;   // ascending, times[0] == 0
  std::vector<State> states;   // states[0] == starting point
  std::uint64_t seed = 0;
};

/// Path sampled by composing exact transitions along the given time grid.
PathGrid sample_path(const ProcessSpec& spec, const State& x0, std::span<const double> times,
                     std::uint64_t seed);

}  // namespace hka
