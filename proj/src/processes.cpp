#include "hka/processes.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace hka {

namespace {

constexpr double kPi = 3.14159265358979323846;

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

double normal_pdf(double mean, double var, double y) {
  const double d = y - mean;
  return std::exp(-0.5 * d * d / var) / std::sqrt(2.0 * kPi * var);
}

/// Isotropic Cauchy draw: Z/|W| for Z a standard normal vector and W an
/// independent scalar normal.
void cauchy_draw(Rng& rng, int d, double* out) {
  for (int i = 0; i < d; ++i) out[i] = rng.normal();
  double w = rng.normal();
  w = std::fabs(w);
  while (w == 0.0) w = std::fabs(rng.normal());
  for (int i = 0; i < d; ++i) out[i] /= w;
}

double ig_mean(const InverseGaussianSubordinator& p, double dt) {
  return p.eta * dt * std::sqrt(kPi / p.gamma);
}

double ig_shape(const InverseGaussianSubordinator& p, double dt) {
  return 2.0 * kPi * p.eta * p.eta * dt * dt;
}

}  // namespace

int dim(const ProcessSpec& spec) {
  return std::visit(
      [](const auto& p) -> int {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, BrownianDrift>) {
          return static_cast<int>(p.kappa.size());
        } else if constexpr (std::is_same_v<T, OrnsteinUhlenbeck>) {
          return p.dim;
        } else if constexpr (std::is_same_v<T, CauchyProcess>) {
          return static_cast<int>(p.drift.size());
        } else {
          return 1;
        }
      },
      spec);
}

const char* process_name(const ProcessSpec& spec) {
  return std::visit(
      [](const auto& p) -> const char* {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, BrownianDrift>) return "brownian";
        if constexpr (std::is_same_v<T, OrnsteinUhlenbeck>) return "ou";
        if constexpr (std::is_same_v<T, CoxIngersollRoss>) return "cir";
        if constexpr (std::is_same_v<T, CauchyProcess>) return "cauchy";
        if constexpr (std::is_same_v<T, GammaSubordinator>) return "gamma_subordinator";
        if constexpr (std::is_same_v<T, InverseGaussianSubordinator>) return "ig_subordinator";
        if constexpr (std::is_same_v<T, VarianceGammaWiener>) return "vg_wiener";
        if constexpr (std::is_same_v<T, NormalInverseGaussianWiener>) return "nig_wiener";
      },
      spec);
}

void validate(const ProcessSpec& spec) {
  std::visit(
      [](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, BrownianDrift>) {
          require(!p.kappa.empty() && p.kappa.size() <= 8,
                  "brownian_drift: kappa needs 1..8 components");
        } else if constexpr (std::is_same_v<T, OrnsteinUhlenbeck>) {
          require(p.mu_speed < 0.0, "ornstein_uhlenbeck: mu_speed must be negative");
          require(p.dim >= 1 && p.dim <= 8, "ornstein_uhlenbeck: dim must lie in 1..8");
        } else if constexpr (std::is_same_v<T, CoxIngersollRoss>) {
          require(p.kappa > 0.0, "cir: kappa must be positive");
          require(p.theta > 0.0, "cir: theta must be positive");
          require(p.sigma > 0.0, "cir: sigma must be positive");
        } else if constexpr (std::is_same_v<T, CauchyProcess>) {
          require(p.theta > 0.0, "cauchy: theta must be positive");
          require(!p.drift.empty() && p.drift.size() <= 8,
                  "cauchy: drift needs 1..8 components");
        } else {
          require(p.eta > 0.0, "subordinated process: eta must be positive");
          require(p.gamma > 0.0, "subordinated process: gamma must be positive");
        }
      },
      spec);
}

bool is_levy(const ProcessSpec& spec) {
  return !std::holds_alternative<OrnsteinUhlenbeck>(spec) &&
         !std::holds_alternative<CoxIngersollRoss>(spec);
}

ProcessSpec mirrored(const ProcessSpec& spec) {
  if (const auto* bm = std::get_if<BrownianDrift>(&spec)) {
    BrownianDrift m = *bm;
    for (auto& k : m.kappa) k = -k;
    return m;
  }
  if (const auto* ca = std::get_if<CauchyProcess>(&spec)) {
    CauchyProcess m = *ca;
    for (auto& g : m.drift) g = -g;
    return m;
  }
  throw std::invalid_argument("mirrored: defined for the translation-invariant density drivers");
}

void sample_transition_into(const ProcessSpec& spec, const State& x, double dt, Rng& rng,
                            State& out) {
  if (dt < 0.0) throw std::invalid_argument("sample_transition: dt must be nonnegative");
  out = x;
  if (dt == 0.0) return;
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, BrownianDrift>) {
          const double sd = std::sqrt(dt);
          for (std::size_t i = 0; i < p.kappa.size(); ++i) {
            out[i] = x[i] - p.kappa[i] * dt + sd * rng.normal();
          }
        } else if constexpr (std::is_same_v<T, OrnsteinUhlenbeck>) {
          const double decay = std::exp(-p.mu_speed * dt);
          const double v = ou_conditional_variance(p, dt);
          const double sd = std::sqrt(v);
          for (int i = 0; i < p.dim; ++i) out[i] = x[i] * decay + sd * rng.normal();
        } else if constexpr (std::is_same_v<T, CoxIngersollRoss>) {
          if (x[0] < 0.0) throw std::invalid_argument("cir: state must be nonnegative");
          const double decay = std::exp(-p.kappa * dt);
          const double scale = p.sigma * p.sigma * (-std::expm1(-p.kappa * dt)) / (4.0 * p.kappa);
          const double df = 4.0 * p.kappa * p.theta / (p.sigma * p.sigma);
          const double ncp = x[0] * decay / scale;
          out[0] = scale * rng.noncentral_chi_squared(df, ncp);
        } else if constexpr (std::is_same_v<T, CauchyProcess>) {
          const int d = static_cast<int>(p.drift.size());
          double z[8];
          cauchy_draw(rng, d, z);
          for (int i = 0; i < d; ++i) out[i] = x[i] + p.drift[i] * dt + p.theta * dt * z[i];
        } else if constexpr (std::is_same_v<T, GammaSubordinator>) {
          out[0] = x[0] + rng.gamma(p.eta * dt) / p.gamma;
        } else if constexpr (std::is_same_v<T, InverseGaussianSubordinator>) {
          out[0] = x[0] + rng.inverse_gaussian(ig_mean(p, dt), ig_shape(p, dt));
        } else if constexpr (std::is_same_v<T, VarianceGammaWiener>) {
          const double s = rng.gamma(p.eta * dt) / p.gamma;
          out[0] = x[0] + std::sqrt(s) * rng.normal();
        } else if constexpr (std::is_same_v<T, NormalInverseGaussianWiener>) {
          const InverseGaussianSubordinator sub{p.eta, p.gamma};
          const double s = rng.inverse_gaussian(ig_mean(sub, dt), ig_shape(sub, dt));
          out[0] = x[0] + std::sqrt(s) * rng.normal();
        }
      },
      spec);
}

State sample_transition(const ProcessSpec& spec, const State& x, double dt, Rng& rng) {
  State out;
  sample_transition_into(spec, x, dt, rng, out);
  return out;
}

double transition_density(const ProcessSpec& spec, double t, const State& x, const State& y) {
  if (!(t > 0.0)) throw std::invalid_argument("transition_density: t must be positive");
  if (const auto* bm = std::get_if<BrownianDrift>(&spec)) {
    double density = 1.0;
    for (std::size_t i = 0; i < bm->kappa.size(); ++i) {
      density *= normal_pdf(x[i] - bm->kappa[i] * t, t, y[i]);
    }
    return density;
  }
  if (const auto* ou = std::get_if<OrnsteinUhlenbeck>(&spec)) {
    const double decay = std::exp(-ou->mu_speed * t);
    const double v = ou_conditional_variance(*ou, t);
    double density = 1.0;
    for (int i = 0; i < ou->dim; ++i) density *= normal_pdf(x[i] * decay, v, y[i]);
    return density;
  }
  if (const auto* ca = std::get_if<CauchyProcess>(&spec)) {
    const int d = static_cast<int>(ca->drift.size());
    double r2 = 0.0;
    for (int i = 0; i < d; ++i) {
      const double diff = y[i] - x[i] - ca->drift[i] * t;
      r2 += diff * diff;
    }
    const double ct = ca->theta * t;
    const double half = 0.5 * (d + 1);
    return std::tgamma(half) * ct / std::pow(kPi * (ct * ct + r2), half);
  }
  throw std::invalid_argument("transition_density: closed form only for the density families");
}

double ou_conditional_mean(const OrnsteinUhlenbeck& p, double x, double dt) {
  return x * std::exp(-p.mu_speed * dt);
}

double ou_conditional_variance(const OrnsteinUhlenbeck& p, double dt) {
  const double v = -std::expm1(-2.0 * p.mu_speed * dt) / (2.0 * p.mu_speed);
  if (!(v > 0.0)) throw std::logic_error("ornstein_uhlenbeck: step variance not positive");
  return v;
}

double cir_exp_transform(const CoxIngersollRoss& p, double u, double t, double x) {
  if (u > 0.0) throw std::invalid_argument("cir_exp_transform: u must be nonpositive");
  if (t < 0.0) throw std::invalid_argument("cir_exp_transform: t must be nonnegative");
  if (x < 0.0) throw std::invalid_argument("cir_exp_transform: x must be nonnegative");
  if (t == 0.0 || u == 0.0) return std::exp(u * x);
  const double decay = std::exp(-p.kappa * t);
  const double scale = p.sigma * p.sigma * (-std::expm1(-p.kappa * t)) / (4.0 * p.kappa);
  const double df = 4.0 * p.kappa * p.theta / (p.sigma * p.sigma);
  const double ncp = x * decay / scale;
  const double w = u * scale;  // <= 0, so 1 - 2w >= 1
  const double log_value = -0.5 * df * std::log1p(-2.0 * w) + ncp * w / (1.0 - 2.0 * w);
  return std::exp(log_value);
}

PathGrid sample_path(const ProcessSpec& spec, const State& x0, std::span<const double> times,
                     std::uint64_t seed) {
  if (times.empty() || times[0] != 0.0) {
    throw std::invalid_argument("sample_path: time grid must start at 0");
  }
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) {
      throw std::invalid_argument("sample_path: time grid must be strictly increasing");
    }
  }
  if (static_cast<int>(x0.size()) != dim(spec)) {
    throw std::invalid_argument("sample_path: starting point dimension mismatch");
  }
  PathGrid grid;
  grid.times.assign(times.begin(), times.end());
  grid.states.resize(times.size());
  grid.seed = seed;
  grid.states[0] = x0;
  Rng rng(seed);
  for (std::size_t i = 1; i < times.size(); ++i) {
    sample_transition_into(spec, grid.states[i - 1], times[i] - times[i - 1], rng,
                           grid.states[i]);
  }
  return grid;
}

}  // namespace hka
