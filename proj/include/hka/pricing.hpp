#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "hka/kernels.hpp"
#include "hka/mc.hpp"

namespace hka {

/// Swap payment dates T_alpha < T_1 < ... < T_beta in years.  dates[0] is the
/// option maturity T_alpha; payments occur at dates[1..], with accruals
/// tau_i = T_i - T_{i-1}.
struct TenorStructure {
  std::vector<double> dates;

  double maturity() const { return dates.front(); }
  double terminal() const { return dates.back(); }
};

/// Validates strictly increasing dates with at least one payment.
TenorStructure make_tenor(std::vector<double> dates);

/// Evenly spaced tenor from T_alpha to T_beta with the given period.
TenorStructure make_tenor(double t_alpha, double t_beta, double period);

struct SwaptionSpec {
  TenorStructure tenor;
  double strike = 0.0;  // K >= 0
};

/// Initial discount factors keyed by maturity; P(0) = 1 is implicit.
struct DiscountCurve {
  std::vector<double> maturities;  // strictly increasing, positive
  std::vector<double> discounts;   // positive
};

/// P^T_t at driver state x: the ratio of the conditional state price density
/// to its time-t value.  Collapses to 1 at T = t.
double bond_price(const Model& m, double t, double T, const State& x);

/// Time-0 discount factors P(0, T) over the given maturities, from x0.
DiscountCurve initial_curve(const Model& m, const std::vector<double>& maturities);

/// Continuously compounded zero yield -log(P)/tau for the bond maturing at
/// t + tau seen from t.
double zero_yield(const Model& m, double t, double tenor, const State& x);

/// Short rate -d/dt log p(t, x) at fixed state, by Richardson-extrapolated
/// central differences with step 1e-5.  Nonnegative (to tolerance) for the
/// supermartingale constructions; unconstrained in sign otherwise.
double short_rate(const Model& m, double t, const State& x);

/// Forward swap rate (1 - P(t, T_beta)) ... evaluated at t on the tenor:
/// (P^{T_alpha} - P^{T_beta}) / sum_i tau_i P^{T_i}.
double swap_rate(const Model& m, double t, const State& x, const TenorStructure& tenor);

/// Payer swaption priced by simulation: one exact driver transition to the
/// option maturity, payoff {pi_kernel(T_alpha, Y) - cond(T_alpha, T_beta, Y)
/// - K sum tau_i cond(T_alpha, T_i, Y)}^+, discounted by the time-t state
/// price density.
MCEstimate swaption_price_mc(const Model& m, const SwaptionSpec& spec, double t,
                             const State& x, std::int64_t n, std::uint64_t seed);

/// Closed-form swaption price for the eigenfunction models: Black-Scholes
/// style for the exp-linear/Brownian pairing, a Gaussian-quadratic integral
/// for the squared-exponential/OU pairing.  Degenerate regions where the
/// payoff cannot be positive price to exactly 0.
double swaption_eigen_closed(const Model& m, const SwaptionSpec& spec, double t,
                             const State& x);

/// Time-0 price of a claim paying G(P^T_t) at t: E[p(t, X_t) G(...)]/p(0, x0)
/// by simulation.
MCEstimate derivative_price(const Model& m, const std::function<double(double)>& payoff,
                            double t, double T, std::int64_t n, std::uint64_t seed);

}  // namespace hka
