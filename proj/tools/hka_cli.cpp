#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"

#include "hka/config.hpp"

namespace {

/// Runs f against --out (or stdout) and converts exceptions to exit code 2.
template <typename F>
int run(const std::string& out_path, F f) {
  try {
    if (out_path.empty()) return f(std::cout);
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot open output file '" + out_path + "'");
    return f(out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

std::optional<std::uint64_t> given(const CLI::Option* opt, std::uint64_t value) {
  if (opt->count() > 0) return value;
  return std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Arbitrage-free term structure models built from propagation kernels"};
  app.require_subcommand(1);

  int threads = 0;
  app.add_option("--threads", threads, "OpenMP worker count (0 keeps the runtime default)");

  std::string config_path;
  std::string out_path;
  std::uint64_t seed_value = 0;

  auto* curve = app.add_subcommand("curve", "Initial discount factors and zero yields");
  curve->add_option("--config", config_path, "Model config (JSON)")->required();
  curve->add_option("--out", out_path, "Output CSV path (default stdout)");
  std::vector<double> maturities;
  curve->add_option("--maturities", maturities, "Comma-separated maturities in years")
      ->delimiter(',');

  auto* simulate = app.add_subcommand("simulate", "Zero yields along simulated driver paths");
  simulate->add_option("--config", config_path, "Model config (JSON)")->required();
  simulate->add_option("--out", out_path, "Output CSV path (default stdout)");
  int n_paths = 10;
  simulate->add_option("--paths", n_paths, "Number of paths");
  std::vector<double> tenors{1.0, 5.0, 10.0};
  simulate->add_option("--tenors", tenors, "Comma-separated tenors in years")->delimiter(',');
  const auto* sim_seed = simulate->add_option("--seed", seed_value, "Seed (overrides config)");

  auto* price = app.add_subcommand("price", "Bond or swaption price at time 0");
  price->add_option("--config", config_path, "Model config (JSON)")->required();
  price->add_option("--out", out_path, "Output CSV path (default stdout)");
  std::string instrument = "bond";
  price->add_option("--instrument", instrument, "bond or swaption")
      ->check(CLI::IsMember({"bond", "swaption"}));
  std::string method = "closed";
  price->add_option("--method", method, "closed or mc")
      ->check(CLI::IsMember({"closed", "mc"}));
  double bond_maturity = 1.0;
  price->add_option("--maturity", bond_maturity, "Bond maturity in years");
  std::vector<double> tenor_dates;
  price->add_option("--tenor", tenor_dates,
                    "Swaption tenor: option maturity then payment dates, comma-separated")
      ->delimiter(',');
  double strike = 0.0;
  price->add_option("--strike", strike, "Fixed-leg strike");
  std::int64_t price_n = 1000000;
  price->add_option("--n", price_n, "Monte Carlo sample count");
  const auto* price_seed = price->add_option("--seed", seed_value, "Seed (overrides config)");

  auto* verify = app.add_subcommand("verify", "Model verification suites");
  verify->add_option("--config", config_path, "Model config (JSON)")->required();
  verify->add_option("--out", out_path, "Output CSV path (default stdout)");
  std::string suite = "all";
  verify->add_option(
      "--suite", suite,
      "all, propagation, supermartingale, no_arbitrage, positivity, or swaption_parity");
  std::int64_t verify_n = 200000;
  verify->add_option("--n", verify_n, "Monte Carlo sample count per check");
  const auto* verify_seed = verify->add_option("--seed", seed_value, "Seed (overrides config)");

  auto* calibrate = app.add_subcommand("calibrate", "Fit a kernel family to a discount curve");
  std::string family;
  calibrate
      ->add_option("--family", family,
                   "trace_gauss_heat, trace_quad_gauss, trace_cauchy, affine_cir, or eigen_bm")
      ->required();
  std::string curve_path;
  calibrate->add_option("--curve", curve_path, "Target curve CSV with header T,discount")
      ->required();
  calibrate->add_option("--out", out_path, "Output config path (default stdout)");

  CLI11_PARSE(app, argc, argv);

#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)threads;
#endif

  if (curve->parsed()) {
    return run(out_path, [&](std::ostream& out) {
      const hka::RunConfig cfg = hka::load_config(config_path);
      std::vector<double> ts = maturities;
      if (ts.empty()) {
        for (double t = cfg.grid_step; t <= cfg.horizon + 1e-12; t += cfg.grid_step) {
          ts.push_back(t);
        }
      }
      return hka::cmd_curve(cfg, ts, out);
    });
  }
  if (simulate->parsed()) {
    return run(out_path, [&](std::ostream& out) {
      const hka::RunConfig cfg = hka::load_config(config_path);
      const std::uint64_t seed = hka::resolve_seed(given(sim_seed, seed_value), cfg);
      return hka::cmd_simulate(cfg, n_paths, tenors, seed, out);
    });
  }
  if (price->parsed()) {
    return run(out_path, [&](std::ostream& out) {
      const hka::RunConfig cfg = hka::load_config(config_path);
      hka::PriceRequest req;
      req.kind = instrument == "bond" ? hka::PriceRequest::Kind::bond
                                      : hka::PriceRequest::Kind::swaption;
      req.method = method == "closed" ? hka::PriceRequest::Method::closed
                                      : hka::PriceRequest::Method::mc;
      req.bond_maturity = bond_maturity;
      req.tenor_dates = tenor_dates;
      req.strike = strike;
      req.n = price_n;
      const std::uint64_t seed = hka::resolve_seed(given(price_seed, seed_value), cfg);
      return hka::cmd_price(cfg, req, seed, out);
    });
  }
  if (verify->parsed()) {
    return run(out_path, [&](std::ostream& out) {
      const hka::RunConfig cfg = hka::load_config(config_path);
      const std::uint64_t seed = hka::resolve_seed(given(verify_seed, seed_value), cfg);
      return hka::cmd_verify(cfg, suite, verify_n, seed, out);
    });
  }
  return run(out_path, [&](std::ostream& out) {
    std::ifstream in(curve_path);
    if (!in) throw std::runtime_error("cannot open curve file '" + curve_path + "'");
    const hka::DiscountCurve target = hka::read_curve_csv(in);
    return hka::cmd_calibrate(family, target, out);
  });
}
