#pragma once

/// Model configuration documents and the command implementations behind the
/// CLI.  Configs are JSON with a schema_version field; every object is
/// checked for unknown keys so typos fail loudly instead of silently using a
/// default.  Commands write CSV (RFC 4180, '.' decimal, header row) to a
/// stream so tests can run them in-process.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hka/kernels.hpp"
#include "hka/pricing.hpp"
#include "hka/verify.hpp"

namespace hka {

struct RunConfig {
  Model model;
  std::optional<std::uint64_t> seed;  // seed from the document, if present
  double horizon = 10.0;
  double grid_step = 0.25;
};

/// Parses and validates a config document; throws std::invalid_argument with
/// the offending key or value.  See README for the schema.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Seed precedence: command line, then config document, then the HKA_SEED
/// environment variable, then 12345.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& cli_seed, const RunConfig& cfg);

/// Reads a discount curve CSV with header "T,discount".
DiscountCurve read_curve_csv(std::istream& in);

/// Writes "T,discount,yield" rows for P(0, T) over the given maturities.
/// A zero maturity row reports discount 1 and yield 0.
int cmd_curve(const RunConfig& cfg, const std::vector<double>& maturities, std::ostream& out);

/// Simulates driver paths on the config's time grid and writes long-format
/// "path_id,t,tenor,yield" rows, one per (path, grid time, tenor).
int cmd_simulate(const RunConfig& cfg, int n_paths, const std::vector<double>& tenors,
                 std::uint64_t seed, std::ostream& out);

struct PriceRequest {
  enum class Kind { bond, swaption };
  enum class Method { closed, mc };
  Kind kind = Kind::bond;
  Method method = Method::closed;
  double bond_maturity = 1.0;       // bond
  std::vector<double> tenor_dates;  // swaption: T_alpha, payment dates...
  double strike = 0.0;              // swaption
  std::int64_t n = 1000000;         // mc budget
};

/// Writes one "instrument,method,value,se,n,seed" row; se/n/seed are empty
/// for closed-form prices.
int cmd_price(const RunConfig& cfg, const PriceRequest& req, std::uint64_t seed,
              std::ostream& out);

/// Runs one suite (or all when `suite` is empty) through verify_model and
/// writes the report CSV.  Returns 0 when every check passes, 1 otherwise.
int cmd_verify(const RunConfig& cfg, const std::string& suite, std::int64_t n,
               std::uint64_t seed, std::ostream& out);

/// Fits the named family to the target curve from the default initial guess
/// and writes a loadable config document (JSON) for the fitted model, with a
/// "fit" section reporting residual_norm/iterations/converged.  Returns 0
/// when converged, 3 otherwise.
int cmd_calibrate(const std::string& family, const DiscountCurve& target, std::ostream& out);

}  // namespace hka
