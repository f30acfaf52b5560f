#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "hka/kernels.hpp"

namespace hka {

/// Executable checks of the model-level guarantees: the propagation identity,
/// supermartingale inequalities, the no-arbitrage pricing identity, kernel and
/// short-rate positivity, and strike-zero swaption parity.
enum class Suite {
  propagation,
  supermartingale,
  no_arbitrage,
  positivity,
  swaption_parity,
};

const char* suite_name(Suite suite);

/// Parses a suite name; throws std::invalid_argument listing the valid names.
Suite parse_suite(const std::string& name);

std::vector<Suite> all_suites();

struct VerificationReport {
  std::string check;   // stable check name
  std::string inputs;  // sampled inputs, "t=.. T=.. x=.." style
  double lhs = 0.0;    // checked value (simulation mean for sampling checks)
  double rhs = 0.0;    // reference value
  double se = 0.0;     // standard error of lhs; 0 for deterministic checks
  double z = 0.0;      // (lhs - rhs)/se for sampling checks, else 0
  bool pass = false;
};

bool all_pass(const std::vector<VerificationReport>& reports);

/// Two-sided z threshold keeping the whole-suite false-alarm probability at
/// suite_alpha across the given number of sampling checks.
double bonferroni_threshold(int checks, double suite_alpha = 1e-3);

/// Runs one suite against the model.  n is the per-check sampling budget;
/// checks whose single draw costs a quadrature are capped below n to keep the
/// suite bounded.  Suites that do not apply to the model's family return an
/// empty list.  Results are deterministic in (seed, n) and independent of the
/// worker count.
std::vector<VerificationReport> verify_model(const Model& m, Suite suite, std::int64_t n,
                                             std::uint64_t seed);

/// Line-oriented serializations: one check per line.  CSV columns are
/// check,inputs,lhs,rhs,z,verdict with RFC 4180 quoting.
void write_reports_text(std::ostream& out, const std::vector<VerificationReport>& reports);
void write_reports_csv(std::ostream& out, const std::vector<VerificationReport>& reports);

}  // namespace hka
