#include "hka/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "hka/calib.hpp"

namespace hka {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* a : allowed) {
      if (item.key() == a) {
        known = true;
        break;
      }
    }
    if (!known) {
      std::string msg = "unknown key '" + item.key() + "' in " + where + "; allowed:";
      for (const char* a : allowed) {
        msg += ' ';
        msg += a;
      }
      fail(msg);
    }
  }
}

const json& member(const json& obj, const std::string& where, const char* key) {
  if (!obj.contains(key)) fail(where + ": missing required key '" + key + "'");
  return obj.at(key);
}

double num_at(const json& obj, const std::string& where, const char* key) {
  const json& v = member(obj, where, key);
  if (!v.is_number()) fail(where + ": '" + std::string(key) + "' must be a number");
  return v.get<double>();
}

std::vector<double> vec_at(const json& obj, const std::string& where, const char* key) {
  const json& v = member(obj, where, key);
  if (!v.is_array() || v.empty()) {
    fail(where + ": '" + std::string(key) + "' must be a nonempty array of numbers");
  }
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) fail(where + ": '" + std::string(key) + "' must contain only numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

std::string str_at(const json& obj, const std::string& where, const char* key) {
  const json& v = member(obj, where, key);
  if (!v.is_string()) fail(where + ": '" + std::string(key) + "' must be a string");
  return v.get<std::string>();
}

ProcessSpec parse_process(const json& obj) {
  const std::string where = "process";
  if (!obj.is_object()) fail("process section must be an object");
  const std::string type = str_at(obj, where, "type");
  if (type == "brownian") {
    check_keys(obj, where, {"type", "kappa"});
    return BrownianDrift{vec_at(obj, where, "kappa")};
  }
  if (type == "ou") {
    check_keys(obj, where, {"type", "mu_speed", "dim"});
    OrnsteinUhlenbeck p{num_at(obj, where, "mu_speed")};
    if (obj.contains("dim")) {
      const json& d = obj.at("dim");
      if (!d.is_number_integer()) fail("process: 'dim' must be an integer");
      p.dim = d.get<int>();
    }
    return p;
  }
  if (type == "cir") {
    check_keys(obj, where, {"type", "kappa", "theta", "sigma"});
    return CoxIngersollRoss{num_at(obj, where, "kappa"), num_at(obj, where, "theta"),
                            num_at(obj, where, "sigma")};
  }
  if (type == "cauchy") {
    check_keys(obj, where, {"type", "theta", "drift"});
    return CauchyProcess{num_at(obj, where, "theta"), vec_at(obj, where, "drift")};
  }
  if (type == "gamma_subordinator" || type == "ig_subordinator" || type == "vg_wiener" ||
      type == "nig_wiener") {
    check_keys(obj, where, {"type", "eta", "gamma"});
    const double eta = num_at(obj, where, "eta");
    const double gamma = num_at(obj, where, "gamma");
    if (type == "gamma_subordinator") return GammaSubordinator{eta, gamma};
    if (type == "ig_subordinator") return InverseGaussianSubordinator{eta, gamma};
    if (type == "vg_wiener") return VarianceGammaWiener{eta, gamma};
    return NormalInverseGaussianWiener{eta, gamma};
  }
  fail("process: unknown type '" + type +
       "'; valid: brownian, ou, cir, cauchy, gamma_subordinator, ig_subordinator, "
       "vg_wiener, nig_wiener");
}

HFunc parse_h(const json& obj) {
  const std::string where = "kernel.h";
  if (!obj.is_object()) fail("kernel.h must be an object");
  const std::string type = str_at(obj, where, "type");
  if (type == "constant") {
    check_keys(obj, where, {"type", "value"});
    return ConstantH{num_at(obj, where, "value")};
  }
  if (type == "gauss_bump") {
    check_keys(obj, where, {"type", "alpha"});
    return GaussBumpH{num_at(obj, where, "alpha")};
  }
  fail("kernel.h: unknown type '" + type + "'; valid: constant, gauss_bump");
}

EigenFunc parse_g(const json& obj, const std::string& where) {
  if (!obj.is_object()) fail(where + " must be an object");
  const std::string type = str_at(obj, where, "type");
  if (type == "exp_linear") {
    check_keys(obj, where, {"type", "c"});
    return ExpLinearEigen{vec_at(obj, where, "c")};
  }
  if (type == "squared_exp") {
    check_keys(obj, where, {"type", "mu"});
    return SquaredExpEigen{num_at(obj, where, "mu")};
  }
  fail(where + ": unknown type '" + type + "'; valid: exp_linear, squared_exp");
}

Potential parse_potential(const json& obj) {
  const std::string where = "kernel.potential";
  if (!obj.is_object()) fail("kernel.potential must be an object");
  const std::string type = str_at(obj, where, "type");
  if (type == "constant") {
    check_keys(obj, where, {"type", "r"});
    return ConstantPotential{num_at(obj, where, "r")};
  }
  if (type == "identity") {
    check_keys(obj, where, {"type"});
    return IdentityPotential{};
  }
  fail("kernel.potential: unknown type '" + type + "'; valid: constant, identity");
}

Estimator parse_estimator(const json& obj, const std::string& where) {
  const std::string name = str_at(obj, where, "estimator");
  if (name == "closed_form") return Estimator::closed_form;
  if (name == "quadrature") return Estimator::quadrature;
  if (name == "monte_carlo") return Estimator::monte_carlo;
  fail(where + ": unknown estimator '" + name +
       "'; valid: closed_form, quadrature, monte_carlo");
}

TraceFamily parse_trace_family(const json& obj, const std::string& family,
                               const std::string& where) {
  if (family == "gauss_heat") {
    check_keys(obj, where, {"type", "family", "lambda", "c"});
    return GaussHeatU{};
  }
  if (family == "quad_gauss") {
    check_keys(obj, where, {"type", "family", "lambda", "c", "alpha"});
    return QuadGaussU{num_at(obj, where, "alpha")};
  }
  if (family == "cauchy") {
    check_keys(obj, where, {"type", "family", "lambda", "c", "theta"});
    return CauchySymU{num_at(obj, where, "theta")};
  }
  if (family == "variance_gamma") {
    check_keys(obj, where, {"type", "family", "lambda", "c", "eta", "gamma"});
    return VarianceGammaU{num_at(obj, where, "eta"), num_at(obj, where, "gamma")};
  }
  if (family == "nig") {
    check_keys(obj, where, {"type", "family", "lambda", "c", "eta", "gamma"});
    return NormalInverseGaussianU{num_at(obj, where, "eta"), num_at(obj, where, "gamma")};
  }
  fail(where + ": unknown family '" + family +
       "'; valid: gauss_heat, quad_gauss, cauchy, variance_gamma, nig");
}

/// Parses one kernel object.  `process` is the document's process section
/// (null when absent); families with a free driver require it, the trace
/// family forbids it because its driver is derived from the kernel.
KernelSpec parse_kernel(const json& obj, const json* process, const std::string& where) {
  if (!obj.is_object()) fail(where + " must be an object");
  const std::string type = str_at(obj, where, "type");
  auto need_process = [&]() -> ProcessSpec {
    if (process == nullptr) {
      fail("kernel type '" + type + "' needs a process section");
    }
    return parse_process(*process);
  };
  if (type == "levy_density") {
    check_keys(obj, where, {"type"});
    return KernelSpec{LevyDensityKernel{need_process()}};
  }
  if (type == "expectation") {
    check_keys(obj, where, {"type", "h", "estimator", "mc_n"});
    ExpectationKernel k;
    k.h = parse_h(member(obj, where, "h"));
    k.process = need_process();
    if (obj.contains("estimator")) k.estimator = parse_estimator(obj, where);
    if (obj.contains("mc_n")) k.mc_n = static_cast<std::int64_t>(num_at(obj, where, "mc_n"));
    return KernelSpec{k};
  }
  if (type == "affine_cir") {
    check_keys(obj, where, {"type", "a", "mu"});
    AffineCirKernel k;
    k.a = vec_at(obj, where, "a");
    k.mu = vec_at(obj, where, "mu");
    const ProcessSpec p = need_process();
    const auto* cir = std::get_if<CoxIngersollRoss>(&p);
    if (cir == nullptr) fail("affine_cir kernel: process must have type cir");
    k.process = *cir;
    return KernelSpec{k};
  }
  if (type == "eigen") {
    check_keys(obj, where, {"type", "g"});
    EigenKernel k;
    k.g = parse_g(member(obj, where, "g"), where + ".g");
    k.process = need_process();
    return KernelSpec{k};
  }
  if (type == "eigen_sum") {
    check_keys(obj, where, {"type", "terms"});
    const json& terms = member(obj, where, "terms");
    if (!terms.is_array() || terms.empty()) {
      fail(where + ": 'terms' must be a nonempty array");
    }
    EigenSumKernel k;
    for (std::size_t i = 0; i < terms.size(); ++i) {
      const std::string term_where = where + ".terms[" + std::to_string(i) + "]";
      const json& term = terms[i];
      if (!term.is_object()) fail(term_where + " must be an object");
      check_keys(term, term_where, {"weight", "decay", "g"});
      k.terms.push_back(EigenSumTerm{num_at(term, term_where, "weight"),
                                     num_at(term, term_where, "decay"),
                                     parse_g(member(term, term_where, "g"), term_where + ".g")});
    }
    k.process = need_process();
    return KernelSpec{k};
  }
  if (type == "weighted") {
    check_keys(obj, where, {"type", "alpha", "base"});
    WeightedKernel k;
    k.base = std::make_shared<const KernelSpec>(
        parse_kernel(member(obj, where, "base"), process, where + ".base"));
    k.weight = ExpWeight{num_at(obj, where, "alpha")};
    return KernelSpec{k};
  }
  if (type == "killed") {
    check_keys(obj, where, {"type", "potential", "estimator", "grid_step", "mc_n"});
    KilledKernel k;
    k.v = parse_potential(member(obj, where, "potential"));
    k.process = need_process();
    if (obj.contains("estimator")) k.estimator = parse_estimator(obj, where);
    if (obj.contains("grid_step")) k.grid_step = num_at(obj, where, "grid_step");
    if (obj.contains("mc_n")) k.mc_n = static_cast<std::int64_t>(num_at(obj, where, "mc_n"));
    return KernelSpec{k};
  }
  if (type == "trace") {
    if (process != nullptr) {
      fail("trace kernels derive their driver from the family; remove the process section");
    }
    TraceKernel k;
    k.u = parse_trace_family(obj, str_at(obj, where, "family"), where);
    k.lambda = num_at(obj, where, "lambda");
    k.c = num_at(obj, where, "c");
    return KernelSpec{k};
  }
  fail(where + ": unknown type '" + type +
       "'; valid: levy_density, expectation, affine_cir, eigen, eigen_sum, weighted, "
       "killed, trace");
}

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  std::size_t e = s.find_last_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& field, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(field, &used);
    if (used != field.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    fail("curve CSV line " + std::to_string(line_no) + ": '" + field + "' is not a number");
  }
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) fail("config must be a JSON object");
  check_keys(doc, "config",
             {"schema_version", "seed", "x0", "horizon", "grid_step", "kernel", "process",
              "fit"});
  const json& version = member(doc, "config", "schema_version");
  if (!version.is_number_integer() || version.get<int>() != 1) {
    fail("config: unsupported schema_version (this build reads version 1)");
  }

  RunConfig cfg;
  if (doc.contains("seed")) {
    const json& s = doc.at("seed");
    if (!s.is_number_integer() || s.get<double>() < 0) {
      fail("config: 'seed' must be a nonnegative integer");
    }
    cfg.seed = s.get<std::uint64_t>();
  }
  if (doc.contains("horizon")) {
    cfg.horizon = num_at(doc, "config", "horizon");
    if (!(cfg.horizon > 0.0)) fail("config: 'horizon' must be positive");
  }
  if (doc.contains("grid_step")) {
    cfg.grid_step = num_at(doc, "config", "grid_step");
    if (!(cfg.grid_step > 0.0)) fail("config: 'grid_step' must be positive");
    if (cfg.grid_step > cfg.horizon) fail("config: 'grid_step' must not exceed the horizon");
  }

  State x0;
  const json& x0_json = member(doc, "config", "x0");
  if (x0_json.is_number()) {
    x0.push_back(x0_json.get<double>());
  } else if (x0_json.is_array() && !x0_json.empty() && x0_json.size() <= 8) {
    for (const auto& e : x0_json) {
      if (!e.is_number()) fail("config: 'x0' must contain only numbers");
      x0.push_back(e.get<double>());
    }
  } else {
    fail("config: 'x0' must be a number or an array of 1 to 8 numbers");
  }

  const json* process = doc.contains("process") ? &doc.at("process") : nullptr;
  KernelSpec kernel = parse_kernel(member(doc, "config", "kernel"), process, "kernel");
  cfg.model = make_model(std::move(kernel), x0);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open config file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& cli_seed, const RunConfig& cfg) {
  if (cli_seed.has_value()) return *cli_seed;
  if (cfg.seed.has_value()) return *cfg.seed;
  if (const char* env = std::getenv("HKA_SEED")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0') return static_cast<std::uint64_t>(v);
    fail(std::string("HKA_SEED is set but not a nonnegative integer: '") + env + "'");
  }
  return 12345;
}

DiscountCurve read_curve_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != "T,discount") {
    fail("curve CSV: first line must be the header 'T,discount'");
  }
  DiscountCurve curve;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string row = trim(line);
    if (row.empty()) continue;
    const std::size_t comma = row.find(',');
    if (comma == std::string::npos || row.find(',', comma + 1) != std::string::npos) {
      fail("curve CSV line " + std::to_string(line_no) + ": expected exactly 2 fields");
    }
    curve.maturities.push_back(parse_double(trim(row.substr(0, comma)), line_no));
    curve.discounts.push_back(parse_double(trim(row.substr(comma + 1)), line_no));
  }
  if (curve.maturities.empty()) fail("curve CSV: no data rows");
  return curve;
}

int cmd_curve(const RunConfig& cfg, const std::vector<double>& maturities, std::ostream& out) {
  if (maturities.empty()) fail("cmd_curve: needs at least one maturity");
  out << "T,discount,yield\n";
  for (double T : maturities) {
    if (!(T >= 0.0)) fail("cmd_curve: maturities must be nonnegative");
    double discount = 1.0;
    double yield = 0.0;
    if (T > 0.0) {
      discount = bond_price(cfg.model, 0.0, T, cfg.model.x0);
      yield = -std::log(discount) / T;
    }
    out << g17(T) << ',' << g17(discount) << ',' << g17(yield) << "\n";
  }
  return 0;
}

int cmd_simulate(const RunConfig& cfg, int n_paths, const std::vector<double>& tenors,
                 std::uint64_t seed, std::ostream& out) {
  if (n_paths < 1) fail("cmd_simulate: n_paths must be positive");
  if (tenors.empty()) fail("cmd_simulate: needs at least one tenor");
  for (double tau : tenors) {
    if (!(tau > 0.0)) fail("cmd_simulate: tenors must be positive");
  }
  std::vector<double> times;
  const auto steps = static_cast<std::size_t>(cfg.horizon / cfg.grid_step + 1e-9);
  for (std::size_t i = 0; i <= steps; ++i) times.push_back(i * cfg.grid_step);
  out << "path_id,t,tenor,yield\n";
  for (int p = 0; p < n_paths; ++p) {
    const PathGrid path =
        sample_path(cfg.model.driver, cfg.model.x0, times, derive_seed(seed, p));
    for (std::size_t i = 0; i < path.times.size(); ++i) {
      for (double tau : tenors) {
        const double y = zero_yield(cfg.model, path.times[i], tau, path.states[i]);
        out << p << ',' << g17(path.times[i]) << ',' << g17(tau) << ',' << g17(y) << "\n";
      }
    }
  }
  return 0;
}

int cmd_price(const RunConfig& cfg, const PriceRequest& req, std::uint64_t seed,
              std::ostream& out) {
  out << "instrument,method,value,se,n,seed\n";
  const bool mc = req.method == PriceRequest::Method::mc;
  if (req.kind == PriceRequest::Kind::bond) {
    if (!(req.bond_maturity > 0.0)) fail("cmd_price: bond maturity must be positive");
    if (mc) {
      const MCEstimate est = derivative_price(
          cfg.model, [](double) { return 1.0; }, req.bond_maturity, req.bond_maturity, req.n,
          seed);
      out << "bond,mc," << g17(est.mean) << ',' << g17(est.se) << ',' << est.n << ','
          << est.seed << "\n";
    } else {
      out << "bond,closed," << g17(bond_price(cfg.model, 0.0, req.bond_maturity, cfg.model.x0))
          << ",,,\n";
    }
    return 0;
  }
  SwaptionSpec spec{make_tenor(req.tenor_dates), req.strike};
  if (mc) {
    const MCEstimate est = swaption_price_mc(cfg.model, spec, 0.0, cfg.model.x0, req.n, seed);
    out << "swaption,mc," << g17(est.mean) << ',' << g17(est.se) << ',' << est.n << ','
        << est.seed << "\n";
  } else {
    out << "swaption,closed," << g17(swaption_eigen_closed(cfg.model, spec, 0.0, cfg.model.x0))
        << ",,,\n";
  }
  return 0;
}

int cmd_verify(const RunConfig& cfg, const std::string& suite, std::int64_t n,
               std::uint64_t seed, std::ostream& out) {
  std::vector<VerificationReport> reports;
  if (suite.empty() || suite == "all") {
    for (Suite s : all_suites()) {
      auto batch = verify_model(cfg.model, s, n, seed);
      reports.insert(reports.end(), batch.begin(), batch.end());
    }
  } else {
    reports = verify_model(cfg.model, parse_suite(suite), n, seed);
  }
  write_reports_csv(out, reports);
  return all_pass(reports) ? 0 : 1;
}

int cmd_calibrate(const std::string& family, const DiscountCurve& target, std::ostream& out) {
  CalibrationProblem problem = make_problem(family, target);
  std::vector<double> init;
  for (const auto& p : problem.params) init.push_back(p.init);
  const FitResult result = fit(problem, init);
  const auto& v = result.params;

  json doc;
  doc["schema_version"] = 1;
  if (family == "trace_gauss_heat") {
    doc["x0"] = {1.0};
    doc["kernel"] = {{"type", "trace"}, {"family", "gauss_heat"}, {"lambda", v[0]}, {"c", v[1]}};
  } else if (family == "trace_quad_gauss") {
    doc["x0"] = {1.0};
    doc["kernel"] = {{"type", "trace"},
                     {"family", "quad_gauss"},
                     {"lambda", v[0]},
                     {"c", v[1]},
                     {"alpha", v[2]}};
  } else if (family == "trace_cauchy") {
    doc["x0"] = {1.0};
    doc["kernel"] = {{"type", "trace"},
                     {"family", "cauchy"},
                     {"lambda", v[0]},
                     {"c", v[1]},
                     {"theta", v[2]}};
  } else if (family == "affine_cir") {
    doc["x0"] = {v[4]};
    doc["kernel"] = {{"type", "affine_cir"}, {"a", {1.0}}, {"mu", {v[0]}}};
    doc["process"] = {{"type", "cir"}, {"kappa", v[1]}, {"theta", v[2]}, {"sigma", v[3]}};
  } else if (family == "eigen_bm") {
    doc["x0"] = {1.0};
    doc["kernel"] = {{"type", "eigen"}, {"g", {{"type", "exp_linear"}, {"c", {v[0]}}}}};
    doc["process"] = {{"type", "brownian"}, {"kappa", {0.5 * v[0] + v[1]}}};
  }
  doc["fit"] = {{"residual_norm", result.residual_norm},
                {"iterations", result.iterations},
                {"converged", result.converged},
                {"message", result.message}};
  out << doc.dump(2) << "\n";
  return result.converged ? 0 : 3;
}

}  // namespace hka
