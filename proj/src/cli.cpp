#include "cheaptalk/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "cheaptalk/classify.hpp"
#include "cheaptalk/equilibrium.hpp"
#include "cheaptalk/errors.hpp"
#include "cheaptalk/ratedist.hpp"
#include "cheaptalk/sources.hpp"
#include "cheaptalk/transforms.hpp"

namespace cheaptalk::cli {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------------------------
// Schema helpers

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

double number(const json& obj, const std::string& key, double fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(where + "." + key + " must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(where + "." + key + " must be finite");
  return x;
}

std::uint64_t whole(const json& obj, const std::string& key, std::uint64_t fallback,
                    const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return v.get<std::uint64_t>();
  if (v.is_number_float()) {
    const double x = v.get<double>();
    if (x >= 0.0 && x == std::floor(x) && x < 1.8e19) return static_cast<std::uint64_t>(x);
  }
  throw ConfigError(where + "." + key + " must be a nonnegative integer");
}

std::string text(const json& obj, const std::string& key, const std::string& fallback,
                 const std::string& where) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_string()) throw ConfigError(where + "." + key + " must be a string");
  return obj.at(key).get<std::string>();
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

std::vector<double> number_list(const json& v, const std::string& where) {
  require(v.is_array(), where + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    require(x.is_number() && std::isfinite(x.get<double>()), where + " must hold finite numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

const std::set<std::string> kTopKeys = {"command", "source", "bias",   "solver", "policy",
                                        "rd",      "transform", "sweep", "output"};

json normalize_source(const json& raw) {
  check_keys(raw, {"family", "dimension", "params"}, "source");
  require(raw.contains("family"), "source.family is required");
  const std::string family = text(raw, "family", "", "source");
  try {
    family_from_string(family);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  const json params = raw.value("params", json::object());
  json out = {{"family", family}};
  json p = json::object();
  auto take = [&](std::initializer_list<std::pair<const char*, double>> fields) {
    std::set<std::string> allowed;
    for (const auto& [k, d] : fields) allowed.insert(k);
    check_keys(params, allowed, "source.params");
    for (const auto& [k, d] : fields) p[k] = number(params, k, d, "source.params");
  };
  const std::uint64_t dim = whole(raw, "dimension", family == "correlated-gaussian-2d" ? 2 : 0, "source");
  require(dim >= 1, "source.dimension is required and must be positive");
  if (family == "iid-gaussian") {
    take({{"mean", 0.0}, {"variance", 1.0}});
    require(p["variance"].get<double>() > 0.0, "source.params.variance must be positive");
  } else if (family == "iid-uniform") {
    take({{"lo", 0.0}, {"hi", 1.0}});
    require(p["hi"].get<double>() > p["lo"].get<double>(), "source.params needs lo < hi");
  } else if (family == "iid-exponential") {
    take({{"rate", 1.0}});
    require(p["rate"].get<double>() > 0.0, "source.params.rate must be positive");
  } else if (family == "iid-laplace") {
    take({{"location", 0.0}, {"scale", 1.0}});
    require(p["scale"].get<double>() > 0.0, "source.params.scale must be positive");
  } else if (family == "correlated-gaussian-2d") {
    take({{"mean1", 0.0}, {"mean2", 0.0}, {"var1", 1.0}, {"var2", 1.0}, {"covariance", 0.0}});
    require(dim == 2, "correlated-gaussian-2d has dimension 2");
    const double v1 = p["var1"], v2 = p["var2"], c = p["covariance"];
    require(v1 > 0.0 && v2 > 0.0, "source.params variances must be positive");
    require(c * c < v1 * v2, "source.params covariance must give a positive definite matrix");
  } else {
    check_keys(params, {"path"}, "source.params");
    require(params.contains("path") && params.at("path").is_string(),
            "source.params.path is required for tabulated densities");
    p["path"] = params.at("path");
  }
  out["dimension"] = dim;
  out["params"] = p;
  return out;
}

json normalize_solver(const json& raw) {
  check_keys(raw, {"K", "tolerance", "max_iterations", "damping", "samples", "seed", "grid_levels",
                   "init", "method", "algorithm", "deviation_samples", "restarts"},
             "solver");
  json s;
  s["K"] = whole(raw, "K", 2, "solver");
  s["tolerance"] = number(raw, "tolerance", 1e-8, "solver");
  s["max_iterations"] = whole(raw, "max_iterations", 500, "solver");
  s["damping"] = number(raw, "damping", 1.0, "solver");
  s["samples"] = whole(raw, "samples", 1'000'000, "solver");
  s["seed"] = whole(raw, "seed", 42, "solver");
  s["grid_levels"] = whole(raw, "grid_levels", 1024, "solver");
  s["init"] = text(raw, "init", "quantile", "solver");
  s["method"] = text(raw, "method", "automatic", "solver");
  s["algorithm"] = text(raw, "algorithm", "fixed-point", "solver");
  s["deviation_samples"] = whole(raw, "deviation_samples", 50'000, "solver");
  s["restarts"] = whole(raw, "restarts", 3, "solver");
  require(s["K"].get<std::uint64_t>() >= 1, "solver.K must be at least 1");
  require(s["tolerance"].get<double>() > 0.0, "solver.tolerance must be positive");
  require(s["max_iterations"].get<std::uint64_t>() >= 1, "solver.max_iterations must be positive");
  const double damping = s["damping"];
  require(damping > 0.0 && damping <= 1.0, "solver.damping must lie in (0, 1]");
  require(s["samples"].get<std::uint64_t>() >= 1000, "solver.samples must be at least 1000");
  require(s["grid_levels"].get<std::uint64_t>() >= 2, "solver.grid_levels must be at least 2");
  require(s["deviation_samples"].get<std::uint64_t>() >= 100, "solver.deviation_samples must be at least 100");
  const std::string init = s["init"], method = s["method"], algorithm = s["algorithm"];
  require(init == "quantile" || init == "random", "solver.init must be 'quantile' or 'random'");
  require(method == "automatic" || method == "monte-carlo" || method == "quadrature",
          "solver.method must be 'automatic', 'monte-carlo' or 'quadrature'");
  require(algorithm == "fixed-point" || algorithm == "scalar-shooting",
          "solver.algorithm must be 'fixed-point' or 'scalar-shooting'");
  return s;
}

json normalize_policy(const json& raw, std::size_t dim) {
  check_keys(raw, {"kind", "last_bins", "actions", "curve_points"}, "policy");
  json p;
  p["kind"] = text(raw, "kind", "reveal-plus-quantize", "policy");
  const std::string kind = p["kind"];
  require(kind == "quantizer" || kind == "reveal-plus-quantize" || kind == "linear" ||
              kind == "non-informative",
          "policy.kind must be 'quantizer', 'reveal-plus-quantize', 'linear' or 'non-informative'");
  p["last_bins"] = whole(raw, "last_bins", 1, "policy");
  p["curve_points"] = whole(raw, "curve_points", 11, "policy");
  require(p["last_bins"].get<std::uint64_t>() >= 1, "policy.last_bins must be at least 1");
  require(p["curve_points"].get<std::uint64_t>() >= 2, "policy.curve_points must be at least 2");
  json actions = json::array();
  if (kind == "quantizer") {
    require(raw.contains("actions") && raw.at("actions").is_array() && !raw.at("actions").empty(),
            "policy.actions must be a nonempty array of points");
    for (const auto& a : raw.at("actions")) {
      const auto v = number_list(a, "policy.actions entry");
      require(v.size() == dim, "policy.actions entries must have the source dimension");
      actions.push_back(v);
    }
  }
  p["actions"] = actions;
  if (kind == "linear") require(dim == 2, "policy.kind 'linear' needs a two-dimensional source");
  return p;
}

json normalize_rd(const json& raw) {
  check_keys(raw, {"variance", "bias", "rate_bits", "dimensions", "distortion", "team_rate",
                   "encoder_distortion", "decoder_distortion"},
             "rd");
  json r;
  r["variance"] = number(raw, "variance", 1.0, "rd");
  r["bias"] = number(raw, "bias", 0.0, "rd");
  r["rate_bits"] = whole(raw, "rate_bits", 1, "rd");
  require(r["variance"].get<double>() > 0.0, "rd.variance must be positive");
  const auto bits = r["rate_bits"].get<std::uint64_t>();
  require(bits >= 1 && bits <= 16, "rd.rate_bits must be 1..16");
  json dims = json::array();
  if (raw.contains("dimensions")) {
    require(raw.at("dimensions").is_array(), "rd.dimensions must be an array");
    for (const auto& d : raw.at("dimensions")) {
      require(d.is_number_integer() && d.get<std::int64_t>() >= 2, "rd.dimensions entries must be integers >= 2");
      dims.push_back(d.get<std::int64_t>());
    }
  }
  r["dimensions"] = dims;
  for (const char* key : {"distortion", "team_rate", "encoder_distortion", "decoder_distortion"})
    if (raw.contains(key)) r[key] = number(raw, key, 0.0, "rd");
  if (r.contains("distortion")) require(r["distortion"].get<double>() > 0.0, "rd.distortion must be positive");
  if (r.contains("team_rate")) require(r["team_rate"].get<double>() >= 0.0, "rd.team_rate must be nonnegative");
  require(r.contains("encoder_distortion") == r.contains("decoder_distortion"),
          "rd.encoder_distortion and rd.decoder_distortion go together");
  if (r.contains("encoder_distortion"))
    require(r["encoder_distortion"].get<double>() > 0.0 && r["decoder_distortion"].get<double>() > 0.0,
            "rd distortions must be positive");
  return r;
}

json normalize_transform(const json& raw, const json& bias) {
  check_keys(raw, {"kind", "n"}, "transform");
  json t;
  t["kind"] = text(raw, "kind", "pair", "transform");
  const std::string kind = t["kind"];
  require(kind == "pair" || kind == "helmert" || kind == "bias-aligning" || kind == "identity",
          "transform.kind must be 'pair', 'helmert', 'bias-aligning' or 'identity'");
  const std::uint64_t n = whole(raw, "n", bias.is_array() ? bias.size() : 0, "transform");
  if (kind == "pair" || kind == "bias-aligning")
    require(bias.is_array() && !bias.empty(), "transform '" + kind + "' needs a bias vector");
  if (kind == "pair") require(bias.size() == 2, "the pair transform needs a two-dimensional bias");
  require(n >= (kind == "identity" ? 1u : 2u), "transform.n is too small");
  if (bias.is_array() && !bias.empty()) require(bias.size() == n, "transform.n must match the bias length");
  t["n"] = n;
  return t;
}

json normalize_sweep(const json& raw, const json& base) {
  check_keys(raw, {"param", "values", "command"}, "sweep");
  require(raw.contains("param") && raw.at("param").is_string(), "sweep.param must be a dotted path");
  require(raw.contains("values") && raw.at("values").is_array() && !raw.at("values").empty(),
          "sweep.values must be a nonempty array");
  const std::string command = text(raw, "command", "solve", "sweep");
  require(command != "sweep" &&
              std::find(command_names().begin(), command_names().end(), command) != command_names().end(),
          "sweep.command must name a non-sweep command");
  json s = {{"param", raw.at("param")}, {"values", raw.at("values")}, {"command", command}};
  // Every generated configuration must be valid before anything runs.
  for (const auto& v : raw.at("values")) {
    json c = base;
    c.erase("sweep");
    set_dotted(c, raw.at("param").get<std::string>(), v);
    normalize_config(c, command);
  }
  return s;
}

}  // namespace

void set_dotted(json& config, const std::string& path, const json& value) {
  if (path.empty()) throw ConfigError("empty override path");
  json* node = &config;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError("malformed override path '" + path + "'");
    if (!node->is_object()) {
      if (!node->is_null()) throw ConfigError("override path '" + path + "' crosses a non-object");
      *node = json::object();
    }
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

json parse_override_value(const std::string& raw) {
  try {
    return json::parse(raw);
  } catch (const json::parse_error&) {
    return raw;
  }
}

json normalize_config(const json& raw, const std::string& command) {
  if (!raw.is_object()) throw ConfigError("configuration must be a JSON object");
  check_keys(raw, kTopKeys, "configuration");
  if (std::find(command_names().begin(), command_names().end(), command) == command_names().end())
    throw ConfigError("unknown command '" + command + "'");
  json out;
  out["command"] = command;

  const bool needs_source = command == "solve" || command == "verify" || command == "classify";
  std::size_t dim = 0;
  if (raw.contains("source")) {
    out["source"] = normalize_source(raw.at("source"));
    dim = out["source"]["dimension"].get<std::size_t>();
  } else if (needs_source) {
    throw ConfigError("command '" + command + "' needs a source block");
  }
  if (raw.contains("bias")) {
    out["bias"] = number_list(raw.at("bias"), "bias");
    if (dim) require(out["bias"].size() == dim, "bias length must equal source.dimension");
  } else if (needs_source) {
    throw ConfigError("command '" + command + "' needs a bias vector");
  }
  out["solver"] = normalize_solver(raw.value("solver", json::object()));
  if (command == "verify") out["policy"] = normalize_policy(raw.value("policy", json::object()), dim);
  if (command == "rd") out["rd"] = normalize_rd(raw.value("rd", json::object()));
  if (command == "transform")
    out["transform"] = normalize_transform(raw.value("transform", json::object()), out.value("bias", json()));
  if (command == "classify") require(dim == 2, "classify needs a two-dimensional source");
  if (command == "sweep") {
    require(raw.contains("sweep"), "command 'sweep' needs a sweep block");
    json base = raw;
    out["sweep"] = normalize_sweep(raw.at("sweep"), base);
    out["base"] = base;
    out["base"].erase("sweep");
    out["base"].erase("command");
  }
  if (raw.contains("output")) {
    check_keys(raw.at("output"), {"path", "csv"}, "output");
    json o = json::object();
    for (const char* key : {"path", "csv"})
      if (raw.at("output").contains(key)) o[key] = text(raw.at("output"), key, "", "output");
    out["output"] = o;
  }
  return out;
}

std::string config_hash(const json& config) {
  const std::string canonical = config.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------------------------
// Building library objects from a normalized config

namespace {

SourceModel build_source(const json& s) {
  const Family family = family_from_string(s["family"].get<std::string>());
  const auto n = s["dimension"].get<std::size_t>();
  const json& p = s["params"];
  switch (family) {
    case Family::iid_gaussian: return SourceModel::iid_gaussian(n, p["mean"], p["variance"]);
    case Family::iid_uniform: return SourceModel::iid_uniform(n, p["lo"], p["hi"]);
    case Family::iid_exponential: return SourceModel::iid_exponential(n, p["rate"]);
    case Family::iid_laplace: return SourceModel::iid_laplace(n, p["location"], p["scale"]);
    case Family::correlated_gaussian_2d:
      return SourceModel::correlated_gaussian_2d(p["mean1"], p["mean2"], p["var1"], p["var2"], p["covariance"]);
    case Family::tabulated_density: {
      const std::string path = p["path"];
      std::ifstream in(path);
      std::string header;
      if (!in || !std::getline(in, header)) throw InvalidArgument("cannot read density file '" + path + "'");
      if (header.find("x1") != std::string::npos) {
        if (n != 2) throw InvalidArgument("a 2D density file needs source.dimension = 2");
        return load_tabulated_2d(path);
      }
      return SourceModel::iid_tabulated(n, load_tabulated_1d(path));
    }
  }
  throw InvalidArgument("unsupported family");
}

Budget build_budget(const json& solver) {
  Budget b;
  b.samples = solver["samples"];
  b.seed = solver["seed"];
  const std::string method = solver["method"];
  b.method = method == "monte-carlo"  ? EstimationMethod::monte_carlo
             : method == "quadrature" ? EstimationMethod::quadrature
                                      : EstimationMethod::automatic;
  return b;
}

json estimate_json(const EstimateWithError& e) {
  json j;
  if (e.value.size() == 1)
    j["value"] = e.value[0];
  else
    j["value"] = e.value;
  j["stderr"] = e.std_error;
  if (e.component_std_error.size() > 1) j["component_stderr"] = e.component_std_error;
  j["samples"] = e.sample_count;
  return j;
}

json distortions_json(const Distortions& d) {
  return {{"encoder_per_dim", estimate_json(d.encoder)},
          {"decoder_per_dim", estimate_json(d.decoder)},
          {"encoder_minus_decoder", estimate_json(d.gap)},
          {"bias_norm_sq", d.bias_norm_sq},
          {"identity_holds", d.identity_holds}};
}

json certificate_json(const EquilibriumCertificate& c) {
  return {{"pass", c.pass()},
          {"min_pairwise_geo_slack", c.min_pairwise_geo_slack},
          {"slack_tolerance", c.slack_tolerance},
          {"pairs_checked", c.pairs_checked},
          {"pairs_sampled", c.pairs_sampled},
          {"slack_pass", c.slack_pass},
          {"centroid",
           {{"excess", c.centroid.excess},
            {"stderr", c.centroid.std_error},
            {"max_residual", c.centroid.max_residual},
            {"max_residual_stderr", c.centroid.max_residual_std_error},
            {"bins_checked", c.centroid.bins_checked},
            {"bins_skipped", c.centroid.bins_skipped},
            {"coarsened", c.centroid.coarsened},
            {"pass", c.centroid.pass}}},
          {"deviation_gain", estimate_json(c.deviation_gain)},
          {"deviation_pass", c.deviation_pass},
          {"distortions", distortions_json(c.distortions)},
          {"grid_levels", c.grid_levels}};
}

json points_json(const ActionSet& a) {
  json out = json::array();
  for (std::size_t k = 0; k < a.size(); ++k) out.push_back(std::vector<double>(a[k].begin(), a[k].end()));
  return out;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
    out.push_back(row);
  }
  return out;
}

std::string cell(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

std::string cell(std::size_t x) { return std::to_string(x); }

CsvTable actions_table(const ActionSet& a) {
  CsvTable t;
  t.header = {"index"};
  for (std::size_t i = 0; i < a.dimension(); ++i) t.header.push_back("u" + std::to_string(i + 1));
  for (std::size_t k = 0; k < a.size(); ++k) {
    std::vector<std::string> row = {cell(k)};
    for (double x : a[k]) row.push_back(cell(x));
    t.rows.push_back(row);
  }
  return t;
}

VerifyOptions verify_options(const json& solver) {
  VerifyOptions o;
  o.budget = build_budget(solver);
  o.deviation_samples = solver["deviation_samples"];
  return o;
}

CommandOutcome run_solve(const json& cfg) {
  const SourceModel source = build_source(cfg["source"]);
  const BiasVector b(cfg["bias"].get<std::vector<double>>());
  const json& solver = cfg["solver"];
  const auto bins = solver["K"].get<std::size_t>();
  CommandOutcome out;
  ActionSet actions;
  if (solver["algorithm"] == "scalar-shooting") {
    if (source.dimension() != 1) throw InvalidArgument("scalar shooting needs a one-dimensional source");
    try {
      const ScalarEquilibrium eq = solve_scalar_biased(source, b[0], bins);
      actions = eq.actions();
      out.result["thresholds"] = eq.codebook.thresholds;
      out.result["masses"] = eq.masses;
      out.result["shooting_residual"] = eq.residual;
    } catch (const Infeasible& e) {
      out.exit_code = kNumericalFailure;
      out.result = {{"status", "infeasible"}, {"error", e.what()}, {"max_feasible_bins", e.max_feasible()}};
      return out;
    }
  } else {
    SolverConfig sc;
    sc.tolerance = solver["tolerance"];
    sc.max_iterations = solver["max_iterations"];
    sc.damping = solver["damping"];
    sc.budget = build_budget(solver);
    sc.init = solver["init"] == "random" ? InitScheme::random : InitScheme::quantile;
    sc.max_restarts = solver["restarts"];
    FixedPointResult r;
    try {
      r = solve_fixed_point(source, b, bins, sc);
    } catch (const BinDeath& e) {
      out.exit_code = kNumericalFailure;
      out.result = {{"status", "bin-death"}, {"error", e.what()}, {"bin", e.index()}, {"mass", e.mass()}};
      return out;
    }
    out.result["iterations"] = r.iterations;
    out.result["restarts"] = r.restarts;
    out.result["final_damping"] = r.final_damping;
    out.result["final_movement"] = r.movement.empty() ? 0.0 : r.movement.back();
    if (!r.converged) {
      out.exit_code = kNumericalFailure;
      out.result["status"] = "not-converged";
      out.result["actions"] = points_json(r.actions);
      return out;
    }
    actions = r.actions;
  }
  out.result["status"] = "converged";
  out.result["actions"] = points_json(actions);
  const auto cert = verify_equilibrium(EncoderPolicy::quantizer(actions), source, b, verify_options(solver));
  out.result["certificate"] = certificate_json(cert);
  out.exit_code = cert.pass() ? kSuccess : kCheckFailed;
  out.csv = actions_table(actions);
  return out;
}

CommandOutcome run_verify(const json& cfg) {
  const SourceModel source = build_source(cfg["source"]);
  const BiasVector b(cfg["bias"].get<std::vector<double>>());
  const json& solver = cfg["solver"];
  const json& policy = cfg["policy"];
  const std::string kind = policy["kind"];
  CommandOutcome out;
  out.result["policy"] = kind;

  if (kind == "linear") {
    const auto report = verify_linear_equilibrium(source, b, build_budget(solver), policy["curve_points"]);
    json curve = json::array();
    CsvTable table;
    table.header = {"t", "value", "stderr", "samples", "window_width"};
    for (const auto& p : report.curve) {
      curve.push_back({{"t", p.t}, {"estimate", estimate_json(p.estimate)}, {"window_width", p.window_width}});
      table.rows.push_back({cell(p.t), cell(p.estimate.value[0]), cell(p.estimate.std_error),
                            cell(p.estimate.sample_count), cell(p.window_width)});
    }
    out.result["pass"] = report.pass();
    out.result["curve"] = curve;
    out.result["max_abs_z"] = report.max_abs_z;
    out.result["constant_curve"] = report.constant_curve;
    out.result["coverage"] = report.coverage;
    out.result["covers_support"] = report.covers_support;
    out.result["max_report_gap"] = report.max_report_gap;
    out.result["report_resolution"] = report.report_resolution;
    out.result["deviation_fraction"] = report.deviation_fraction;
    out.result["no_deviation"] = report.no_deviation;
    out.exit_code = report.pass() ? kSuccess : kCheckFailed;
    out.csv = table;
    return out;
  }

  EncoderPolicy p;
  if (kind == "quantizer") {
    std::vector<Point> pts;
    for (const auto& a : policy["actions"]) pts.push_back(a.get<std::vector<double>>());
    p = EncoderPolicy::quantizer(ActionSet(pts));
  } else if (kind == "non-informative") {
    p = EncoderPolicy::quantizer(ActionSet(std::vector<Point>{source.mean()}));
  } else {
    p = construct_reveal_plus_quantize(source, b, policy["last_bins"], solver["grid_levels"]);
  }
  const auto cert = verify_equilibrium(p, source, b, verify_options(solver));
  out.result["messages"] = p.message_count();
  out.result["certificate"] = certificate_json(cert);
  out.exit_code = cert.pass() ? kSuccess : kCheckFailed;
  if (p.kind() == EncoderPolicy::Kind::quantizer) out.csv = actions_table(p.actions());
  return out;
}

CommandOutcome run_classify(const json& cfg) {
  const SourceModel source = build_source(cfg["source"]);
  const BiasVector b(cfg["bias"].get<std::vector<double>>());
  const ClassificationVerdict v = source.family() == Family::correlated_gaussian_2d
                                      ? classify_correlated_gaussian(source, b)
                                      : classify_linear_existence(source, b, build_budget(cfg["solver"]));
  CommandOutcome out;
  out.result = {{"exists", to_string(v.exists)},
                {"theorem_case", to_string(v.theorem_case)},
                {"confidence", to_string(v.confidence)}};
  json evidence = json::object();
  if (v.symmetry_deviation) evidence["symmetry_deviation"] = *v.symmetry_deviation;
  if (v.curve_max_abs_z) evidence["curve_max_abs_z"] = *v.curve_max_abs_z;
  if (v.curve_max_deviation) evidence["curve_max_deviation"] = *v.curve_max_deviation;
  if (v.correlated_residual) evidence["correlated_residual"] = *v.correlated_residual;
  out.result["evidence"] = evidence;
  out.exit_code = v.exists == Existence::not_exists ? kCheckFailed : kSuccess;
  return out;
}

CommandOutcome run_rd(const json& cfg) {
  const json& rd = cfg["rd"];
  const double variance = rd["variance"], bias = rd["bias"];
  CommandOutcome out;
  if (rd.contains("distortion")) {
    const double d = rd["distortion"];
    const double r = team_rate_distortion(variance, d);
    out.result["team_rate"] = r;
    const double team_rate = rd.contains("team_rate") ? rd["team_rate"].get<double>() : r;
    const RDTuple t = achievable_tuple(team_rate, d, bias, variance);
    out.result["achievable"] = {{"rate", t.rate},
                                {"encoder_distortion", t.encoder_distortion},
                                {"decoder_distortion", t.decoder_distortion}};
  }
  if (rd.contains("encoder_distortion")) {
    const auto bound = game_rate_bound(variance, bias, rd["encoder_distortion"], rd["decoder_distortion"]);
    out.result["game_rate_bound"] = bound ? json(*bound) : json("infeasible");
  }
  const auto dims = rd["dimensions"].get<std::vector<std::size_t>>();
  if (!dims.empty()) {
    const json& solver = cfg["solver"];
    const auto rows = asymptotic_experiment(variance, bias, rd["rate_bits"], dims, solver["samples"], solver["seed"]);
    CsvTable table;
    table.header = {"n", "R", "Jd_emp", "Jd_stderr", "Je_emp", "Je_stderr", "Jd_exact"};
    json list = json::array();
    for (const auto& r : rows) {
      list.push_back({{"n", r.n},
                      {"R", r.rate},
                      {"Jd", estimate_json(r.decoder)},
                      {"Je", estimate_json(r.encoder)},
                      {"Je_minus_Jd", estimate_json(r.gap)},
                      {"Jd_exact", r.decoder_exact},
                      {"quantizer_distortion", r.quantizer_distortion}});
      table.rows.push_back({cell(r.n), cell(r.rate), cell(r.decoder.value[0]), cell(r.decoder.std_error),
                            cell(r.encoder.value[0]), cell(r.encoder.std_error), cell(r.decoder_exact)});
    }
    out.result["experiment"] = list;
    out.csv = table;
  }
  return out;
}

CommandOutcome run_transform(const json& cfg) {
  const json& t = cfg["transform"];
  const std::string kind = t["kind"];
  const auto n = t["n"].get<std::size_t>();
  const bool has_bias = cfg.contains("bias");
  const BiasVector b = has_bias ? BiasVector(cfg["bias"].get<std::vector<double>>()) : BiasVector();
  LinearTransform lt;
  if (kind == "pair")
    lt = pair_transform_2d(b);
  else if (kind == "bias-aligning")
    lt = bias_aligning_transform(b);
  else if (kind == "helmert")
    lt = has_bias ? helmert_transform(b) : helmert_transform(n);
  else
    lt = identity_transform(n);
  CommandOutcome out;
  std::vector<double> tb(lt.transformed_bias.data(), lt.transformed_bias.data() + lt.transformed_bias.size());
  out.result = {{"kind", lt.kind},
                {"n", lt.dimension()},
                {"forward", matrix_json(lt.forward)},
                {"inverse", matrix_json(lt.inverse)},
                {"transformed_bias", tb},
                {"scale", lt.scale},
                {"orthonormal", lt.orthonormal}};
  CsvTable table;
  table.header = {"matrix", "row"};
  for (std::size_t j = 0; j < lt.dimension(); ++j) table.header.push_back("c" + std::to_string(j + 1));
  for (const auto& [name, m] : {std::pair<const char*, const Eigen::MatrixXd*>{"forward", &lt.forward},
                                {"inverse", &lt.inverse}}) {
    for (Eigen::Index i = 0; i < m->rows(); ++i) {
      std::vector<std::string> row = {name, cell(static_cast<std::size_t>(i + 1))};
      for (Eigen::Index j = 0; j < m->cols(); ++j) row.push_back(cell((*m)(i, j)));
      table.rows.push_back(row);
    }
  }
  out.csv = table;
  return out;
}

CommandOutcome run_one(const json& cfg) {
  const std::string command = cfg["command"];
  try {
    if (command == "solve") return run_solve(cfg);
    if (command == "verify") return run_verify(cfg);
    if (command == "classify") return run_classify(cfg);
    if (command == "rd") return run_rd(cfg);
    if (command == "transform") return run_transform(cfg);
  } catch (const BinDeath& e) {
    return {kNumericalFailure, {{"status", "bin-death"}, {"error", e.what()}, {"bin", e.index()}}, {}};
  } catch (const Infeasible& e) {
    return {kNumericalFailure,
            {{"status", "infeasible"}, {"error", e.what()}, {"max_feasible_bins", e.max_feasible()}},
            {}};
  } catch (const BudgetExhausted& e) {
    return {kNumericalFailure, {{"status", "budget-exhausted"}, {"error", e.what()}}, {}};
  }
  throw ConfigError("unknown command '" + command + "'");
}

}  // namespace

CommandOutcome execute(const json& cfg) {
  if (cfg["command"] != "sweep") return run_one(cfg);
  const json& sweep = cfg["sweep"];
  CommandOutcome out;
  json runs = json::array();
  CsvTable table;
  table.header = {"value", "exit_code", "config_hash"};
  for (const auto& v : sweep["values"]) {
    json c = cfg["base"];
    set_dotted(c, sweep["param"].get<std::string>(), v);
    const json normalized = normalize_config(c, sweep["command"].get<std::string>());
    const CommandOutcome one = run_one(normalized);
    out.exit_code = std::max(out.exit_code, one.exit_code);
    const std::string hash = config_hash(normalized);
    runs.push_back({{"value", v}, {"exit_code", one.exit_code}, {"config_hash", hash}, {"result", one.result}});
    table.rows.push_back({v.dump(), std::to_string(one.exit_code), hash});
  }
  out.result = {{"param", sweep["param"]}, {"command", sweep["command"]}, {"runs", runs}};
  out.csv = table;
  return out;
}

void write_csv(const CsvTable& table, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write CSV file '" + path + "'");
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
    os << '\n';
  };
  line(table.header);
  for (const auto& r : table.rows) line(r);
}

int main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Equilibria of multi-dimensional quadratic cheap-talk games"};
  app.allow_extras();
  std::string command, config_path, csv_path, out_path;
  std::optional<std::uint64_t> seed;
  app.add_option("command", command, "solve | verify | classify | rd | transform | sweep")
      ->required()
      ->check(CLI::IsMember(command_names()));
  app.add_option("--config", config_path, "JSON configuration file")->required();
  app.add_option("--csv", csv_path, "write the command's table to this CSV file");
  app.add_option("--out", out_path, "append JSONL records here instead of stdout");
  app.add_option("--seed", seed, "seed for every estimator");
  app.footer("Any configuration leaf can be overridden with --section.key=value.\n"
             "CHEAPTALK_SEED overrides solver.seed from the file.");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kInvalidConfig;
  }

  json cfg;
  try {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot open configuration '" + config_path + "'");
    try {
      cfg = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("configuration is not valid JSON: ") + e.what());
    }
    if (!cfg.is_object()) throw ConfigError("configuration must be a JSON object");

    if (const char* env = std::getenv("CHEAPTALK_SEED")) {
      char* end = nullptr;
      const unsigned long long v = std::strtoull(env, &end, 10);
      if (!*env || *end) throw ConfigError("CHEAPTALK_SEED must be a nonnegative integer");
      set_dotted(cfg, "solver.seed", v);
    }
    if (seed) set_dotted(cfg, "solver.seed", *seed);

    const std::vector<std::string> extras = app.remaining();
    for (std::size_t i = 0; i < extras.size(); ++i) {
      const std::string& arg = extras[i];
      if (arg.rfind("--", 0) != 0 || arg.find('.') == std::string::npos)
        throw ConfigError("unexpected argument '" + arg + "'");
      const std::size_t eq = arg.find('=');
      std::string path, value;
      if (eq != std::string::npos) {
        path = arg.substr(2, eq - 2);
        value = arg.substr(eq + 1);
      } else {
        if (i + 1 >= extras.size()) throw ConfigError("override '" + arg + "' has no value");
        path = arg.substr(2);
        value = extras[++i];
      }
      set_dotted(cfg, path, parse_override_value(value));
    }
    cfg = normalize_config(cfg, command);
  } catch (const ConfigError& e) {
    err << "invalid configuration: " << e.what() << '\n';
    return kInvalidConfig;
  } catch (const InvalidArgument& e) {
    err << "invalid configuration: " << e.what() << '\n';
    return kInvalidConfig;
  }

  const auto start = std::chrono::steady_clock::now();
  CommandOutcome outcome;
  try {
    outcome = execute(cfg);
  } catch (const ConfigError& e) {
    err << "invalid configuration: " << e.what() << '\n';
    return kInvalidConfig;
  } catch (const InvalidArgument& e) {
    err << "invalid configuration: " << e.what() << '\n';
    return kInvalidConfig;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumericalFailure;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  json record = {{"command", command},
                 {"config_hash", config_hash(cfg)},
                 {"exit_code", outcome.exit_code},
                 {"result", outcome.result},
                 {"wall_clock_seconds", seconds}};
  if (out_path.empty() && cfg.contains("output") && cfg["output"].contains("path")) out_path = cfg["output"]["path"];
  if (csv_path.empty() && cfg.contains("output") && cfg["output"].contains("csv")) csv_path = cfg["output"]["csv"];
  try {
    if (out_path.empty()) {
      out << record.dump() << '\n';
    } else {
      std::ofstream os(out_path, std::ios::app);
      if (!os) throw std::runtime_error("cannot write records to '" + out_path + "'");
      os << record.dump() << '\n';
    }
    if (!csv_path.empty() && outcome.csv) write_csv(*outcome.csv, csv_path);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kNumericalFailure;
  }
  if (outcome.exit_code != kSuccess && outcome.result.contains("error"))
    err << outcome.result["error"].get<std::string>() << '\n';
  return outcome.exit_code;
}

}  // namespace cheaptalk::cli
