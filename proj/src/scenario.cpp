#include "fraclab/scenario.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "fraclab/blowup.hpp"
#include "fraclab/harmonics.hpp"

namespace fraclab {

using nlohmann::json;

std::string to_string(InstanceConfig::Kind k) {
  switch (k) {
    case InstanceConfig::Kind::signorini_32: return "signorini_32";
    case InstanceConfig::Kind::solid_harmonic: return "solid_harmonic";
    case InstanceConfig::Kind::zero: return "zero";
    case InstanceConfig::Kind::obstacle: return "obstacle";
  }
  return "?";
}

GridSpec GridConfig::build(int n) const {
  const double hx = 2.0 * half_width / (nx - 1);
  if (ny) return GridSpec::uniform(n, half_width, nx, height, *ny);
  return GridSpec::graded(n, half_width, nx, height, hy_max.value_or(hx), ratio,
                          y_first.value_or(std::min(1e-3, hx / 8)));
}

namespace {

// Every object is checked against its list of known keys so that a misspelt option is an
// error instead of a silently ignored default.
void allow_keys(const json& obj, const std::string& where, std::set<std::string> keys) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [k, v] : obj.items())
    if (!keys.count(k)) throw ConfigError(where + ": unknown key \"" + k + "\"");
}

template <class T>
T get(const json& obj, const std::string& key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

template <class T>
void maybe(const json& obj, const std::string& key, const std::string& where, T& out) {
  if (obj.contains(key)) out = get<T>(obj, key, where);
}

template <class T>
void maybe(const json& obj, const std::string& key, const std::string& where,
           std::optional<T>& out) {
  if (obj.contains(key)) out = get<T>(obj, key, where);
}

MultiIndex read_beta(const json& t, int n, const std::string& where) {
  auto beta = get<MultiIndex>(t, "beta", where);
  if (static_cast<int>(beta.size()) != n)
    throw ConfigError(where + ".beta: expected " + std::to_string(n) + " entries");
  for (int b : beta)
    if (b < 0) throw ConfigError(where + ".beta: negative exponent");
  return beta;
}

// [{"beta": [...], "coef": c}, ...]
Polynomial read_trace(const json& arr, int n, const std::string& where) {
  if (!arr.is_array()) throw ConfigError(where + ": expected a list of terms");
  Polynomial q(n);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string w = where + "[" + std::to_string(i) + "]";
    allow_keys(arr[i], w, {"beta", "coef"});
    q.add_term(read_beta(arr[i], n, w), 0, get<double>(arr[i], "coef", w));
  }
  return q;
}

std::map<MultiIndex, double> read_coefficients(const json& arr, int n, const std::string& where) {
  std::map<MultiIndex, double> out;
  const Polynomial q = read_trace(arr, n, where);
  for (const auto& [key, c] : q.terms()) out[key.first] += c;
  return out;
}

void read_grid(const json& g, GridConfig& out) {
  allow_keys(g, "grid", {"half_width", "nx", "height", "ny", "hy_max", "ratio", "y_first"});
  maybe(g, "half_width", "grid", out.half_width);
  maybe(g, "nx", "grid", out.nx);
  maybe(g, "height", "grid", out.height);
  maybe(g, "ny", "grid", out.ny);
  maybe(g, "hy_max", "grid", out.hy_max);
  maybe(g, "ratio", "grid", out.ratio);
  maybe(g, "y_first", "grid", out.y_first);
  if (!(out.half_width > 0 && out.height > 0)) throw ConfigError("grid: sizes must be positive");
  if (out.nx < 5 || out.nx % 2 == 0) throw ConfigError("grid.nx: must be odd and at least 5");
  if (out.ny && *out.ny < 8) throw ConfigError("grid.ny: at least 8 nodes");
}

void read_instance(const json& j, int n, InstanceConfig& out) {
  const std::string kind = get<std::string>(j, "kind", "instance");
  if (kind == "signorini_32") {
    allow_keys(j, "instance", {"kind"});
    out.kind = InstanceConfig::Kind::signorini_32;
  } else if (kind == "zero") {
    allow_keys(j, "instance", {"kind"});
    out.kind = InstanceConfig::Kind::zero;
  } else if (kind == "solid_harmonic") {
    allow_keys(j, "instance", {"kind", "trace", "kappa"});
    out.kind = InstanceConfig::Kind::solid_harmonic;
    if (!j.contains("trace")) throw ConfigError("instance.trace: required for solid_harmonic");
    out.trace = read_trace(j["trace"], n, "instance.trace");
    if (out.trace.is_zero()) throw ConfigError("instance.trace: empty");
    maybe(j, "kappa", "instance", out.kappa);
    const auto deg = out.trace.homogeneous_degree();
    if (!deg) throw ConfigError("instance.trace: not homogeneous");
    if (out.kappa && *out.kappa != *deg)
      throw ConfigError("instance.kappa: trace has degree " + std::to_string(*deg));
    out.kappa = *deg;
  } else if (kind == "obstacle") {
    allow_keys(j, "instance", {"kind", "obstacle", "boundary_trace"});
    out.kind = InstanceConfig::Kind::obstacle;
    if (!j.contains("obstacle")) throw ConfigError("instance.obstacle: required");
    const auto& o = j["obstacle"];
    allow_keys(o, "instance.obstacle", {"kind", "coefficients", "k", "gamma"});
    out.obstacle_kind = get<std::string>(o, "kind", "instance.obstacle");
    maybe(o, "k", "instance.obstacle", out.k);
    maybe(o, "gamma", "instance.obstacle", out.gamma);
    if (out.k < 0 || !(out.gamma > 0 && out.gamma <= 1))
      throw ConfigError("instance.obstacle: need k >= 0 and 0 < gamma <= 1");
    if (out.obstacle_kind == "polynomial") {
      if (o.contains("coefficients"))
        out.obstacle_coefficients = read_coefficients(o["coefficients"], n, "instance.obstacle.coefficients");
    } else if (out.obstacle_kind != "sine") {
      throw ConfigError("instance.obstacle.kind: expected polynomial or sine");
    }
    out.boundary_trace = Polynomial(n);
    if (j.contains("boundary_trace"))
      out.boundary_trace = read_trace(j["boundary_trace"], n, "instance.boundary_trace");
  } else {
    throw ConfigError("instance.kind: unknown instance \"" + kind + "\"");
  }
}

void read_solver(const json& j, SolverOptions& out, CoordinateMode& mode) {
  allow_keys(j, "solver", {"omega", "tol", "compl_tol", "max_iter", "check_every", "order", "mode"});
  maybe(j, "omega", "solver", out.omega);
  maybe(j, "tol", "solver", out.tol);
  maybe(j, "compl_tol", "solver", out.compl_tol);
  maybe(j, "max_iter", "solver", out.max_iter);
  maybe(j, "check_every", "solver", out.check_every);
  if (j.contains("order")) {
    const auto o = get<std::string>(j, "order", "solver");
    if (o == "red_black") out.order = SweepOrder::red_black;
    else if (o == "symmetric") out.order = SweepOrder::symmetric;
    else throw ConfigError("solver.order: expected red_black or symmetric");
  }
  if (j.contains("mode")) {
    const auto m = get<std::string>(j, "mode", "solver");
    if (m == "extension") mode = CoordinateMode::extension;
    else if (m == "grushin") mode = CoordinateMode::grushin;
    else throw ConfigError("solver.mode: expected extension or grushin");
  }
  if (!(out.tol > 0 && out.compl_tol > 0) || out.max_iter < 1 || out.check_every < 1 ||
      out.omega >= 2.0)
    throw ConfigError("solver: need tol, compl_tol > 0, max_iter, check_every >= 1, omega < 2");
}

void read_functionals(const json& j, FunctionalConfig& out) {
  allow_keys(j, "functionals", {"theta", "C0", "r0", "r_min", "r_max", "count", "slack"});
  maybe(j, "theta", "functionals", out.theta);
  maybe(j, "C0", "functionals", out.C0);
  maybe(j, "r0", "functionals", out.r0);
  maybe(j, "r_min", "functionals", out.r_min);
  maybe(j, "r_max", "functionals", out.r_max);
  maybe(j, "count", "functionals", out.count);
  maybe(j, "slack", "functionals", out.slack);
  if (!(out.r_min > 0 && out.r_max > out.r_min) || out.count < 3 || out.slack < 0)
    throw ConfigError("functionals: need 0 < r_min < r_max, count >= 3, slack >= 0");
}

void read_analyses(const json& j, int n, AnalysisConfig& out) {
  allow_keys(j, "analyses", {"x0", "functionals", "kappa", "monneau_trace", "tol_regular",
                             "tol_singular", "neighbour_radius", "C_M", "max_points", "verify"});
  if (j.contains("x0")) {
    out.x0 = get<std::vector<std::vector<double>>>(j, "x0", "analyses");
    for (const auto& p : out.x0)
      if (static_cast<int>(p.size()) != n) throw ConfigError("analyses.x0: point of wrong dimension");
  }
  maybe(j, "functionals", "analyses", out.functionals);
  maybe(j, "kappa", "analyses", out.kappa);
  if (j.contains("monneau_trace"))
    out.monneau_trace = read_trace(j["monneau_trace"], n, "analyses.monneau_trace");
  maybe(j, "tol_regular", "analyses", out.tol_regular);
  maybe(j, "tol_singular", "analyses", out.tol_singular);
  maybe(j, "neighbour_radius", "analyses", out.neighbour_radius);
  maybe(j, "C_M", "analyses", out.C_M);
  maybe(j, "max_points", "analyses", out.max_points);
  maybe(j, "verify", "analyses", out.verify_suites);
  for (const auto& s : out.verify_suites)
    if (s != "identities" && s != "harmonics" && s != "grushin" && s != "quadrature")
      throw ConfigError("analyses.verify: unknown suite \"" + s + "\"");
  if (out.max_points < 1) throw ConfigError("analyses.max_points: must be positive");
  try {
    (void)ProfileRequest::parse(out.functionals);
  } catch (const Error& e) {
    throw ConfigError(std::string("analyses.functionals: ") + e.what());
  }
}

std::string fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

BoundaryData polynomial_data(const Polynomial& p) {
  return [p](const Point& q) { return p.evaluate(std::span<const double>(q.x.data(), p.n()), q.y); };
}

}  // namespace

Scenario Scenario::parse(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  allow_keys(root, "scenario",
             {"name", "s", "alpha", "n", "grid", "instance", "solver", "functionals", "analyses"});

  Scenario sc;
  sc.name = get<std::string>(root, "name", "scenario");
  const int n = get<int>(root, "n", "scenario");
  if (n < 1 || n > 2) throw ConfigError("scenario.n: solves support n = 1 or 2");
  if (root.contains("s") == root.contains("alpha"))
    throw ConfigError("scenario: give exactly one of s and alpha");
  try {
    sc.params = root.contains("s") ? WeightParams::from_s(get<double>(root, "s", "scenario"), n)
                                   : WeightParams::from_alpha(get<double>(root, "alpha", "scenario"), n);
  } catch (const Error& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }

  if (root.contains("grid")) read_grid(root["grid"], sc.grid);
  if (!root.contains("instance")) throw ConfigError("scenario.instance: required");
  read_instance(root["instance"], n, sc.instance);
  if (sc.instance.kind == InstanceConfig::Kind::signorini_32 &&
      std::abs(sc.params.s - 0.5) > 1e-14)
    throw ConfigError("instance signorini_32 needs s = 1/2");
  sc.solver.omega = 0.0;
  if (root.contains("solver")) read_solver(root["solver"], sc.solver, sc.mode);
  sc.functional = FunctionalConfig::defaults(sc.instance.gamma);
  if (root.contains("functionals")) read_functionals(root["functionals"], sc.functional);
  if (root.contains("analyses")) read_analyses(root["analyses"], n, sc.analyses);
  if (sc.analyses.x0.empty()) sc.analyses.x0.push_back(std::vector<double>(n, 0.0));

  sc.canonical = root.dump();
  sc.hash = fnv1a(sc.canonical);
  return sc;
}

Scenario Scenario::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read scenario file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

ObstacleSpec Scenario::obstacle() const {
  const int n = params.n;
  switch (instance.kind) {
    case InstanceConfig::Kind::zero:
      return ObstacleSpec::polynomial(n, {{MultiIndex(n, 0), -1.0}}, 2, 0.5);
    case InstanceConfig::Kind::obstacle:
      if (instance.obstacle_kind == "sine") return ObstacleSpec::sine(n, instance.k, instance.gamma);
      return ObstacleSpec::polynomial(n, instance.obstacle_coefficients, instance.k, instance.gamma);
    default:
      return ObstacleSpec::polynomial(n, {}, 2, 0.5);
  }
}

BoundaryData Scenario::boundary() const {
  switch (instance.kind) {
    case InstanceConfig::Kind::signorini_32:
      return [](const Point& p) { return signorini_value(p.x[0], p.y); };
    case InstanceConfig::Kind::solid_harmonic:
      return polynomial_data(extend_la_harmonic(instance.trace, params).poly);
    case InstanceConfig::Kind::obstacle:
      return polynomial_data(extend_polynomial(instance.boundary_trace, params));
    case InstanceConfig::Kind::zero:
      break;
  }
  return [](const Point&) { return 0.0; };
}

std::optional<BoundaryData> Scenario::exact_solution() const {
  switch (instance.kind) {
    case InstanceConfig::Kind::obstacle: return std::nullopt;
    default: return boundary();
  }
}

ThinObstacleProblem Scenario::problem() const {
  const auto g = grid_spec();
  const auto obs = obstacle();
  ThinObstacleProblem pr{params, g, thin_samples(g, [&](std::span<const double> x) { return obs.value(x); }),
                         boundary(), mode};
  pr.validate();
  return pr;
}

std::optional<SolidHarmonic> Scenario::monneau_polynomial() const {
  if (analyses.monneau_trace) {
    const auto deg = analyses.monneau_trace->homogeneous_degree();
    if (!deg) throw ConfigError("analyses.monneau_trace: not homogeneous");
    return extend_la_harmonic(*analyses.monneau_trace, params);
  }
  if (instance.kind == InstanceConfig::Kind::solid_harmonic)
    return extend_la_harmonic(instance.trace, params);
  return std::nullopt;
}

double Scenario::default_kappa() const {
  if (analyses.kappa) return *analyses.kappa;
  switch (instance.kind) {
    case InstanceConfig::Kind::solid_harmonic: return *instance.kappa;
    case InstanceConfig::Kind::signorini_32: return 1.5;
    default: return 1.0 + params.s;
  }
}

ClassifyConfig Scenario::classify_config() const {
  ClassifyConfig c;
  c.frequency.functional = functional;
  c.frequency.k = instance.k;
  c.frequency.gamma = instance.gamma;
  const auto obs = obstacle();
  const bool flat = instance.kind != InstanceConfig::Kind::obstacle ||
                    (obs.kind() == ObstacleSpec::Kind::polynomial && obs.coefficients().empty());
  c.frequency.generalized = !flat;
  c.tol_regular = analyses.tol_regular;
  c.tol_singular = analyses.tol_singular;
  return c;
}

std::string Scenario::header(const std::string& command) const {
  const auto g = grid_spec();
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "fraclab %s scenario=%s hash=%s\n"
                "n=%d s=%.17g a=%.17g instance=%s grid=[L=%.17g nx=%d Y=%.17g ny=%d] "
                "solver=[omega=%.17g tol=%.3g compl_tol=%.3g order=%s mode=%s] "
                "functionals=[theta=%.17g C0=%.17g r=%.6g..%.6g x%d]",
                command.c_str(), name.c_str(), hash.c_str(), params.n, params.s, params.a,
                to_string(instance.kind).c_str(), g.half_width(), g.nx(), g.height(), g.ny(),
                solver.omega, solver.tol, solver.compl_tol,
                solver.order == SweepOrder::red_black ? "red_black" : "symmetric",
                to_string(mode).c_str(), functional.theta, functional.C0, functional.r_min,
                functional.r_max, functional.count);
  return buf;
}

}  // namespace fraclab
