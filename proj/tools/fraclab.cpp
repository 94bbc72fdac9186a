// fraclab: scenario runner for the thin obstacle toolkit.
//
//   fraclab solve|profile|blowup|classify|verify --scenario FILE --out DIR
//           [--x0 x1[,x2]]... [--functionals N,W,M,Phi] [--suite NAME]... [--inject-fault CHECK]
//
// Exit codes: 0 success, 1 configuration or request error, 2 solver non-convergence or a
// failed verification check, 3 missing or stale solve artifacts.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "fraclab/blowup.hpp"
#include "fraclab/functionals.hpp"
#include "fraclab/parallel.hpp"
#include "fraclab/scenario.hpp"
#include "fraclab/solver.hpp"
#include "fraclab/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fraclab;

namespace {

enum Exit { kOk = 0, kConfig = 1, kNumerical = 2, kArtifacts = 3 };

struct ArtifactError : Error {
  using Error::Error;
};

struct Options {
  std::string scenario, out, functionals, fault;
  std::vector<std::string> x0, suites;
};

void write_comment(std::ostream& os, const std::string& header) {
  std::istringstream in(header);
  for (std::string line; std::getline(in, line);) os << "# " << line << '\n';
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_json(const fs::path& path, const Scenario& sc, const std::string& command, json body) {
  body["header"] = sc.header(command);
  body["scenario_hash"] = sc.hash;
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << body.dump(2) << '\n';
}

std::vector<std::vector<double>> centres(const Scenario& sc, const Options& opt) {
  if (opt.x0.empty()) return sc.analyses.x0;
  std::vector<std::vector<double>> pts;
  for (const auto& s : opt.x0) {
    std::vector<double> p;
    std::stringstream ss(s);
    for (std::string tok; std::getline(ss, tok, ',');) {
      try {
        p.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw ConfigError("--x0: cannot parse \"" + s + "\"");
      }
    }
    if (static_cast<int>(p.size()) != sc.params.n)
      throw ConfigError("--x0: expected " + std::to_string(sc.params.n) + " coordinates in \"" + s + "\"");
    pts.push_back(std::move(p));
  }
  return pts;
}

std::string point_suffix(std::size_t i, std::size_t count) {
  return count == 1 ? "" : "_p" + std::to_string(i);
}

// ------------------------------------------------------------------ solve

int cmd_solve(const Scenario& sc, const fs::path& out) {
  const auto pr = sc.problem();
  const auto res = psor_solve(pr, sc.solver);
  const auto& g = pr.grid;
  const int n = g.n();
  const int n2 = n == 2 ? g.nx() : 1;
  const std::string header = sc.header("solve");

  res.field->write_csv((out / "field.csv").string(), header);

  std::ofstream thin(out / "thin.csv"), contact(out / "contact.csv");
  if (!thin || !contact) throw Error("cannot write to " + out.string());
  write_comment(thin, header);
  write_comment(contact, header);
  thin << (n == 1 ? "x1" : "x1,x2") << ",phi,u,lambda,contact\n";
  contact << (n == 1 ? "x1" : "x1,x2") << '\n';
  std::size_t n_contact = 0;
  for (int i2 = 0; i2 < n2; ++i2)
    for (int i1 = 0; i1 < g.nx(); ++i1) {
      const auto t = g.thin_index(i1, i2);
      std::string x = fmt(g.x_node(i1));
      if (n == 2) x += "," + fmt(g.x_node(i2));
      const double lam = res.lambda[t];
      thin << x << ',' << fmt(pr.phi[t]) << ',' << fmt(res.field->node(i1, i2, 0)) << ','
           << (std::isfinite(lam) ? fmt(lam) : "") << ',' << int(res.contact[t]) << '\n';
      if (res.contact[t]) {
        contact << x << '\n';
        ++n_contact;
      }
    }

  json body = {{"command", "solve"},
               {"converged", res.converged},
               {"iterations", res.iterations},
               {"residual", res.residual},
               {"complementarity", res.complementarity},
               {"omega", res.omega},
               {"max_principle_ok", res.max_principle_ok},
               {"contact_nodes", n_contact},
               {"note", res.note}};
  if (const auto exact = sc.exact_solution()) {
    double sup = 0.0, ref = 0.0;
    const auto& y = g.y_nodes();
    for (int i2 = 0; i2 < n2; ++i2)
      for (int i1 = 0; i1 < g.nx(); ++i1)
        for (int j = 0; j < g.ny(); ++j) {
          Point p;
          p.x[0] = g.x_node(i1);
          if (n == 2) p.x[1] = g.x_node(i2);
          p.y = y[j];
          const double e = (*exact)(p);
          sup = std::max(sup, std::abs(res.field->node(i1, i2, j) - e));
          ref = std::max(ref, std::abs(e));
        }
    body["exact"] = {{"sup_error", sup}, {"sup_norm", ref}};
  }
  write_json(out / "solve.json", sc, "solve", body);
  std::printf("solve: %s after %d sweeps, residual %.3g, complementarity %.3g, %zu contact nodes\n",
              res.converged ? "converged" : "NOT converged", res.iterations, res.residual,
              res.complementarity, n_contact);
  return res.converged ? kOk : kNumerical;
}

// Reloads the field written by `solve`, with its contact mask and Neumann trace.
std::shared_ptr<GridField> load_solution(const Scenario& sc, const fs::path& out) {
  const auto field = out / "field.csv", thin = out / "thin.csv", meta = out / "solve.json";
  for (const auto& p : {field, thin, meta})
    if (!fs::exists(p)) throw ArtifactError("missing solve artifact " + p.string() + "; run solve first");
  json m;
  try {
    std::ifstream in(meta);
    m = json::parse(in);
  } catch (const json::exception& e) {
    throw ArtifactError(meta.string() + ": " + e.what());
  }
  if (m.value("scenario_hash", "") != sc.hash)
    throw ArtifactError("solve artifacts in " + out.string() + " belong to another scenario");
  if (!m.value("converged", false))
    throw ArtifactError("solve artifacts in " + out.string() + " come from a non-converged solve");

  const auto g = sc.grid_spec();
  std::shared_ptr<GridField> u;
  try {
    u = std::make_shared<GridField>(GridField::read_csv(g, field.string()));
  } catch (const Error& e) {
    throw ArtifactError(e.what());
  }
  std::vector<std::uint8_t> mask;
  std::vector<double> lambda;
  std::ifstream in(thin);
  bool header_seen = false;
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string tok; std::getline(ss, tok, ',');) cols.push_back(tok);
    if (line.back() == ',') cols.emplace_back();
    if (cols.size() < 4) throw ArtifactError(thin.string() + ": short row");
    const auto& lam = cols[cols.size() - 2];
    lambda.push_back(lam.empty() ? std::nan("") : std::stod(lam));
    mask.push_back(cols.back() == "1");
  }
  if (mask.size() != g.thin_size()) throw ArtifactError(thin.string() + ": node count mismatch");
  u->contact_mask = std::move(mask);
  u->neumann_trace = std::move(lambda);
  return u;
}

// ---------------------------------------------------------------- profile

json verdict_json(const Verdict& v, double slack) {
  return {{"pass", v.pass},
          {"worst_violation", v.worst_violation},
          {"r_star", v.r_star},
          {"slack", slack},
          {"detail", v.detail}};
}

int cmd_profile(const Scenario& sc, const Options& opt, const fs::path& out) {
  const auto u = load_solution(sc, out);
  ProfileRequest req;
  try {
    req = ProfileRequest::parse(opt.functionals.empty() ? sc.analyses.functionals : opt.functionals);
  } catch (const Error& e) {
    throw ConfigError(std::string("--functionals: ") + e.what());
  }
  req.kappa = sc.default_kappa();
  req.k = sc.instance.k;
  req.gamma = sc.instance.gamma;
  req.phi = sc.functional;
  if (req.want_M) {
    req.monneau_p = sc.monneau_polynomial();
    if (!req.monneau_p)
      throw ConfigError("profile M needs analyses.monneau_trace for this instance");
    req.kappa = req.monneau_p->degree;
  }
  if (req.want_Phi) sc.functional.validate(req.gamma);

  const auto obstacle = sc.obstacle();
  const FunctionalEngine engine(sc.params);
  const auto radii = sc.functional.radii();
  const double h = u->spec().hx();
  const double slack_c = kSlackC;
  const double slack = std::max(sc.functional.slack, slack_c * h * h);
  const bool flat = !sc.classify_config().frequency.generalized;
  const auto pts = centres(sc, opt);
  const double origin[3] = {0, 0, 0};

  json points = json::array();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const ObstacleNormalizedField v(u, obstacle, pts[i], sc.instance.k, sc.params);
    const auto rows =
        compute_profile(engine, v, std::span<const double>(origin, sc.params.n), radii, req);
    const std::string sfx = point_suffix(i, pts.size());
    std::string header = sc.header("profile");
    header += "\nx0=";
    for (std::size_t d = 0; d < pts[i].size(); ++d) header += (d ? "," : "") + fmt(pts[i][d]);
    header += " kappa=" + fmt(req.kappa) + " slack=" + fmt(slack);
    write_profile_csv((out / ("profile" + sfx + ".csv")).string(), header, rows, req);

    json verdicts = json::object();
    bool any_truncated = false;
    for (const std::string name : {"N", "W", "M", "Phi"}) {
      const bool want = (name == "N" && req.want_N) || (name == "W" && req.want_W) ||
                        (name == "M" && req.want_M) || (name == "Phi" && req.want_Phi);
      if (!want) continue;
      std::ofstream f(out / ("profile_" + name + sfx + ".csv"));
      if (!f) throw Error("cannot write profile CSV");
      write_comment(f, header);
      const std::string col = name == "W" ? "W_kappa" : name == "M" ? "M_kappa" : name;
      f << "r,H,D," << col << (name == "Phi" ? ",Phi_truncated" : "") << '\n';
      for (const auto& r : rows) {
        const double val = name == "N" ? r.N : name == "W" ? r.W : name == "M" ? r.M : r.Phi;
        f << fmt(r.r) << ',' << fmt(r.H) << ',' << fmt(r.D) << ',' << fmt(val);
        if (name == "Phi") f << ',' << int(r.truncated);
        f << '\n';
        any_truncated = any_truncated || (name == "Phi" && r.truncated);
      }
      const auto prof = column(rows, col);
      verdicts[name] = verdict_json(monotonicity_report(prof, slack), slack);
      if (name == "M" && !flat)
        verdicts["M_drift"] =
            verdict_json(monneau_drift_check(prof, req.gamma, sc.analyses.C_M, slack), slack);
    }
    points.push_back({{"x0", pts[i]}, {"verdicts", verdicts}, {"Phi_truncated_any", any_truncated}});
  }
  write_json(out / "verdicts.json", sc, "profile",
             {{"command", "profile"},
              {"slack_c", slack_c},
              {"grid_h", h},
              {"kappa", req.kappa},
              {"radii", radii},
              {"points", points}});
  std::printf("profile: %zu point(s), %zu radii\n", pts.size(), radii.size());
  return kOk;
}

// ------------------------------------------------------- blowup, classify

BlowupReport failed_report(const std::vector<double>& x0, const std::string& why) {
  BlowupReport r;
  r.x0 = x0;
  r.kind = BlowupReport::Kind::undetermined;
  r.detail = why;
  return r;
}

// Classification of each point; points where the pipeline cannot run are reported as
// undetermined with the reason instead of aborting the whole batch.
std::vector<BlowupReport> run_reports(const Scenario& sc, std::shared_ptr<const GridField> u,
                                      const std::vector<std::vector<double>>& pts,
                                      const FunctionalEngine& engine) {
  const auto obstacle = sc.obstacle();
  const auto cfg = sc.classify_config();
  std::vector<BlowupReport> reports(pts.size());
  parallel_for(pts.size(), [&](std::size_t i) {
    try {
      reports[i] = classify(u, obstacle, pts[i], sc.params, cfg, engine);
    } catch (const Error& e) {
      reports[i] = failed_report(pts[i], e.what());
    }
  });
  return reports;
}

json reports_json(const std::vector<BlowupReport>& reports) {
  json arr = json::array();
  for (const auto& r : reports) arr.push_back(json::parse(to_json(r)));
  return arr;
}

int cmd_blowup(const Scenario& sc, const Options& opt, const fs::path& out) {
  const auto u = load_solution(sc, out);
  const FunctionalEngine engine(sc.params);
  const auto reports = run_reports(sc, u, centres(sc, opt), engine);
  write_json(out / "blowup.json", sc, "blowup",
             {{"command", "blowup"}, {"reports", reports_json(reports)}});
  for (const auto& r : reports)
    std::printf("blowup: kappa_hat %.6f  %s\n", r.frequency.kappa_hat, to_string(r.kind).c_str());
  return kOk;
}

int cmd_classify(const Scenario& sc, const fs::path& out) {
  const auto u = load_solution(sc, out);
  const FunctionalEngine engine(sc.params);
  const auto all = free_boundary_nodes(*u);
  std::vector<std::vector<double>> pts;
  const std::size_t cap = static_cast<std::size_t>(sc.analyses.max_points);
  if (all.size() <= cap) {
    pts = all;
  } else {
    for (std::size_t i = 0; i < cap; ++i) pts.push_back(all[i * all.size() / cap]);
  }
  const auto reports = run_reports(sc, u, pts, engine);
  const auto table = stratify(reports, engine, sc.analyses.neighbour_radius);
  write_strata_csv((out / "strata.csv").string(), sc.header("classify"), reports, table);

  json counts = json::object();
  for (const auto& r : reports) counts[to_string(r.kind)] = counts.value(to_string(r.kind), 0) + 1;
  json groups = json::array();
  for (const auto& [key, idx] : table.groups)
    groups.push_back({{"m", key.first}, {"d", key.second}, {"count", idx.size()}});
  write_json(out / "classify.json", sc, "classify",
             {{"command", "classify"},
              {"free_boundary_nodes", all.size()},
              {"classified", pts.size()},
              {"counts", counts},
              {"strata", groups},
              {"reports", reports_json(reports)}});
  std::printf("classify: %zu free-boundary node(s), %zu classified, %zu strata group(s)\n",
              all.size(), pts.size(), table.groups.size());
  return kOk;
}

// ----------------------------------------------------------------- verify

int cmd_verify(const Scenario& sc, const Options& opt, const fs::path& out) {
  const auto suites = opt.suites.empty() ? sc.analyses.verify_suites : opt.suites;
  const auto known = verify_suites();
  for (const auto& s : suites)
    if (std::find(known.begin(), known.end(), s) == known.end())
      throw ConfigError("--suite: unknown suite \"" + s + "\"");
  if (!opt.fault.empty()) {
    const auto names = verify_check_names();
    if (std::find(names.begin(), names.end(), opt.fault) == names.end())
      throw ConfigError("--inject-fault: unknown check \"" + opt.fault + "\"");
  }
  json checks = json::array();
  bool all_pass = true;
  for (const auto& s : suites)
    for (const auto& c : run_verify_suite(s, sc.params, opt.fault)) {
      all_pass = all_pass && c.pass;
      checks.push_back({{"suite", c.suite},
                        {"name", c.name},
                        {"value", c.value},
                        {"tolerance", c.tolerance},
                        {"pass", c.pass},
                        {"detail", c.detail}});
      std::printf("%-4s %-11s %-26s %.3e (tol %.1e)\n", c.pass ? "ok" : "FAIL", c.suite.c_str(),
                  c.name.c_str(), c.value, c.tolerance);
    }
  write_json(out / "verify.json", sc, "verify",
             {{"command", "verify"},
              {"suites", suites},
              {"injected_fault", opt.fault},
              {"pass", all_pass},
              {"checks", checks}});
  return all_pass ? kOk : kNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fraclab: thin obstacle problems for the fractional Laplacian"};
  app.require_subcommand(1, 1);
  Options opt;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--scenario", opt.scenario, "scenario JSON file")->required();
    sub->add_option("--out", opt.out, "output directory")->required();
  };
  auto* solve = app.add_subcommand("solve", "solve the thin obstacle problem");
  auto* profile = app.add_subcommand("profile", "radial profiles of N, W, M, Phi");
  auto* blowup = app.add_subcommand("blowup", "blow-up reports at given points");
  auto* classify_cmd = app.add_subcommand("classify", "classify the free boundary");
  auto* verify = app.add_subcommand("verify", "run the invariant suites");
  for (auto* s : {solve, profile, blowup, classify_cmd, verify}) common(s);
  for (auto* s : {profile, blowup}) s->add_option("--x0", opt.x0, "centre, comma separated");
  profile->add_option("--functionals", opt.functionals, "subset of N,W,M,Phi");
  verify->add_option("--suite", opt.suites, "identities|harmonics|grushin|quadrature");
  verify->add_option("--inject-fault", opt.fault, "corrupt the named check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    const auto sc = Scenario::load(opt.scenario);
    const fs::path out(opt.out);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec || !fs::is_directory(out)) throw ConfigError("cannot create output directory " + opt.out);
    if (solve->parsed()) return cmd_solve(sc, out);
    if (profile->parsed()) return cmd_profile(sc, opt, out);
    if (blowup->parsed()) return cmd_blowup(sc, opt, out);
    if (classify_cmd->parsed()) return cmd_classify(sc, out);
    return cmd_verify(sc, opt, out);
  } catch (const ArtifactError& e) {
    std::fprintf(stderr, "fraclab: %s\n", e.what());
    return kArtifacts;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "fraclab: %s\n", e.what());
    return kConfig;
  }
}
