// Acceptance run: one PASS/FAIL line per criterion, preceded by the measured values.
// Oracles are computed here independently of the library where a closed form exists.

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/hypergeometric_1F1.hpp>

#include <algorithm>
#include <array>
#include <cstdarg>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "fraclab/blowup.hpp"
#include "fraclab/fracops.hpp"
#include "fraclab/functionals.hpp"
#include "fraclab/grushin.hpp"
#include "fraclab/harmonics.hpp"
#include "fraclab/solver.hpp"

using namespace fraclab;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    notes.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
  }
  void note(const std::string& what) { notes.push_back("     " + what); }
};

std::string f(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string f(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

constexpr double kOrigin[3] = {0, 0, 0};
std::span<const double> origin(int n) { return std::span<const double>(kOrigin, n); }

Polynomial trace_of(const std::vector<std::pair<MultiIndex, double>>& terms, int n) {
  Polynomial q(n);
  for (const auto& [b, c] : terms) q.add_term(b, 0, c);
  return q;
}

BoundaryData data_of(const Polynomial& p) {
  return [p](const Point& q) { return p.evaluate(std::span<const double>(q.x.data(), p.n()), q.y); };
}

GridSpec grid_1d(int nx) {
  const double h = 2.0 / (nx - 1);
  return GridSpec::graded(1, 1.0, nx, 1.0, h, 1.15, std::min(1e-3, h / 8));
}

GridSpec grid_2d(int nx) {
  const double h = 2.0 / (nx - 1);
  return GridSpec::graded(2, 1.0, nx, 1.0, h, 1.3, std::min(0.02, h / 4));
}

SolverOptions solver_options() {
  SolverOptions o;
  o.omega = 0.0;
  return o;
}

SolveResult solve(const WeightParams& P, const GridSpec& g,
                  const std::function<double(std::span<const double>)>& phi, BoundaryData bd) {
  ThinObstacleProblem pr{P, g, thin_samples(g, phi), std::move(bd)};
  return psor_solve(pr, solver_options());
}

const auto zero_phi = [](std::span<const double>) { return 0.0; };

ObstacleSpec zero_obstacle(int n) { return ObstacleSpec::polynomial(n, {}, 2, 0.5); }

ClassifyConfig classify_config() {
  ClassifyConfig c;
  c.frequency.functional = FunctionalConfig::defaults(0.5);
  c.frequency.functional.r_max = 0.4;
  return c;
}

// Free-boundary nodes whose largest profile ball stays inside the box.
std::vector<std::vector<double>> admissible_fb(const GridField& u, double r_max) {
  std::vector<std::vector<double>> out;
  for (auto& p : free_boundary_nodes(u)) {
    double d = 0.0;
    for (double c : p) d = std::max(d, std::abs(c));
    if (d + r_max < u.spec().half_width()) out.push_back(p);
  }
  return out;
}

// ----------------------------------------------------------------- oracles

// L_a p = Delta_x p + p_yy + (a/y) p_y, applied monomial by monomial.
double la_defect(const Polynomial& p, double a) {
  std::map<std::pair<MultiIndex, int>, double> out;
  for (const auto& [key, c] : p.terms()) {
    const auto& [beta, k] = key;
    for (std::size_t i = 0; i < beta.size(); ++i)
      if (beta[i] >= 2) {
        MultiIndex b = beta;
        b[i] -= 2;
        out[{b, k}] += c * beta[i] * (beta[i] - 1);
      }
    if (k >= 2) out[{beta, k - 2}] += c * k * (k - 1 + a);
    if (k == 1 && a != 0.0) out[{beta, -1}] += c * a;  // a/y term with no cancellation
  }
  double worst = 0.0;
  for (const auto& [key, c] : out) worst = std::max(worst, std::abs(c));
  return worst;
}

double rho_oracle(const double* x, int n, double z, double alpha) {
  double x2 = 0.0;
  for (int i = 0; i < n; ++i) x2 += x[i] * x[i];
  return std::pow((alpha + 1) * (alpha + 1) * x2 + std::pow(std::abs(z), 2 * (alpha + 1)),
                  1.0 / (2 * (alpha + 1)));
}

double h_oracle(double y, double a) { return std::pow(y / (1 - a), 1 - a); }

// Sphere and ball integrals in n = 1 by tanh-sinh quadrature in polar coordinates, for
// fields even in y: H = int_{S(r)} u^2 |y|^a, D = int_{B(r)} |grad u|^2 |y|^a.
struct PolarIntegrals {
  double H, D;
};
PolarIntegrals polar_integrals(const Polynomial& u, double a, double r) {
  boost::math::quadrature::tanh_sinh<double> ts;
  const auto at = [&](double rho, double th, double* val, double* grad2) {
    const double x[1] = {rho * std::cos(th)};
    const double y = rho * std::sin(th);
    double g[2];
    if (val) *val = u.evaluate(x, y);
    if (grad2) {
      u.gradient(x, y, g);
      *grad2 = g[0] * g[0] + g[1] * g[1];
    }
  };
  const double H = 2.0 * r * std::pow(r, a) * ts.integrate([&](double th) {
    double v;
    at(r, th, &v, nullptr);
    return v * v * std::pow(std::sin(th), a);
  }, 0.0, std::numbers::pi);
  const double D = 2.0 * ts.integrate([&](double rho) {
    return std::pow(rho, 1 + a) * ts.integrate([&](double th) {
      double g2;
      at(rho, th, nullptr, &g2);
      return g2 * std::pow(std::sin(th), a);
    }, 0.0, std::numbers::pi);
  }, 0.0, r);
  return {H, D};
}

double gaussian_oracle(int n, double s, double sigma, double r) {
  return std::pow(sigma, -2 * s) * std::pow(4.0, s) * std::tgamma(0.5 * n + s) /
         std::tgamma(0.5 * n) *
         boost::math::hypergeometric_1F1(0.5 * n + s, 0.5 * n, -r * r / (sigma * sigma));
}

// ---------------------------------------------------------------- criteria

Outcome criterion_1() {
  Outcome o;
  double worst_la = 0.0, worst_trace = 0.0;
  int count = 0;
  for (double s : {0.25, 0.5, 0.75})
    for (int n = 1; n <= 3; ++n) {
      const auto P = WeightParams::from_s(s, n);
      for (int k = 0; k <= 6; ++k)
        for (const auto& beta : multi_indices(n, k)) {
          const auto q = Polynomial::monomial(beta);
          const auto ext = extend_la_harmonic(q, P).poly;
          worst_la = std::max(worst_la, la_defect(ext, P.a));
          Polynomial tr(n);
          for (const auto& [key, c] : ext.terms())
            if (key.second == 0) tr.add_term(key.first, 0, c);
          worst_trace = std::max(worst_trace, (tr - q).max_abs_coefficient());
          ++count;
        }
    }
  o.note(f("%d monomials, |beta| <= 6, n <= 3, s in {0.25, 0.5, 0.75}", count));
  o.require(worst_la < 1e-12, f("max |coefficient of L_a ext(x^beta)| = %.3e < 1e-12", worst_la));
  o.require(worst_trace < 1e-12, f("max trace recovery defect = %.3e < 1e-12", worst_trace));
  return o;
}

Outcome criterion_2() {
  Outcome o;
  double worst_h = 0.0, worst_n = 0.0, worst_lib = 0.0;
  for (double a : {0.0, 0.5}) {
    const auto P = WeightParams::from_s((1 - a) / 2, 1);
    FunctionalEngine eng(P);
    std::vector<Polynomial> fields;
    fields.push_back(extend_la_harmonic(Polynomial::monomial({2}), P).poly);
    fields.push_back(extend_la_harmonic(Polynomial::monomial({3}), P).poly);
    fields.push_back(extend_la_harmonic(Polynomial::monomial({4}), P).poly +
                     Polynomial::constant(1, 0.3));
    Polynomial g(1);
    g.add_term({1}, 0, 1.0);
    g.add_term({0}, 2, 0.5);
    fields.push_back(g);
    Polynomial q(1);
    q.add_term({2}, 2, 1.0);
    q.add_term({1}, 0, -0.7);
    q.add_term({0}, 0, 0.2);
    fields.push_back(q);
    for (const auto& fld : fields) {
      PolynomialField u(fld);
      GrushinView G(u, P);
      for (int i = 0; i < 10; ++i) {
        const double r = 0.1 + 0.09 * i;
        const auto pol = polar_integrals(fld, a, r);
        const double Ht = pol.H, Nt = r * pol.D / pol.H;
        const auto gr = grushin_frequency(G, h_oracle(r, a), P);
        worst_h = std::max(worst_h, std::abs(Ht - std::pow(r, a) * gr.H) / Ht);
        worst_n = std::max(worst_n, std::abs(Nt - (1 - a) * gr.N) / std::abs(Nt));
        worst_lib = std::max(worst_lib, std::abs(eng.height(u, origin(1), r) - Ht) / Ht);
      }
    }
  }
  o.note("5 polynomial fields, a in {0, 0.5}, 10 radii in [0.1, 0.91]");
  o.note(f("library sphere quadrature against tanh-sinh: %.3e", worst_lib));
  o.require(worst_h < 1e-6, f("max relative |H~(r) - r^a H(h(r))| = %.3e < 1e-6", worst_h));
  o.require(worst_n < 1e-6, f("max relative |N~(r) - (1-a) N(h(r))| = %.3e < 1e-6", worst_n));
  return o;
}

Outcome criterion_3() {
  Outcome o;
  std::vector<double> radii;
  for (int i = 0; i < 10; ++i) radii.push_back(0.05 * std::pow(10.0, i / 9.0));
  for (double s : {0.25, 0.5, 0.75}) {
    const auto P = WeightParams::from_s(s, 2);
    FunctionalEngine eng(P);
    for (int kappa : {2, 3, 4}) {
      // Re (x1 + i x2)^kappa plus x1^kappa for even kappa, so the trace is not x-harmonic.
      Polynomial q(2);
      for (int j = 0; j <= kappa; j += 2) {
        const double c = std::tgamma(kappa + 1.0) / (std::tgamma(j + 1.0) * std::tgamma(kappa - j + 1.0));
        q.add_term({kappa - j, j}, 0, (j / 2) % 2 ? -c : c);
      }
      if (kappa % 2 == 0) q.add_term({kappa, 0}, 0, 0.5);
      PolynomialField u(extend_la_harmonic(q, P).poly);
      double worst = 0.0;
      for (double r : radii) worst = std::max(worst, std::abs(eng.frequency(u, origin(2), r) - kappa));
      o.require(worst < 1e-3, f("s=%.2f kappa=%d: max |N~ - kappa| over [0.05, 0.5] = %.3e", s, kappa, worst));
    }
  }
  const auto P = WeightParams::from_s(0.5, 1);
  FunctionalEngine eng(P);
  CallableField sig(1, [](const Point& p) { return std::pow(std::hypot(p.x[0], p.y), 1.5) *
                                                   std::cos(1.5 * std::atan2(std::abs(p.y), p.x[0])); });
  double worst = 0.0;
  for (double r : radii) worst = std::max(worst, std::abs(eng.frequency(sig, origin(1), r) - 1.5));
  o.require(worst < 1e-3, f("Signorini Re(x1 + i|y|)^{3/2}: max |N~ - 3/2| = %.3e", worst));
  return o;
}

// The lateral cell weights are exact integrals of |y|^a and the y-fluxes telescope on y^2, so
// the stencil reproduces p2 to roundoff for every s. The halving factor is therefore measured
// on ext(x1^2 + 0.1 x1^4), which has a nonnegative trace and solves the same zero-obstacle problem.
Outcome criterion_4() {
  Outcome o;
  for (double s : {0.25, 0.5, 0.75}) {
    const auto P = WeightParams::from_s(s, 1);
    const double a = P.a;
    // Independent closed forms: x^2 - y^2/(1+a), and for x^4 the two-term recursion
    // x^4 - 6 x^2 y^2/(1+a) + 3 y^4/((1+a)(3+a)).
    const BoundaryData p2 = [a](const Point& p) { return p.x[0] * p.x[0] - p.y * p.y / (1 + a); };
    const BoundaryData p24 = [a](const Point& p) {
      const double x2 = p.x[0] * p.x[0], y2 = p.y * p.y;
      const double q4 = x2 * x2 - 6 * x2 * y2 / (1 + a) + 3 * y2 * y2 / ((1 + a) * (3 + a));
      return x2 - y2 / (1 + a) + 0.1 * q4;
    };
    std::vector<GridSpec> grids;
    for (int l = 0; l < 3; ++l) grids.push_back(convergence_grid(1, 1.0, 17, 1.0, 1.3, 0.02, l));
    auto opts = solver_options();
    opts.tol = 1e-12;
    for (const bool quartic : {false, true}) {
      const BoundaryData& exact = quartic ? p24 : p2;
      const char* label = quartic ? "x^2 + 0.1 x^4" : "p2";
      const auto levels = solve_sequence(
          [&](const GridSpec& g) {
            return ThinObstacleProblem{P, g, thin_samples(g, zero_phi), exact};
          },
          grids, opts);
      double prev = 0.0;
      std::string line = f("s=%.2f %s sup errors:", s, label);
      for (std::size_t l = 0; l < levels.size(); ++l) {
        const auto& r = levels[l];
        const auto& g = r.field->spec();
        double e = 0.0;
        for (int i = 0; i < g.nx(); ++i)
          for (int j = 0; j < g.ny(); ++j) {
            Point p;
            p.x[0] = g.x_node(i);
            p.y = g.y_nodes()[j];
            e = std::max(e, std::abs(r.field->node(i, 0, j) - exact(p)));
          }
        line += f(" %.3e (nx=%d)", e, g.nx());
        o.require(r.converged && r.complementarity < 1e-8,
                  f("s=%.2f %s nx=%d converged, complementarity %.3e < 1e-8", s, label, g.nx(),
                    r.complementarity));
        if (!quartic)
          o.require(e < 1e-10, f("s=%.2f nx=%d: p2 reproduced, error %.3e < 1e-10", s, g.nx(), e));
        else if (l > 0)
          o.require(prev / e >= 1.5, f("s=%.2f %s halving %zu: factor %.2f >= 1.5", s, label, l, prev / e));
        prev = e;
      }
      o.note(line);
    }
  }
  return o;
}

// Largest drop below the running maximum, divided by h^2.
double observed_c(const RadialProfile& p, double h) {
  double run = -INFINITY, worst = 0.0;
  for (double v : p.values) {
    worst = std::max(worst, run - v);
    run = std::max(run, v);
  }
  return worst / (h * h);
}

Outcome criterion_5() {
  Outcome o;
  const int nx = 257;
  // (a) Zero obstacle, data ext(x1^2 + 0.1 x1^4): a solution touching 0 at the origin only.
  // The slack constant is calibrated on nx = 129 as the largest dip over h^2 there, then the
  // nx = 257 profiles must stay within that c h^2. Dips that do not shrink like h^2 fail.
  double slack_c = 1.0;
  for (int nx_a : {129, 257}) {
    const bool calibrating = nx_a == 129;
    double c_obs = 0.0, c_reg = 0.0;
    for (double s : {0.25, 0.5, 0.75}) {
      const auto P = WeightParams::from_s(s, 1);
      const auto g = grid_1d(nx_a);
      const double h = g.hx();
      const auto sol = solve(P, g, zero_phi,
                             data_of(extend_polynomial(trace_of({{{2}, 1.0}, {{4}, 0.1}}, 1), P)));
      o.require(sol.converged, f("nx=%d s=%.2f zero-obstacle solve converged", nx_a, s));
      FunctionalEngine eng(P);
      ProfileRequest req = ProfileRequest::parse("N,W,M");
      req.kappa = 2.0;
      req.monneau_p = extend_la_harmonic(Polynomial::monomial({2}), P);
      FunctionalConfig fc;
      fc.r_min = 0.05;
      fc.r_max = 0.5;
      const auto rows = compute_profile(eng, *sol.field, origin(1), fc.radii(), req);
      for (const char* name : {"N", "W_kappa", "M_kappa"}) {
        const auto prof = column(rows, name);
        const double c = observed_c(prof, h);
        c_obs = std::max(c_obs, c);
        if (!calibrating)
          o.require(monotonicity_report(prof, slack_c * h * h).pass,
                    f("nx=%d s=%.2f singular point, %s nondecreasing within %.3g h^2 (observed c = %.3g)",
                      nx_a, s, name, slack_c, c));
      }
      // Regular point of the half-line contact set for data x1 + 1/4. Reported only: near a
      // regular free boundary the discrete solution converges below second order (see notes).
      const auto reg = solve(P, g, zero_phi, [](const Point& p) { return p.x[0] + 0.25; });
      o.require(reg.converged, f("nx=%d s=%.2f half-line solve converged", nx_a, s));
      const auto fb = free_boundary_nodes(*reg.field);
      if (fb.empty()) {
        o.require(false, f("nx=%d s=%.2f half-line instance has a free boundary", nx_a, s));
        continue;
      }
      ProfileRequest rq = ProfileRequest::parse("N,W");
      rq.kappa = 1.0 + s;
      FunctionalConfig fr;
      fr.r_min = 4 * h;
      fr.r_max = std::min(0.4, 0.9 * (1.0 - std::abs(fb.front()[0])));
      const auto rr = compute_profile(eng, *reg.field, fb.front(), fr.radii(), rq);
      std::string line = f("nx=%d s=%.2f regular point x0=%.4f observed c:", nx_a, s, fb.front()[0]);
      for (const char* name : {"N", "W_kappa"}) {
        const double c = observed_c(column(rr, name), h);
        c_reg = std::max(c_reg, c);
        line += f(" %s %.3g", name, c);
      }
      o.note(line);
    }
    if (calibrating) {
      slack_c = std::max(1.0, c_obs);
      o.note(f("calibration on nx=129 singular-point profiles: c = %.3g", slack_c));
    } else {
      o.note(f("nx=257: largest singular-point c = %.3g against calibrated c = %.3g; regular point "
               "c up to %.3g (not gated)", c_obs, slack_c, c_reg));
    }
  }

  // (b) Generalized frequency on the cubic obstacle 0.5 - 2 x^2 + 0.4 x^3, (k, gamma) = (2, 1/2).
  {
    const auto P = WeightParams::from_s(0.5, 1);
    const auto g = grid_1d(nx);
    const double h = g.hx();
    const auto obs = ObstacleSpec::polynomial(1, {{{0}, 0.5}, {{2}, -2.0}, {{3}, 0.4}}, 2, 0.5);
    const auto sol = solve(P, g, [&](std::span<const double> x) { return obs.value(x); },
                           [](const Point&) { return -0.5; });
    o.require(sol.converged, "cubic obstacle solve converged");
    FunctionalEngine eng(P);
    const auto fc = FunctionalConfig::defaults(0.5);
    const auto fb = free_boundary_nodes(*sol.field);
    o.require(fb.size() == 2, f("cubic obstacle: %zu free-boundary points", fb.size()));
    for (const auto& x0 : fb) {
      const ObstacleNormalizedField v(sol.field, obs, x0, 2, P);
      ProfileRequest req = ProfileRequest::parse("Phi");
      req.phi = fc;
      FunctionalConfig sched = fc;
      sched.r_min = 4 * h;
      sched.r_max = 0.3;
      const auto rows = compute_profile(eng, v, origin(1), sched.radii(), req);
      const auto prof = column(rows, "Phi");
      const auto ver = monotonicity_report(prof, slack_c * h * h);
      o.require(ver.pass, f("Phi at x0=%.4f nondecreasing, Phi from %.4f to %.4f (observed c = %.3g)",
                            x0[0], prof.values.front(), prof.values.back(), observed_c(prof, h)));
    }
  }

  // (c) Monneau drift at a singular point of the obstacle 0.4 x^3: u = ext(x^2) + 0.4 ext(x^3).
  {
    const auto P = WeightParams::from_s(0.5, 1);
    const auto g = grid_1d(nx);
    const double h = g.hx();
    const auto obs = ObstacleSpec::polynomial(1, {{{3}, 0.4}}, 2, 0.5);
    const auto data = extend_polynomial(trace_of({{{2}, 1.0}, {{3}, 0.4}}, 1), P);
    const auto sol = solve(P, g, [&](std::span<const double> x) { return obs.value(x); }, data_of(data));
    o.require(sol.converged, "cubic singular instance converged");
    FunctionalEngine eng(P);
    const std::vector<double> x0 = {0.0};
    const ObstacleNormalizedField v(sol.field, obs, x0, 2, P);
    ProfileRequest req = ProfileRequest::parse("M");
    req.kappa = 2.0;
    req.monneau_p = extend_la_harmonic(Polynomial::monomial({2}), P);
    FunctionalConfig sched;
    sched.r_min = 4 * h;
    sched.r_max = 0.4;
    const auto rows = compute_profile(eng, v, origin(1), sched.radii(), req);
    const double C_M = 1.0;
    const auto ver = monneau_drift_check(column(rows, "M_kappa"), 0.5, C_M, slack_c * h * h);
    o.require(ver.pass, f("Monneau drift slopes >= -C_M r^{gamma-1} - slack, C_M = %.1f (%s)", C_M,
                          ver.detail.c_str()));
  }
  return o;
}

std::shared_ptr<const GridField> signorini_1d(int nx) {
  const auto P = WeightParams::from_s(0.5, 1);
  auto r = solve(P, grid_1d(nx), zero_phi, [](const Point& p) { return signorini_value(p.x[0], p.y); });
  if (!r.converged) throw Error("Signorini solve did not converge");
  return r.field;
}

std::shared_ptr<const GridField> manufactured_2d(const Polynomial& trace, double s, int nx) {
  const auto P = WeightParams::from_s(s, 2);
  auto r = solve(P, grid_2d(nx), zero_phi, data_of(extend_polynomial(trace, P)));
  if (!r.converged) throw Error("manufactured n = 2 solve did not converge");
  return r.field;
}

Outcome criterion_6() {
  Outcome o;
  {
    const auto P = WeightParams::from_s(0.5, 1);
    FunctionalEngine eng(P);
    const auto u = signorini_1d(257);
    const auto fb = free_boundary_nodes(*u);
    o.require(fb.size() == 1, f("Signorini: %zu free-boundary node(s)", fb.size()));
    const auto rep = classify(u, zero_obstacle(1), fb.at(0), P, classify_config(), eng);
    const double k = rep.frequency.kappa_hat;
    o.require(std::abs(k - 1.5) <= 0.02, f("Signorini x0=%.4f: kappa_hat = %.5f, 1.5 +- 0.02", fb[0][0], k));
    // Weiss identity at the solved field, scaled by the size of either term.
    double worst = 0.0;
    for (double r : rep.frequency.profile.radii) {
      const auto smp = eng.sample(*u, fb[0], r);
      const double W = eng.weiss(*u, fb[0], 1.5, r);
      const double scale = smp.H * std::max(smp.N(), 1.5) / std::pow(r, 1 + P.a + 3.0);
      worst = std::max(worst, std::abs(W - smp.H * (smp.N() - 1.5) / std::pow(r, 1 + P.a + 3.0)) / scale);
    }
    o.require(worst < 1e-8, f("Weiss identity W = H (N - kappa)/r^{n+a+2 kappa}: %.3e < 1e-8", worst));
  }
  {
    const auto P = WeightParams::from_s(0.5, 2);
    FunctionalEngine eng(P);
    const auto u = manufactured_2d(trace_of({{{2, 0}, 1.0}}, 2), 0.5, 65);
    const std::vector<double> x0 = {0.0, 0.25};
    const auto rep = classify(u, zero_obstacle(2), x0, P, classify_config(), eng);
    const double k = rep.frequency.kappa_hat;
    o.require(std::abs(k - 2.0) <= 0.01, f("x1^2 instance at (0, 0.25): kappa_hat = %.6f, 2 +- 0.01", k));
    double worst = 0.0;
    for (double r : rep.frequency.profile.radii) {
      const auto smp = eng.sample(*u, x0, r);
      const double W = eng.weiss(*u, x0, 2.0, r);
      const double scale = smp.H * std::max(smp.N(), 2.0) / std::pow(r, 2 + P.a + 4.0);
      worst = std::max(worst, std::abs(W - smp.H * (smp.N() - 2.0) / std::pow(r, 2 + P.a + 4.0)) / scale);
    }
    o.require(worst < 1e-8, f("Weiss identity on the solved x1^2 field: %.3e < 1e-8", worst));
  }
  return o;
}

Outcome criterion_7() {
  Outcome o;
  const auto cfg = classify_config();
  const double r_max = cfg.frequency.functional.r_max;
  const auto P2 = WeightParams::from_s(0.5, 2);
  FunctionalEngine eng2(P2);
  {
    const auto u = manufactured_2d(trace_of({{{2, 0}, 1.0}}, 2), 0.5, 65);
    const auto pts = admissible_fb(*u, r_max);
    const auto reps = classify_many(u, zero_obstacle(2), pts, P2, cfg, eng2);
    int good = 0;
    double res = 0.0, dist = 0.0;
    for (const auto& r : reps) {
      good += r.kind == BlowupReport::Kind::singular && r.m == 1 && r.d == 1;
      if (r.fit) res = std::max(res, r.fit->residual);
      dist = std::max(dist, r.fit_distance);
    }
    o.require(pts.size() >= 5 && good == static_cast<int>(pts.size()),
              f("x1^2 line: %d of %zu admissible free-boundary points are singular (m=1, d=1)", good, pts.size()));
    o.require(res < 1e-4, f("x1^2 line: max fit residual %.3e < 1e-4", res));
    o.require(dist < 1e-3, f("x1^2 line: max fit distance r vs r/2 %.3e < 1e-3", dist));
  }
  {
    const auto u = manufactured_2d(trace_of({{{2, 0}, 1.0}, {{0, 2}, 1.0}}, 2), 0.5, 65);
    const std::vector<double> x0 = {0.0, 0.0};
    const auto r = classify(u, zero_obstacle(2), x0, P2, cfg, eng2);
    o.require(r.kind == BlowupReport::Kind::singular && r.m == 1 && r.d == 0,
              f("|x|^2 at the origin: %s m=%d d=%d", to_string(r.kind).c_str(), r.m, r.d));
    o.require(r.fit && r.fit->residual < 1e-4 && r.fit_distance < 1e-3,
              f("|x|^2: fit residual %.3e, fit distance %.3e", r.fit ? r.fit->residual : NAN, r.fit_distance));
  }
  {
    const auto P1 = WeightParams::from_s(0.5, 1);
    FunctionalEngine eng1(P1);
    const auto u = signorini_1d(257);
    const auto pts = admissible_fb(*u, r_max);
    const auto reps = classify_many(u, zero_obstacle(1), pts, P1, cfg, eng1);
    const bool all = !reps.empty() && std::all_of(reps.begin(), reps.end(), [](const BlowupReport& r) {
      return r.kind == BlowupReport::Kind::regular;
    });
    o.require(all, f("Signorini n=1: %zu free-boundary point(s), all regular", reps.size()));

    const auto P = WeightParams::from_s(0.5, 2);
    auto sol = solve(P, grid_2d(65), zero_phi, [](const Point& p) { return signorini_value(p.x[0], p.y); });
    const auto pts2 = admissible_fb(*sol.field, r_max);
    const auto reps2 = classify_many(sol.field, zero_obstacle(2), pts2, P, cfg, eng2);
    int reg = 0;
    for (const auto& r : reps2) reg += r.kind == BlowupReport::Kind::regular;
    o.require(!reps2.empty() && reg == static_cast<int>(reps2.size()),
              f("Signorini n=2: %d of %zu admissible free-boundary points regular", reg, reps2.size()));
  }
  return o;
}

Outcome criterion_8() {
  Outcome o;
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> u(-2.0, 2.0), ul(0.05, 4.0), us(0.05, 0.95);
  double worst_g = 0.0, worst_lib = 0.0;
  for (int t = 0; t < 10000; ++t) {
    const double alpha = std::array<double, 4>{0.0, 0.5, 1.0, 3.0}[t % 4];
    const double x[2] = {u(rng), u(rng)};
    const double z = u(rng), lam = ul(rng);
    const double b = alpha + 1;
    const double dx[2] = {std::pow(lam, b) * x[0], std::pow(lam, b) * x[1]};
    const double r0 = rho_oracle(x, 2, z, alpha);
    worst_g = std::max(worst_g, std::abs(rho_alpha(std::span<const double>(dx, 2), lam * z, alpha) - lam * r0) / (lam * r0));
    worst_lib = std::max(worst_lib, std::abs(rho_alpha(std::span<const double>(x, 2), z, alpha) - r0) / r0);
  }
  o.require(worst_g < 1e-12, f("gauge homogeneity, 1e4 samples: %.3e < 1e-12", worst_g));
  o.require(worst_lib < 1e-12, f("library gauge against the closed form: %.3e < 1e-12", worst_lib));

  double worst_b = 0.0;
  int disagree = 0;
  for (int t = 0; t < 10000; ++t) {
    const auto P = WeightParams::from_s(us(rng), 2);
    const double x[2] = {u(rng), u(rng)};
    const double y = u(rng);
    const double de = std::sqrt(x[0] * x[0] + x[1] * x[1] + y * y);
    const double rho = rho_alpha(std::span<const double>(x, 2), h_oracle(std::abs(y), P.a), P.alpha);
    worst_b = std::max(worst_b, std::abs(rho - h_oracle(de, P.a)) / h_oracle(de, P.a));
    disagree += (rho < h_oracle(1.0, P.a)) != (de < 1.0);
  }
  o.require(worst_b < 1e-12 && disagree == 0,
            f("ball correspondence rho(x, h(|y|)) = h(|(x, y)|), 1e4 samples: %.3e, %d membership mismatches",
              worst_b, disagree));

  const double ca = c_alpha_constant(0.0, 2);
  o.require(std::abs(ca * 4 * std::numbers::pi - 1) < 0.01, f("C_alpha(a=0, n=2) = %.10f, 1/(4 pi) = %.10f", ca, 1 / (4 * std::numbers::pi)));

  for (double alpha : {0.5, 1.0}) {
    const double x[2] = {0.3, -0.5};
    std::vector<double> res;
    for (double h : {0.04, 0.02, 0.01, 0.005}) res.push_back(std::abs(b_alpha_stencil_residual(x, 0.8, alpha, 2, h)));
    std::string line = f("alpha=%.1f stencil residuals:", alpha);
    bool ok = true;
    for (std::size_t i = 0; i < res.size(); ++i) {
      line += f(" %.3e", res[i]);
      if (i > 0) {
        const double p = std::log2(res[i - 1] / res[i]);
        line += f(" (order %.2f)", p);
        ok = ok && std::abs(p - 2.0) < 0.2;
      }
    }
    o.require(ok, line + ", orders within 2 +- 0.2");
  }
  return o;
}

Outcome criterion_9() {
  Outcome o;
  {
    FracEvalConfig cfg;
    cfg.far = FarField::bounded;
    cfg.R = 2000.0;
    const TraceFn c = [](std::span<const double> x) { return std::cos(x[0]); };
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
      const std::vector<double> x = {-3.0 + 0.31 * k};
      worst = std::max(worst, std::abs(frac_laplacian(c, 1, x, 0.5, cfg).value - std::cos(x[0])));
    }
    o.require(worst < 1e-4, f("(-Delta)^{1/2} cos = cos at 20 points: max error %.3e < 1e-4", worst));
  }
  {
    double worst_f = 0.0, worst_c = 0.0;
    for (int n : {1, 2})
      for (double s : {0.25, 0.5, 0.75})
        for (double r : {0.0, 0.15, 0.4, 0.9}) {
          const double sigma = 0.4;
          const TraceFn g = [sigma](std::span<const double> x) {
            double r2 = 0.0;
            for (double v : x) r2 += v * v;
            return std::exp(-r2 / (sigma * sigma));
          };
          std::vector<double> x(n, 0.0);
          x[0] = r;
          const double direct = frac_laplacian(g, n, x, s).value;
          worst_f = std::max(worst_f, std::abs(direct - gaussian_fractional_laplacian(n, s, sigma, r)));
          worst_c = std::max(worst_c, std::abs(direct - gaussian_oracle(n, s, sigma, r)));
        }
    o.require(worst_f < 1e-4, f("Gaussian against the Fourier oracle: %.3e < 1e-4", worst_f));
    o.require(worst_c < 1e-4, f("Gaussian against the 1F1 closed form: %.3e < 1e-4", worst_c));
  }
  for (double s : {0.3, 0.5, 0.7}) {
    const auto P = WeightParams::from_s(s, 1);
    const auto cal = calibrate_extension(grid_1d(129), P, gaussian_calibration(1, s, 0.2), solver_options());
    o.require(cal.spread < 0.05, f("s=%.1f calibration: C_hat = %.5f, spread %.2f%% < 5%% over %zu nodes",
                                   s, cal.C_hat, 100 * cal.spread, cal.samples.size()));
  }
  return o;
}

Outcome criterion_10() {
  Outcome o;
  const auto cfg = classify_config();
  {
    const auto P = WeightParams::from_s(0.5, 2);
    FunctionalEngine eng(P);
    const auto u = manufactured_2d(trace_of({{{2, 0}, 1.0}}, 2), 0.5, 65);
    const std::vector<double> x0 = {0.0, 0.25};
    const auto rep = classify(u, zero_obstacle(2), x0, P, cfg, eng);
    const auto& dv = rep.density_verdict;
    o.require(dv.last < 0.1 && dv.slope < -0.5,
              f("x1^2 line at (0, 0.25): density %.4f < 0.1 at r=%.3f, log-log slope %.3f < -0.5",
                dv.last, rep.density.radii.front(), dv.slope));
  }
  {
    const auto P = WeightParams::from_s(0.5, 1);
    FunctionalEngine eng(P);
    // The free-boundary node itself counts as contact, which biases the density upward by
    // about h / (2 r). Convergence is read as: the error shrinks under refinement and the
    // finest grid lands inside the band.
    std::vector<double> errs;
    const std::vector<int> sizes = {129, 257};
    for (int nx : sizes) {
      const auto u = signorini_1d(nx);
      const auto fb = free_boundary_nodes(*u);
      const auto rep = classify(u, zero_obstacle(1), fb.at(0), P, cfg, eng);
      const double d0 = rep.density.values.front();
      errs.push_back(std::abs(d0 - 0.5));
      o.note(f("Signorini nx=%d x0=%.4f: density %.4f at r=%.4f", nx, fb[0][0], d0,
               rep.density.radii.front()));
    }
    o.require(errs.back() <= 0.05, f("Signorini nx=%d: |density - 0.5| = %.4f <= 0.05", sizes.back(),
                                     errs.back()));
    o.require(errs.back() < errs.front(),
              f("Signorini density error shrinks under refinement: %.4f -> %.4f", errs.front(),
                errs.back()));
  }
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"polynomial extension exactness", criterion_1},
      {"correspondence identities", criterion_2},
      {"homogeneity gives constant frequency", criterion_3},
      {"solver convergence on the manufactured p2 instance", criterion_4},
      {"monotonicity suites", criterion_5},
      {"frequency values and the Weiss identity", criterion_6},
      {"classification and strata", criterion_7},
      {"Grushin geometry", criterion_8},
      {"fractional operator", criterion_9},
      {"density profiles", criterion_10},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (const auto& n : o.notes) std::printf("    %s\n", n.c_str());
    std::printf("%s criterion %zu: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
