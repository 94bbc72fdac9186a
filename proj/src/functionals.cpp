#include "fraclab/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "fraclab/parallel.hpp"

namespace fraclab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double grad_sq(const ScalarField& u, const Point& p) {
  double g[4] = {0, 0, 0, 0};
  const int n = u.dim();
  u.gradient(p, std::span<double>(g, n + 1));
  double acc = 0.0;
  for (int i = 0; i <= n; ++i) acc += g[i] * g[i];
  return acc;
}

double normal_derivative(const ScalarField& u, const Point& p, const Point& dir) {
  double g[4] = {0, 0, 0, 0};
  const int n = u.dim();
  u.gradient(p, std::span<double>(g, n + 1));
  double acc = g[n] * dir.y;
  for (int i = 0; i < n; ++i) acc += g[i] * dir.x[i];
  return acc;
}

}  // namespace

// ------------------------------------------------------------ config

FunctionalConfig FunctionalConfig::defaults(double gamma) {
  FunctionalConfig c;
  c.theta = std::min(gamma / 2.0, 0.25);
  c.C0 = 10.0;
  return c;
}

void FunctionalConfig::validate(double gamma, bool weiss_bounds) const {
  if (!(theta > 0.0 && theta < gamma))
    throw DomainError("theta must lie in (0, gamma)");
  if (weiss_bounds && theta > gamma / 2.0)
    throw DomainError("Weiss and Monneau bounds need theta <= gamma/2");
  if (!(C0 >= 0.0)) throw DomainError("C0 must be nonnegative");
  if (!(r_min > 0.0 && r_max > r_min) || count < 2)
    throw DomainError("radii schedule needs 0 < r_min < r_max and count >= 2");
}

std::vector<double> FunctionalConfig::radii() const {
  std::vector<double> r(count);
  const double q = std::pow(r_max / r_min, 1.0 / (count - 1));
  for (int i = 0; i < count; ++i) r[i] = r_min * std::pow(q, i);
  r.back() = r_max;
  return r;
}

// ------------------------------------------------------------ fields

double PolynomialField::value(const Point& p) const {
  return p_.evaluate(std::span<const double>(p.x.data(), p_.n()), p.y);
}

void PolynomialField::gradient(const Point& p, std::span<double> g) const {
  p_.gradient(std::span<const double>(p.x.data(), p_.n()), p.y, g);
}

void CallableField::gradient(const Point& p, std::span<double> g) const {
  if (g_) {
    g_(p, g);
    return;
  }
  const double h = 1e-6;
  for (int i = 0; i <= n_; ++i) {
    Point a = p, b = p;
    if (i < n_) {
      a.x[i] += h;
      b.x[i] -= h;
    } else {
      a.y += h;
      b.y -= h;
    }
    g[i] = (f_(a) - f_(b)) / (2 * h);
  }
}

double signorini_value(double x1, double y) {
  return std::real(std::pow(std::complex<double>(x1, std::abs(y)), 1.5));
}

void signorini_gradient(double x1, double y, double& gx, double& gy) {
  const std::complex<double> w(x1, std::abs(y));
  if (std::abs(w) == 0.0) {
    gx = gy = 0.0;
    return;
  }
  const std::complex<double> d = 1.5 * std::sqrt(w);
  gx = d.real();
  // d/d|y| Re w^{3/2} = -Im(1.5 w^{1/2}), then the chain rule through |y|.
  gy = (y < 0 ? 1.0 : -1.0) * d.imag();
}

CallableField signorini_field(int n) {
  return CallableField(
      n, [](const Point& p) { return signorini_value(p.x[0], p.y); },
      [n](const Point& p, std::span<double> g) {
        for (int i = 0; i <= n; ++i) g[i] = 0.0;
        signorini_gradient(p.x[0], p.y, g[0], g[n]);
      });
}

// ------------------------------------------------------------ engine

FunctionalEngine::FunctionalEngine(const WeightParams& params, int n_polar, int n_azimuth,
                                   int n_radial)
    : params_(params),
      sphere_(params.n, params.a, n_polar, n_azimuth),
      radial_(gauss_jacobi_interval(n_radial, params.n + params.a, 1.0)) {}

void FunctionalEngine::require_ball(const ScalarField& u, std::span<const double> x0,
                                    double r) const {
  if (!(r > 0.0)) throw DomainError("radius must be positive");
  if (u.dim() != params_.n) throw DomainError("field dimension does not match the engine");
  if (!u.covers_ball(x0, r)) throw GeometryError("ball B(x0, r) leaves the computational box");
}

double FunctionalEngine::height(const ScalarField& u, std::span<const double> x0, double r) const {
  require_ball(u, x0, r);
  return sphere_.integrate_even(
      [&](const Point& p, const Point&) {
        const double v = u.value(p);
        return v * v;
      },
      x0, r);
}

double FunctionalEngine::flux(const ScalarField& u, std::span<const double> x0, double r) const {
  require_ball(u, x0, r);
  return sphere_.integrate_even(
      [&](const Point& p, const Point& d) { return u.value(p) * normal_derivative(u, p, d); }, x0,
      r);
}

double FunctionalEngine::dirichlet(const ScalarField& u, std::span<const double> x0,
                                   double r) const {
  require_ball(u, x0, r);
  // D = int_0^r t^{n+a} G(t) dt where G(t) is the sphere integral stripped of its scale.
  const double e = params_.n + params_.a;
  double acc = 0.0;
  for (std::size_t i = 0; i < radial_.nodes.size(); ++i) {
    const double t = r * radial_.nodes[i];
    const double g = sphere_.integrate_even(
        [&](const Point& p, const Point&) { return grad_sq(u, p); }, x0, t);
    acc += radial_.weights[i] * g / sphere_.scale(t);
  }
  return acc * std::pow(r, e + 1.0);
}

RadialSample FunctionalEngine::sample(const ScalarField& u, std::span<const double> x0, double r,
                                      bool with_dirichlet) const {
  RadialSample s;
  s.r = r;
  s.H = height(u, x0, r);
  s.I = flux(u, x0, r);
  s.D = with_dirichlet ? dirichlet(u, x0, r) : kNaN;
  return s;
}

double FunctionalEngine::frequency(const ScalarField& u, std::span<const double> x0,
                                   double r) const {
  const double H = height(u, x0, r);
  if (!(H > 0.0)) throw UndefinedError("frequency undefined: H(r) = 0");
  return r * dirichlet(u, x0, r) / H;
}

double FunctionalEngine::weiss(const ScalarField& u, std::span<const double> x0, double kappa,
                               double r) const {
  const double Qt = params_.Qtilde;
  const double D = dirichlet(u, x0, r);
  const double H = height(u, x0, r);
  return std::pow(r, -(Qt - 2 + 2 * kappa)) * D - kappa * std::pow(r, -(Qt - 1 + 2 * kappa)) * H;
}

double FunctionalEngine::monneau(const ScalarField& u, std::span<const double> x0,
                                 const SolidHarmonic& p, double r) const {
  if (!p.poly.even_in_y()) throw DomainError("Monneau: p must be even in y");
  const auto deg = p.poly.homogeneous_degree();
  if (!p.poly.is_zero() && (!deg || *deg != p.degree))
    throw DomainError("Monneau: p is not homogeneous of its declared degree");
  require_ball(u, x0, r);
  const int n = params_.n;
  const double m = sphere_.integrate_even(
      [&](const Point& q, const Point&) {
        double local[3];
        for (int i = 0; i < n; ++i) local[i] = q.x[i] - x0[i];
        const double d = u.value(q) - p.poly.evaluate(std::span<const double>(local, n), q.y);
        return d * d;
      },
      x0, r);
  return std::pow(r, -(n + params_.a + 2.0 * p.degree)) * m;
}

double FunctionalEngine::generalized_frequency(const ScalarField& v, std::span<const double> x0,
                                               const FunctionalConfig& cfg, int k, double gamma,
                                               double r, bool* truncated) const {
  cfg.validate(gamma);
  const double e = params_.n + params_.a;
  const double expo = e + 2.0 * (k + gamma - cfg.theta);
  const double H = height(v, x0, r);
  const double floor = std::pow(r, expo);
  double dlog;
  bool trunc;
  if (H > floor) {
    dlog = e / r + 2.0 * flux(v, x0, r) / H;
    trunc = false;
  } else {
    dlog = expo / r;
    trunc = true;
  }
  if (truncated) *truncated = trunc;
  return (r + cfg.C0 * std::pow(r, 1.0 + cfg.theta)) * dlog;
}

double FunctionalEngine::sup_on_sphere(const ScalarField& u, std::span<const double> x0,
                                       double r) const {
  require_ball(u, x0, r);
  double best = 0.0;
  Point p;
  for (const auto& nd : sphere_.nodes()) {
    for (int i = 0; i < params_.n; ++i) p.x[i] = x0[i] + r * nd.dir.x[i];
    p.y = r * nd.dir.y;
    best = std::max(best, std::abs(u.value(p)));
  }
  return best;
}

double FunctionalEngine::sphere_inner(const ScalarField& f, const ScalarField& g) const {
  const double origin[3] = {0, 0, 0};
  return sphere_.integrate_full(
      [&](const Point& p, const Point&) { return f.value(p) * g.value(p); },
      std::span<const double>(origin, params_.n), 1.0);
}

// ------------------------------------------------------------ profiles

std::vector<double> RadialProfile::slopes() const {
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < radii.size(); ++i)
    out.push_back((values[i + 1] - values[i]) / (radii[i + 1] - radii[i]));
  return out;
}

Verdict monotonicity_report(const RadialProfile& profile, double slack) {
  Verdict v;
  double running = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < profile.values.size(); ++i) {
    const double drop = running - profile.values[i];
    if (drop > slack && drop > v.worst_violation) {
      v.pass = false;
      v.worst_violation = drop;
      v.r_star = profile.radii[i];
    }
    running = std::max(running, profile.values[i]);
  }
  std::ostringstream os;
  os << profile.name << (v.pass ? " nondecreasing" : " decreases") << " within slack " << slack;
  if (!v.pass) os << "; worst drop " << v.worst_violation << " at r=" << v.r_star;
  v.detail = os.str();
  return v;
}

Verdict monneau_drift_check(const RadialProfile& profile, double gamma, double C_M, double slack) {
  Verdict v;
  const auto sl = profile.slopes();
  for (std::size_t i = 0; i < sl.size(); ++i) {
    const double rm = 0.5 * (profile.radii[i] + profile.radii[i + 1]);
    const double bound = -C_M * std::pow(rm, gamma - 1.0) - slack;
    const double viol = bound - sl[i];
    if (viol > 0 && viol > v.worst_violation) {
      v.pass = false;
      v.worst_violation = viol;
      v.r_star = rm;
    }
  }
  std::ostringstream os;
  os << profile.name << " slope " << (v.pass ? "respects" : "violates") << " -C_M r^(gamma-1)";
  if (!v.pass) os << "; worst excess " << v.worst_violation << " at r=" << v.r_star;
  v.detail = os.str();
  return v;
}

ProfileRequest ProfileRequest::parse(const std::string& list) {
  ProfileRequest r;
  r.want_N = false;
  std::stringstream ss(list);
  for (std::string tok; std::getline(ss, tok, ',');) {
    if (tok == "N") r.want_N = true;
    else if (tok == "W") r.want_W = true;
    else if (tok == "M") r.want_M = true;
    else if (tok == "Phi") r.want_Phi = true;
    else if (!tok.empty()) throw DomainError("unknown functional '" + tok + "'");
  }
  return r;
}

std::vector<ProfileRow> compute_profile(const FunctionalEngine& engine, const ScalarField& u,
                                        std::span<const double> x0,
                                        const std::vector<double>& radii,
                                        const ProfileRequest& req) {
  if (req.want_M && !req.monneau_p) throw DomainError("Monneau profile needs a polynomial");
  if (req.want_Phi) req.phi.validate(req.gamma);
  std::vector<ProfileRow> rows(radii.size());
  const std::vector<double> x(x0.begin(), x0.end());
  const WeightParams& P = engine.params();
  parallel_for(radii.size(), [&](std::size_t i) {
    const double r = radii[i];
    ProfileRow row;
    row.r = r;
    row.H = engine.height(u, x, r);
    row.D = engine.dirichlet(u, x, r);
    row.N = req.want_N && row.H > 0 ? r * row.D / row.H : kNaN;
    const double kap = req.kappa;
    row.W = req.want_W ? std::pow(r, -(P.Qtilde - 2 + 2 * kap)) * row.D -
                             kap * std::pow(r, -(P.Qtilde - 1 + 2 * kap)) * row.H
                       : kNaN;
    row.M = req.want_M ? engine.monneau(u, x, *req.monneau_p, r) : kNaN;
    row.Phi = req.want_Phi
                  ? engine.generalized_frequency(u, x, req.phi, req.k, req.gamma, r, &row.truncated)
                  : kNaN;
    rows[i] = row;
  });
  return rows;
}

void write_profile_csv(const std::string& path, const std::string& header_comment,
                       const std::vector<ProfileRow>& rows, const ProfileRequest& req) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  std::istringstream hc(header_comment);
  for (std::string line; std::getline(hc, line);) out << "# " << line << '\n';
  out << "r,H,D";
  if (req.want_N) out << ",N";
  if (req.want_W) out << ",W_kappa";
  if (req.want_M) out << ",M_kappa";
  if (req.want_Phi) out << ",Phi,Phi_truncated";
  out << '\n';
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, ",%.17g", v);
    out << buf;
  };
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g", r.r);
    out << buf;
    put(r.H);
    put(r.D);
    if (req.want_N) put(r.N);
    if (req.want_W) put(r.W);
    if (req.want_M) put(r.M);
    if (req.want_Phi) {
      put(r.Phi);
      out << ',' << (r.truncated ? 1 : 0);
    }
    out << '\n';
  }
}

RadialProfile column(const std::vector<ProfileRow>& rows, const std::string& name) {
  RadialProfile p;
  p.name = name;
  for (const auto& r : rows) {
    p.radii.push_back(r.r);
    if (name == "H") p.values.push_back(r.H);
    else if (name == "D") p.values.push_back(r.D);
    else if (name == "N") p.values.push_back(r.N);
    else if (name == "W_kappa") p.values.push_back(r.W);
    else if (name == "M_kappa") p.values.push_back(r.M);
    else if (name == "Phi") p.values.push_back(r.Phi);
    else throw DomainError("unknown profile column " + name);
  }
  return p;
}

// ------------------------------------------------------------ free forms

double height(const ScalarField& u, const WeightParams& p, std::span<const double> x0, double r) {
  return FunctionalEngine(p).height(u, x0, r);
}
double dirichlet(const ScalarField& u, const WeightParams& p, std::span<const double> x0,
                 double r) {
  return FunctionalEngine(p).dirichlet(u, x0, r);
}
double frequency(const ScalarField& u, const WeightParams& p, std::span<const double> x0,
                 double r) {
  return FunctionalEngine(p).frequency(u, x0, r);
}
double weiss(const ScalarField& u, const WeightParams& p, std::span<const double> x0, double kappa,
             double r) {
  return FunctionalEngine(p).weiss(u, x0, kappa, r);
}
double monneau(const ScalarField& u, std::span<const double> x0, const SolidHarmonic& sh,
               double r) {
  return FunctionalEngine(sh.params).monneau(u, x0, sh, r);
}

}  // namespace fraclab
