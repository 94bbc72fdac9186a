#include "fraclab/grushin.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "fraclab/quadrature.hpp"

namespace fraclab {

double rho_alpha(std::span<const double> x, double z, double alpha) {
  const double b = alpha + 1.0;
  double x2 = 0.0;
  for (double xi : x) x2 += xi * xi;
  const double s = b * b * x2 + std::pow(std::abs(z), 2.0 * b);
  return s == 0.0 ? 0.0 : std::pow(s, 1.0 / (2.0 * b));
}

double grad_rho_norm(std::span<const double> x, double z, double alpha) {
  const double b = alpha + 1.0;
  const double rho = rho_alpha(x, z, alpha);
  if (rho == 0.0) throw UndefinedError("gradient of the gauge at the origin");
  double x2 = 0.0;
  for (double xi : x) x2 += xi * xi;
  const double num = std::sqrt(b * b * x2 + std::pow(std::abs(z), 4.0 * b - 2.0));
  return num / std::pow(rho, 2.0 * b - 1.0);
}

double psi_alpha(std::span<const double> x, double z, double alpha) {
  if (alpha == 0.0) return 1.0;
  if (z == 0.0 && alpha < 0.0) throw UndefinedError("psi_alpha is singular on {z = 0} for alpha < 0");
  const double rho = rho_alpha(x, z, alpha);
  if (rho == 0.0) throw UndefinedError("psi_alpha at the origin");
  return std::pow(std::abs(z) / rho, 2.0 * alpha);
}

GrushinPoint dilate(std::span<const double> x, double z, double lambda, double alpha) {
  if (!(lambda > 0.0)) throw DomainError("dilation factor must be positive");
  GrushinPoint p;
  const double f = std::pow(lambda, alpha + 1.0);
  for (double xi : x) p.x.push_back(f * xi);
  p.z = lambda * z;
  return p;
}

double z_alpha_apply(const GrushinPolynomial& f, std::span<const double> x, double z,
                     double alpha) {
  std::vector<double> g(f.n + 1);
  f.gradient(x, z, g);
  double v = z * g[f.n];
  for (int i = 0; i < f.n; ++i) v += (alpha + 1.0) * x[i] * g[i];
  return v;
}

double z_alpha_apply(const std::function<double(std::span<const double>, double)>& f,
                     std::span<const double> x, double z, double alpha, double h) {
  std::vector<double> xp(x.begin(), x.end()), xm = xp;
  double v = z * (f(x, z + h) - f(x, z - h)) / (2.0 * h);
  for (std::size_t i = 0; i < x.size(); ++i) {
    xp[i] += h;
    xm[i] -= h;
    v += (alpha + 1.0) * x[i] * (f(xp, z) - f(xm, z)) / (2.0 * h);
    xp[i] = xm[i] = x[i];
  }
  return v;
}

GrushinPolynomial apply_x_field(const GrushinPolynomial& f, int j, double alpha) {
  GrushinPolynomial r;
  r.n = f.n;
  for (const auto& t : f.terms) {
    if (j < f.n) {
      if (t.beta[j] == 0) continue;
      auto b = t.beta;
      b[j] -= 1;
      r.terms.push_back({b, t.zpow + alpha, t.odd, t.coef * t.beta[j]});
    } else if (t.zpow != 0.0) {
      r.terms.push_back({t.beta, t.zpow - 1.0, !t.odd, t.coef * t.zpow});
    }
  }
  return r;
}

GrushinPolynomial apply_z_alpha(const GrushinPolynomial& f, double alpha) {
  GrushinPolynomial r = f;
  for (auto& t : r.terms) {
    int b = 0;
    for (int v : t.beta) b += v;
    t.coef *= (alpha + 1.0) * b + t.zpow;
  }
  return r;
}

double commutator_check(const GrushinPolynomial& f, int j,
                        const std::vector<GrushinPoint>& samples, double alpha) {
  const GrushinPolynomial xz = apply_x_field(apply_z_alpha(f, alpha), j, alpha);
  const GrushinPolynomial zx = apply_z_alpha(apply_x_field(f, j, alpha), alpha);
  const GrushinPolynomial x = apply_x_field(f, j, alpha);
  // Merge like terms before evaluating so that the cancellation is symbolic.
  std::map<std::tuple<MultiIndex, double, bool>, double> merged;
  for (const auto& t : xz.terms) merged[{t.beta, t.zpow, t.odd}] += t.coef;
  for (const auto& t : zx.terms) merged[{t.beta, t.zpow, t.odd}] -= t.coef;
  for (const auto& t : x.terms) merged[{t.beta, t.zpow, t.odd}] -= t.coef;
  GrushinPolynomial c;
  c.n = f.n;
  for (const auto& [key, v] : merged)
    c.terms.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), v});
  double worst = 0.0;
  for (const auto& s : samples) worst = std::max(worst, std::abs(c.evaluate(s.x, s.z)));
  return worst;
}

// ------------------------------------------------------- fundamental solution

namespace {

double c_alpha_uncached(double alpha, int n) {
  namespace bq = boost::math::quadrature;
  const double b = alpha + 1.0;
  const double Q = 1.0 + n * b;
  const double p = 1.0 + (Q + 2.0 * alpha) / (2.0 * b);
  const double sphere = 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
  bq::exp_sinh<double> outer, inner;
  // x enters only through |x|, so the R^n integral becomes |S^{n-1}| int_0^inf t^{n-1} dt.
  auto fz = [&](double z) {
    const double zb = std::pow(z, 2.0 * b) + 1.0;
    auto ft = [&](double t) {
      const double v = std::pow(t, n - 1.0) * std::pow(b * b * t * t + zb, -p);
      return std::isfinite(v) ? v : 0.0;
    };
    const double v = std::pow(z, 2.0 * alpha) * inner.integrate(ft, 1e-13);
    return std::isfinite(v) ? v : 0.0;
  };
  const double integral = 2.0 * sphere * outer.integrate(fz, 1e-12);
  return 1.0 / ((Q + 2.0 * alpha) * (Q - 2.0) * integral);
}

}  // namespace

double c_alpha_constant(double alpha, int n) {
  if (!(alpha > -0.5)) throw DomainError("alpha must exceed -1/2");
  const double Q = 1.0 + n * (alpha + 1.0);
  if (!(Q > 2.0)) throw DomainError("fundamental solution needs Q > 2");
  static std::mutex mu;
  static std::map<std::pair<double, int>, double> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find({alpha, n});
  if (it != cache.end()) return it->second;
  const double c = c_alpha_uncached(alpha, n);
  cache.emplace(std::make_pair(alpha, n), c);
  return c;
}

double fundamental_solution(std::span<const double> x, double z, double alpha, int n) {
  const double rho = rho_alpha(x, z, alpha);
  if (rho == 0.0) throw UndefinedError("fundamental solution is singular at the origin");
  const double Q = 1.0 + n * (alpha + 1.0);
  return c_alpha_constant(alpha, n) / std::pow(rho, Q - 2.0);
}

double b_alpha_stencil_residual(std::span<const double> x, double z, double alpha, int n,
                                double h) {
  if (z == 0.0 && alpha != 0.0) throw UndefinedError("stencil needs z != 0");
  auto G = [&](std::span<const double> xx, double zz) {
    return fundamental_solution(xx, zz, alpha, n);
  };
  const double g0 = G(x, z);
  double r = (G(x, z + h) - 2.0 * g0 + G(x, z - h)) / (h * h);
  std::vector<double> xp(x.begin(), x.end()), xm = xp;
  double lap = 0.0;
  for (int i = 0; i < n; ++i) {
    xp[i] += h;
    xm[i] -= h;
    lap += (G(xp, z) - 2.0 * g0 + G(xm, z)) / (h * h);
    xp[i] = xm[i] = x[i];
  }
  return r + std::pow(std::abs(z), 2.0 * alpha) * lap;
}

// ---------------------------------------------------------------- transports

double GrushinView::value(std::span<const double> x, double z) const {
  Point p;
  for (int i = 0; i < dim(); ++i) p.x[i] = x[i];
  p.y = h_inverse(std::abs(z), p_);
  return f_.value(p);
}

void GrushinView::gradient(std::span<const double> x, double z, std::span<double> g) const {
  Point p;
  const int n = dim();
  for (int i = 0; i < n; ++i) p.x[i] = x[i];
  const double az = std::abs(z);
  p.y = h_inverse(az, p_);
  double ge[4];
  f_.gradient(p, std::span<double>(ge, n + 1));
  for (int i = 0; i < n; ++i) g[i] = ge[i];
  // dy/dz = z^alpha for y = h^{-1}(z)
  const double sgn = z > 0.0 ? 1.0 : (z < 0.0 ? -1.0 : 0.0);
  g[n] = sgn * ge[n] * (az == 0.0 ? 0.0 : std::pow(az, p_.alpha));
}

double ExtensionView::value(const Point& p) const {
  return g_.value(std::span<const double>(p.x.data(), dim()), h_transform(std::abs(p.y), p_));
}

void ExtensionView::gradient(const Point& p, std::span<double> g) const {
  const int n = dim();
  const double ay = std::abs(p.y);
  double gg[4];
  g_.gradient(std::span<const double>(p.x.data(), n), h_transform(ay, p_),
              std::span<double>(gg, n + 1));
  for (int i = 0; i < n; ++i) g[i] = gg[i];
  if (ay == 0.0) {
    g[n] = 0.0;
    return;
  }
  const double sgn = p.y > 0.0 ? 1.0 : -1.0;
  g[n] = sgn * gg[n] * jacobian_weight(ay, p_);
}

GridField to_grushin(const GridField& field, const WeightParams& params) {
  if (!(params.a > -1.0 && params.a < 1.0)) throw DomainError("a must lie in (-1,1)");
  const GridSpec& s = field.spec();
  std::vector<double> z;
  for (double y : s.y_nodes()) z.push_back(h_transform(y, params));
  GridField out(GridSpec(s.n(), s.half_width(), s.nx(), std::move(z)), field.values());
  out.contact_mask = field.contact_mask;
  out.neumann_trace = field.neumann_trace;
  return out;
}

GridField from_grushin(const GridField& field, const WeightParams& params) {
  if (!(params.a > -1.0 && params.a < 1.0)) throw DomainError("a must lie in (-1,1)");
  const GridSpec& s = field.spec();
  std::vector<double> y;
  for (double z : s.y_nodes()) y.push_back(h_inverse(z, params));
  GridField out(GridSpec(s.n(), s.half_width(), s.nx(), std::move(y)), field.values());
  out.contact_mask = field.contact_mask;
  out.neumann_trace = field.neumann_trace;
  return out;
}

// ------------------------------------------------------------- pushforward

double pushforward_integral(const std::function<double(std::span<const double>, double)>& f,
                            double r, const WeightParams& params, IntegralKind kind, int n_polar,
                            int n_azimuth, int n_radial, double absorb) {
  const int n = params.n;
  const double a = params.a;
  const double R = h_inverse(r, params);
  const double e = absorb - a;
  const SphereRule rule(n, e, n_polar, n_azimuth);
  const std::vector<double> origin(n, 0.0);
  auto ft = [&](const Point& p, const Point&) {
    const double ay = std::abs(p.y);
    const double z = (p.y < 0.0 ? -1.0 : 1.0) * h_transform(ay, params);
    const double v = f(std::span<const double>(p.x.data(), n), z);
    return absorb == 0.0 ? v : v / std::pow(ay, absorb);
  };
  if (kind == IntegralKind::sphere) return std::pow(R, a) * rule.integrate_full(ft, origin, R);
  const Rule1D radial = gauss_jacobi_interval(n_radial, n + e, R);
  double acc = 0.0;
  for (int i = 0; i < n_radial; ++i) {
    const double t = radial.nodes[i];
    acc += radial.weights[i] * rule.integrate_full(ft, origin, t) / rule.scale(t);
  }
  return std::pow(1.0 - a, a) * acc;
}

GrushinFunctionals grushin_frequency(const GrushinField& u, double r, const WeightParams& params,
                                     int n_polar, int n_azimuth, int n_radial) {
  const int n = u.dim();
  const double alpha = params.alpha;
  auto height = [&](std::span<const double> x, double z) {
    const double v = u.value(x, z);
    return v * v * psi_alpha(x, z, alpha);
  };
  auto energy = [&](std::span<const double> x, double z) {
    double g[4];
    u.gradient(x, z, std::span<double>(g, n + 1));
    double gx = 0.0;
    for (int i = 0; i < n; ++i) gx += g[i] * g[i];
    return std::pow(std::abs(z), 2.0 * alpha) * gx + g[n] * g[n];
  };
  GrushinFunctionals out;
  // Both integrands carry |y|^{2a} after transport: psi through |z|^{2 alpha}, the energy
  // through |z|^{2 alpha} |grad_x u|^2 and (dy/dz)^2.
  const double ab = 2.0 * params.a;
  out.H = pushforward_integral(height, r, params, IntegralKind::sphere, n_polar, n_azimuth,
                               n_radial, ab);
  out.D = pushforward_integral(energy, r, params, IntegralKind::ball, n_polar, n_azimuth, n_radial,
                               ab);
  if (out.H == 0.0) throw UndefinedError("Grushin frequency undefined: H = 0");
  out.N = r * out.D / out.H;
  return out;
}

}  // namespace fraclab
