#include "fraclab/fracops.hpp"

#include <algorithm>
#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <limits>
#include <numbers>

#include "fraclab/parallel.hpp"
#include "fraclab/quadrature.hpp"

namespace fraclab {

namespace {

constexpr double kPi = std::numbers::pi;

double sphere_area(int n) { return n == 1 ? 2.0 : 2.0 * kPi; }

// A(r) = int_{S^{n-1}} (2u(x) - u(x + r w) - u(x - r w)) dw.
class Spherical {
 public:
  Spherical(const TraceFn& u, int n, std::span<const double> x, int n_angle)
      : u_(u), n_(n), x_(x.begin(), x.end()), u0_(u(x)) {
    if (n == 1) {
      dirs_ = {{1.0, 0.0}};
      w_ = 2.0;
    } else {
      for (int k = 0; k < n_angle; ++k) {
        const double t = kPi * k / n_angle;
        dirs_.push_back({std::cos(t), std::sin(t)});
      }
      w_ = 2.0 * kPi / n_angle;  // trapezoid on [0, pi), doubled for the antipodal half
    }
  }

  double u0() const { return u0_; }

  double operator()(double r) const {
    double acc = 0.0;
    double p[2], m[2];
    for (const auto& d : dirs_) {
      for (int i = 0; i < n_; ++i) {
        p[i] = x_[i] + r * d[i];
        m[i] = x_[i] - r * d[i];
      }
      acc += 2.0 * u0_ - u_(std::span<const double>(p, n_)) - u_(std::span<const double>(m, n_));
    }
    return w_ * acc;
  }

  double max_abs_on(double r, double shift) const {
    double best = 0.0;
    double p[2], m[2];
    for (const auto& d : dirs_) {
      for (int i = 0; i < n_; ++i) {
        p[i] = x_[i] + r * d[i];
        m[i] = x_[i] - r * d[i];
      }
      best = std::max({best, std::abs(u_(std::span<const double>(p, n_)) - shift),
                       std::abs(u_(std::span<const double>(m, n_)) - shift)});
    }
    return best;
  }

 private:
  const TraceFn& u_;
  int n_;
  std::vector<double> x_;
  double u0_;
  std::vector<std::array<double, 2>> dirs_;
  double w_;
};

// Composite Gauss-Legendre over [0, K], panels halving toward 0; the k^{2s} behaviour of
// the Fourier integrands near 0 is resolved by the geometric panels.
template <class F>
double fourier_radial(double K, F&& f) {
  static const Rule1D gl = gauss_legendre(24);
  double acc = 0.0;
  double hi = K;
  for (int level = 0; level < 18; ++level) {
    const double lo = level == 17 ? 0.0 : hi / 2.0;
    const double c = 0.5 * (hi + lo), h = 0.5 * (hi - lo);
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) acc += h * gl.weights[i] * f(c + h * gl.nodes[i]);
    hi = lo;
  }
  return acc;
}

// Forward-transform  k -> sum over |xi| = k  of  e^{2 pi i x.xi}, times the shell measure.
double shell_kernel(int n, double r, double k) {
  if (n == 1) return 2.0 * std::cos(2.0 * kPi * r * k);
  return 2.0 * kPi * k * boost::math::cyl_bessel_j(0, 2.0 * kPi * r * k);
}

double gaussian_hat(int n, double sigma, double k) {
  return std::pow(kPi * sigma * sigma, 0.5 * n) * std::exp(-kPi * kPi * sigma * sigma * k * k);
}

// Phi(t) = 2^{1-s}/Gamma(s) t^s K_s(t), the decaying solution of Phi'' + (a/t) Phi' = Phi
// with Phi(0) = 1.
double extension_profile(double s, double t) {
  if (t <= 0.0) return 1.0;
  if (t > 700.0) return 0.0;
  return std::pow(2.0, 1.0 - s) / std::tgamma(s) * std::pow(t, s) *
         boost::math::cyl_bessel_k(s, t);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

void FracEvalConfig::validate() const {
  if (!(delta > 0.0 && delta < R)) throw DomainError("frac config needs 0 < delta < R");
  if (order < 4) throw DomainError("frac config needs order >= 4");
  if (!(max_panel > 0.0)) throw DomainError("frac config needs max_panel > 0");
  if (n_angle < 4) throw DomainError("frac config needs n_angle >= 4");
  if (far == FarField::bounded && !(sup_bound >= 0.0))
    throw DomainError("bounded far field needs sup_bound >= 0");
}

FracEvalResult frac_laplacian(const TraceFn& u, int n, std::span<const double> x, double s,
                              const FracEvalConfig& cfg) {
  cfg.validate();
  if (n != 1 && n != 2) throw DomainError("frac_laplacian supports n in {1,2}");
  if (static_cast<int>(x.size()) != n) throw DomainError("frac_laplacian: point dimension");
  const double g = gamma_ns(n, s);
  const Spherical A(u, n, x, cfg.n_angle);

  // Inner piece: A(r) ~ r^2, so r^{-1-2s} A(r) = r^{1-2s} (A(r)/r^2).
  auto inner = [&](int m) {
    const Rule1D rule = gauss_jacobi_interval(m, 1.0 - 2.0 * s, cfg.delta);
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const double r = rule.nodes[i];
      acc += rule.weights[i] * A(r) / (r * r);
    }
    return acc;
  };
  const double in_hi = inner(cfg.order);
  const double in_lo = inner(cfg.order / 2);

  const Rule1D gl = gauss_legendre(cfg.order);
  double outer = 0.0;
  double a = cfg.delta;
  while (a < cfg.R) {
    const double b = std::min(cfg.R, a + std::min(a, cfg.max_panel));
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
      const double r = c + h * gl.nodes[i];
      outer += h * gl.weights[i] * std::pow(r, -1.0 - 2.0 * s) * A(r);
    }
    a = b;
  }

  FracEvalResult res;
  const double tail_scale = std::pow(cfg.R, -2.0 * s) / (2.0 * s);
  const double u_far = cfg.far == FarField::decaying ? cfg.u_infinity : 0.0;
  res.tail = 2.0 * (A.u0() - u_far) * sphere_area(n) * tail_scale;
  const double sup =
      cfg.far == FarField::bounded ? cfg.sup_bound : A.max_abs_on(cfg.R, u_far);
  res.tail_bound = 0.5 * g * 2.0 * sphere_area(n) * sup * tail_scale;
  res.inner_change = 0.5 * g * std::abs(in_hi - in_lo);
  const double total = in_hi + outer + res.tail;
  res.value = 0.5 * g * total;
  res.tail *= 0.5 * g;
  const double scale = std::max({1.0, std::abs(res.value), std::abs(A.u0())});
  if (res.inner_change > cfg.inner_tol * scale)
    throw DomainError("frac_laplacian: inner integral does not settle under refinement (" +
                      std::to_string(res.inner_change) + "); u is not C^2 near x");
  return res;
}

// ------------------------------------------------------------ gridded traces

GriddedTrace::GriddedTrace(const GridField& field, double s)
    : field_(&field), p_(field.spec().n() + 2.0 * s) {
  const GridSpec& g = field.spec();
  const int last = g.nx() - 1;
  double num = 0.0, den = 0.0;
  auto visit = [&](int i1, int i2) {
    double r2 = std::pow(g.x_node(i1), 2);
    if (g.n() == 2) r2 += std::pow(g.x_node(i2), 2);
    const double w = std::pow(r2, -0.5 * p_);
    num += field.node(i1, i2, 0) * w;
    den += w * w;
  };
  if (g.n() == 1) {
    visit(0, 0);
    visit(last, 0);
  } else {
    for (int i = 0; i <= last; ++i) {
      visit(i, 0);
      visit(i, last);
      if (i > 0 && i < last) {
        visit(0, i);
        visit(last, i);
      }
    }
  }
  c_ = den > 0.0 ? num / den : 0.0;
}

double GriddedTrace::operator()(std::span<const double> x) const {
  const GridSpec& g = field_->spec();
  double r2 = 0.0;
  bool inside = true;
  for (int i = 0; i < g.n(); ++i) {
    inside = inside && std::abs(x[i]) <= g.half_width();
    r2 += x[i] * x[i];
  }
  if (!inside) return c_ * std::pow(r2, -0.5 * p_);
  Point p;
  for (int i = 0; i < g.n(); ++i) p.x[i] = x[i];
  return field_->value(p);
}

TraceFn GriddedTrace::fn() const {
  return [self = *this](std::span<const double> x) { return self(x); };
}

// ------------------------------------------------------------ Gaussian oracle

double gaussian_fractional_laplacian(int n, double s, double sigma, double r) {
  if (!(sigma > 0.0)) throw DomainError("gaussian width must be positive");
  const double K = 9.0 / (kPi * sigma);
  return fourier_radial(K, [&](double k) {
    return std::pow(2.0 * kPi * k, 2.0 * s) * gaussian_hat(n, sigma, k) * shell_kernel(n, r, k);
  });
}

double gaussian_extension(int n, double s, double sigma, std::span<const double> center,
                          const Point& p) {
  double r2 = 0.0;
  for (int i = 0; i < n; ++i) r2 += std::pow(p.x[i] - center[i], 2);
  const double y = std::abs(p.y);
  if (y == 0.0) return std::exp(-r2 / (sigma * sigma));
  const double r = std::sqrt(r2);
  const double K = 9.0 / (kPi * sigma);
  return fourier_radial(K, [&](double k) {
    return gaussian_hat(n, sigma, k) * extension_profile(s, 2.0 * kPi * k * y) * shell_kernel(n, r, k);
  });
}

CalibrationFunction gaussian_calibration(int n, double s, double sigma, std::vector<double> center) {
  if (center.empty()) center.assign(n, 0.0);
  if (static_cast<int>(center.size()) != n) throw DomainError("calibration centre dimension");
  CalibrationFunction f;
  f.name = "gaussian(sigma=" + std::to_string(sigma) + ")";
  f.n = n;
  f.s = s;
  f.trace = [center, sigma, n](std::span<const double> x) {
    double r2 = 0.0;
    for (int i = 0; i < n; ++i) r2 += std::pow(x[i] - center[i], 2);
    return std::exp(-r2 / (sigma * sigma));
  };
  f.extension = [center, sigma, n, s](const Point& p) {
    return gaussian_extension(n, s, sigma, center, p);
  };
  f.frac = [center, sigma, n, s](std::span<const double> x) {
    double r2 = 0.0;
    for (int i = 0; i < n; ++i) r2 += std::pow(x[i] - center[i], 2);
    return gaussian_fractional_laplacian(n, s, sigma, std::sqrt(r2));
  };
  return f;
}

// ------------------------------------------------------------ complementarity

ComplementarityReport complementarity_residual(const SolveResult& solved,
                                               const ThinObstacleProblem& problem,
                                               const std::vector<std::vector<double>>& points,
                                               const FracEvalConfig& config) {
  const GridSpec& g = problem.grid;
  const GriddedTrace trace(*solved.field, problem.params.s);
  const TraceFn fn = trace.fn();
  ComplementarityReport rep;
  rep.points.resize(points.size());
  parallel_for(points.size(), [&](std::size_t k) {
    const auto& x = points[k];
    if (static_cast<int>(x.size()) != g.n()) throw DomainError("complementarity point dimension");
    int idx[2] = {0, 0};
    for (int i = 0; i < g.n(); ++i) {
      const double t = (x[i] + g.half_width()) / g.hx();
      idx[i] = static_cast<int>(std::lround(t));
      if (std::abs(t - idx[i]) > 1e-9 || idx[i] < 0 || idx[i] >= g.nx())
        throw DomainError("complementarity points must be thin grid nodes");
    }
    const std::size_t t = g.thin_index(idx[0], idx[1]);
    ComplementarityPoint& cp = rep.points[k];
    cp.x = x;
    cp.gap = solved.field->node(idx[0], idx[1], 0) - problem.phi[t];
    cp.frac = frac_laplacian(fn, g.n(), x, problem.params.s, config).value;
    cp.min = std::min(cp.gap, cp.frac);
    cp.lambda = solved.lambda[t];
  });
  for (const auto& p : rep.points) rep.max_violation = std::max(rep.max_violation, std::abs(p.min));
  return rep;
}

// ------------------------------------------------------------ calibration

namespace {

std::vector<std::pair<std::size_t, std::vector<double>>> central_nodes(const GridSpec& g) {
  std::vector<std::pair<std::size_t, std::vector<double>>> out;
  const int n2 = g.n() == 2 ? g.nx() : 1;
  const double lim = 0.5 * g.half_width() * (1 + 1e-12);
  for (int i2 = 0; i2 < n2; ++i2)
    for (int i1 = 1; i1 + 1 < g.nx(); ++i1) {
      std::vector<double> x = {g.x_node(i1)};
      if (g.n() == 2) {
        if (i2 == 0 || i2 + 1 == g.nx()) continue;
        x.push_back(g.x_node(i2));
      }
      if (std::all_of(x.begin(), x.end(), [&](double v) { return std::abs(v) <= lim; }))
        out.emplace_back(g.thin_index(i1, i2), std::move(x));
    }
  return out;
}

}  // namespace

Calibration calibrate_extension(const GridSpec& grid, const WeightParams& params,
                                const CalibrationFunction& fn, const SolverOptions& options,
                                double max_spread, CoordinateMode mode) {
  if (fn.n != params.n || std::abs(fn.s - params.s) > 1e-14)
    throw DomainError("calibration function does not match (n, s)");
  ThinObstacleProblem pr{params, grid, thin_samples(grid, fn.trace), fn.extension, mode, true};
  Calibration cal;
  cal.solve = psor_solve(pr, options);
  if (!cal.solve.converged) throw CalibrationError("calibration solve did not converge");

  const auto nodes = central_nodes(grid);
  std::vector<double> frac(nodes.size());
  parallel_for(nodes.size(), [&](std::size_t k) { frac[k] = fn.frac(nodes[k].second); });
  double fmax = 0.0;
  for (double f : frac) fmax = std::max(fmax, std::abs(f));
  std::vector<double> ratios;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    if (std::abs(frac[k]) < 0.2 * fmax) continue;
    CalibrationSample smp;
    smp.x = nodes[k].second;
    smp.lambda = cal.solve.lambda[nodes[k].first];
    smp.frac = frac[k];
    smp.ratio = smp.lambda / smp.frac;
    ratios.push_back(smp.ratio);
    cal.samples.push_back(std::move(smp));
  }
  if (ratios.empty()) throw CalibrationError("no calibration samples with a usable signal");
  cal.C_hat = median(ratios);
  const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
  cal.spread = (*hi - *lo) / std::abs(cal.C_hat);
  cal.ok = cal.spread < max_spread;
  return cal;
}

ConsistencyReport extension_consistency(const SolveResult& target,
                                        const ThinObstacleProblem& problem,
                                        const CalibrationFunction& fn,
                                        const FracEvalConfig& config,
                                        const SolverOptions& options, double max_spread) {
  ConsistencyReport rep;
  rep.calibration =
      calibrate_extension(problem.grid, problem.params, fn, options, max_spread, problem.mode);
  if (!rep.calibration.ok)
    throw CalibrationError("calibration ratio spread " + std::to_string(rep.calibration.spread) +
                           " exceeds " + std::to_string(max_spread));
  const GriddedTrace trace(*target.field, problem.params.s);
  const TraceFn tf = trace.fn();
  std::vector<std::pair<std::size_t, std::vector<double>>> nodes;
  for (auto& nd : central_nodes(problem.grid))
    if (problem.thin_dirichlet || !target.contact[nd.first]) nodes.push_back(std::move(nd));
  rep.points.resize(nodes.size());
  parallel_for(nodes.size(), [&](std::size_t k) {
    ConsistencyPoint& p = rep.points[k];
    p.x = nodes[k].second;
    p.lambda = target.lambda[nodes[k].first];
    p.frac = frac_laplacian(tf, problem.params.n, p.x, problem.params.s, config).value;
  });
  double scale = 0.0;
  for (const auto& p : rep.points) scale = std::max(scale, std::abs(p.lambda));
  for (auto& p : rep.points) {
    p.deviation = std::abs(p.lambda - rep.calibration.C_hat * p.frac) / std::max(scale, 1e-300);
    rep.max_deviation = std::max(rep.max_deviation, p.deviation);
  }
  return rep;
}

}  // namespace fraclab
