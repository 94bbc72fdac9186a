#include "fraclab/blowup.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "fraclab/parallel.hpp"
#include "json.hpp"

namespace fraclab {

namespace {

bool is_zero_obstacle(const ObstacleSpec& o) {
  if (o.kind() != ObstacleSpec::Kind::polynomial) return false;
  for (const auto& [b, c] : o.coefficients())
    if (c != 0.0) return false;
  return true;
}

// Least-squares slope of log v against log r over positive entries.
double loglog_slope(const std::vector<double>& r, const std::vector<double>& v) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!(v[i] > 0.0)) continue;
    const double x = std::log(r[i]), y = std::log(v[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  if (m < 2) return std::numeric_limits<double>::quiet_NaN();
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

// Unit directions in R^n used to sample sup_{|x| = t}.
std::vector<std::array<double, 2>> thin_directions(int n) {
  if (n == 1) return {{1.0, 0.0}, {-1.0, 0.0}};
  std::vector<std::array<double, 2>> d;
  for (int q = 0; q < 64; ++q) {
    const double t = 2.0 * std::numbers::pi * q / 64.0;
    d.push_back({std::cos(t), std::sin(t)});
  }
  return d;
}

double laplacian_of(const ObstacleSpec& o, std::span<const double> x) {
  double acc = 0.0;
  for (int i = 0; i < o.n(); ++i) {
    MultiIndex b(o.n(), 0);
    b[i] = 2;
    acc += o.derivative(x, b);
  }
  return acc;
}

}  // namespace

// ------------------------------------------------------------ normalisation

Polynomial extend_polynomial(const Polynomial& q, const WeightParams& params) {
  if (q.depends_on_y()) throw DomainError("extend_polynomial expects a polynomial on R^n");
  std::map<int, Polynomial> parts;
  for (const auto& [key, c] : q.terms()) {
    int deg = 0;
    for (int b : key.first) deg += b;
    auto it = parts.try_emplace(deg, Polynomial(q.n())).first;
    it->second.add_term(key.first, 0, c);
  }
  Polynomial out(q.n());
  for (const auto& [deg, part] : parts) out += extend_la_harmonic(part, params).poly;
  return out;
}

ObstacleNormalizedField::ObstacleNormalizedField(std::shared_ptr<const ScalarField> base,
                                                 const ObstacleSpec& obstacle,
                                                 std::vector<double> x0, int k,
                                                 const WeightParams& params)
    : base_(std::move(base)),
      obstacle_(obstacle),
      x0_(std::move(x0)),
      q_(params.n),
      qt_(params.n),
      zero_obstacle_(is_zero_obstacle(obstacle)) {
  if (static_cast<int>(x0_.size()) != params.n || obstacle.n() != params.n)
    throw DomainError("obstacle_normalize: dimension mismatch");
  if (!zero_obstacle_) {
    q_ = taylor_polynomial(obstacle_, x0_, k);
    qt_ = extend_polynomial(q_, params);
  }
}

double ObstacleNormalizedField::value(const Point& p) const {
  const int n = dim();
  Point X = p;
  for (int i = 0; i < n; ++i) X.x[i] += x0_[i];
  double v = base_->value(X);
  if (zero_obstacle_) return v;
  const std::span<const double> xl(p.x.data(), n);
  return v - obstacle_.value(std::span<const double>(X.x.data(), n)) + q_.evaluate(xl, 0.0) -
         qt_.evaluate(xl, p.y);
}

void ObstacleNormalizedField::gradient(const Point& p, std::span<double> g) const {
  const int n = dim();
  Point X = p;
  for (int i = 0; i < n; ++i) X.x[i] += x0_[i];
  base_->gradient(X, g);
  if (zero_obstacle_) return;
  const std::span<const double> xl(p.x.data(), n);
  double gq[4], gt[4];
  q_.gradient(xl, 0.0, std::span<double>(gq, n + 1));
  qt_.gradient(xl, p.y, std::span<double>(gt, n + 1));
  for (int i = 0; i < n; ++i) {
    MultiIndex b(n, 0);
    b[i] = 1;
    g[i] += -obstacle_.derivative(std::span<const double>(X.x.data(), n), b) + gq[i] - gt[i];
  }
  g[n] -= gt[n];
}

bool ObstacleNormalizedField::covers_ball(std::span<const double> c, double r) const {
  double X[3];
  for (int i = 0; i < dim(); ++i) X[i] = x0_[i] + c[i];
  return base_->covers_ball(std::span<const double>(X, dim()), r);
}

bool on_free_boundary(const GridField& f, std::span<const double> x0) {
  if (!f.contact_mask) throw DomainError("free-boundary test needs a contact mask");
  const GridSpec& g = f.spec();
  const double reach = 2.0 * g.hx() * (1.0 + 1e-9);
  bool contact = false, free = false;
  const int n2 = g.n() == 2 ? g.nx() : 1;
  for (int i2 = 0; i2 < n2; ++i2)
    for (int i1 = 0; i1 < g.nx(); ++i1) {
      double d2 = std::pow(g.x_node(i1) - x0[0], 2);
      if (g.n() == 2) d2 += std::pow(g.x_node(i2) - x0[1], 2);
      if (d2 > reach * reach) continue;
      ((*f.contact_mask)[g.thin_index(i1, i2)] ? contact : free) = true;
    }
  return contact && free;
}

std::vector<std::vector<double>> free_boundary_nodes(const GridField& f) {
  if (!f.contact_mask) throw DomainError("free-boundary detection needs a contact mask");
  const GridSpec& g = f.spec();
  const auto& m = *f.contact_mask;
  std::vector<std::vector<double>> out;
  const int last = g.nx() - 1;
  if (g.n() == 1) {
    for (int i = 1; i < last; ++i)
      if (m[i] && (!m[i - 1] || !m[i + 1])) out.push_back({g.x_node(i)});
    return out;
  }
  for (int i2 = 1; i2 < last; ++i2)
    for (int i1 = 1; i1 < last; ++i1) {
      if (!m[g.thin_index(i1, i2)]) continue;
      if (!m[g.thin_index(i1 - 1, i2)] || !m[g.thin_index(i1 + 1, i2)] ||
          !m[g.thin_index(i1, i2 - 1)] || !m[g.thin_index(i1, i2 + 1)])
        out.push_back({g.x_node(i1), g.x_node(i2)});
    }
  return out;
}

std::shared_ptr<ObstacleNormalizedField> obstacle_normalize(std::shared_ptr<const GridField> solved,
                                                            const ObstacleSpec& obstacle,
                                                            std::span<const double> x0, int k,
                                                            const WeightParams& params) {
  if (solved->contact_mask && !on_free_boundary(*solved, x0))
    throw DomainError("x0 is not on the free boundary of the solved field");
  return std::make_shared<ObstacleNormalizedField>(
      solved, obstacle, std::vector<double>(x0.begin(), x0.end()), k, params);
}

ResidualScaling obstacle_residual_scaling(const ObstacleSpec& obstacle, std::span<const double> x0,
                                          int k, const std::vector<double>& radii) {
  const int n = obstacle.n();
  ResidualScaling out;
  out.radii = radii;
  if (is_zero_obstacle(obstacle)) {
    out.sup.assign(radii.size(), 0.0);
    out.exact = true;
    return out;
  }
  const Polynomial lq = taylor_polynomial(obstacle, x0, k).laplacian_x();
  double worst = 0.0, scale = 0.0;
  for (double t : radii) {
    double s = 0.0;
    for (const auto& d : thin_directions(n)) {
      double xl[2], X[2];
      for (int i = 0; i < n; ++i) {
        xl[i] = t * d[i];
        X[i] = x0[i] + xl[i];
      }
      const double lphi = laplacian_of(obstacle, std::span<const double>(X, n));
      scale = std::max(scale, std::abs(lphi));
      s = std::max(s, std::abs(lphi - lq.evaluate(std::span<const double>(xl, n), 0.0)));
    }
    out.sup.push_back(s);
    worst = std::max(worst, s);
  }
  out.exact = worst <= 1e-12 * std::max(1.0, scale);
  out.slope = out.exact ? 0.0 : loglog_slope(out.radii, out.sup);
  return out;
}

// ------------------------------------------------------------ rescaling

RescaledField::RescaledField(std::shared_ptr<const ScalarField> base, std::vector<double> x0,
                             double r, double d_r, Normalization norm)
    : base_(std::move(base)), x0_(std::move(x0)), r_(r), d_(d_r), norm_(norm) {
  if (!(r > 0.0)) throw DomainError("rescale: r must be positive");
  if (!(d_r > 0.0)) throw UndefinedError("rescale: d_r = 0, the field vanishes on the sphere");
}

Point RescaledField::map(const Point& p) const {
  Point q;
  for (int i = 0; i < dim(); ++i) q.x[i] = x0_[i] + r_ * p.x[i];
  q.y = r_ * p.y;
  return q;
}

double RescaledField::value(const Point& p) const { return base_->value(map(p)) / d_; }

void RescaledField::gradient(const Point& p, std::span<double> g) const {
  base_->gradient(map(p), g);
  for (int i = 0; i <= dim(); ++i) g[i] *= r_ / d_;
}

bool RescaledField::covers_ball(std::span<const double> c, double rho) const {
  double X[3];
  for (int i = 0; i < dim(); ++i) X[i] = x0_[i] + r_ * c[i];
  return base_->covers_ball(std::span<const double>(X, dim()), r_ * rho);
}

GridField RescaledField::materialize(const GridSpec& unit) const {
  if (unit.n() != dim()) throw DomainError("materialize: grid dimension mismatch");
  std::vector<double> v(unit.size());
  const int n2 = unit.n() == 2 ? unit.nx() : 1;
  for (int i2 = 0; i2 < n2; ++i2)
    for (int i1 = 0; i1 < unit.nx(); ++i1)
      for (int j = 0; j < unit.ny(); ++j) {
        Point p;
        p.x[0] = unit.x_node(i1);
        if (unit.n() == 2) p.x[1] = unit.x_node(i2);
        p.y = unit.y_nodes()[j];
        v[unit.index(i1, i2, j)] = value(p);
      }
  return GridField(unit, std::move(v));
}

RescaledField rescale(std::shared_ptr<const ScalarField> field, std::span<const double> x0,
                      double r, Normalization norm, const FunctionalEngine& engine, double kappa) {
  const WeightParams& P = engine.params();
  double d;
  if (norm == Normalization::almgren) {
    const double H = engine.height(*field, x0, r);
    d = std::sqrt(H / std::pow(r, P.n + P.a));
  } else {
    d = std::pow(r, kappa);
  }
  return RescaledField(std::move(field), std::vector<double>(x0.begin(), x0.end()), r, d, norm);
}

// ------------------------------------------------------------ frequency

FrequencyEstimate frequency_at(const ScalarField& field, std::span<const double> x0,
                               const FrequencyConfig& cfg, const FunctionalEngine& engine) {
  FunctionalConfig fc = cfg.functional;
  if (cfg.grid_h > 0.0) {
    fc.r_min = std::max(fc.r_min, 4.0 * cfg.grid_h);
    fc.slack = std::max(fc.slack, cfg.slack_c * cfg.grid_h * cfg.grid_h);
  }
  if (cfg.generalized) fc.validate(cfg.gamma);
  else if (!(fc.r_min > 0.0 && fc.r_max > fc.r_min) || fc.count < 3)
    throw DomainError("frequency_at needs 0 < r_min < r_max and at least 3 radii");
  const auto radii = fc.radii();
  const WeightParams& P = engine.params();
  const std::vector<double> c(x0.begin(), x0.end());

  FrequencyEstimate est;
  est.profile.name = cfg.generalized ? "Phi" : "N";
  est.profile.radii = radii;
  est.profile.values.assign(radii.size(), 0.0);
  std::vector<double> core(radii.size());  // the profile with the (1 + C0 r^theta) factor removed
  std::vector<int> trunc(radii.size(), 0);
  parallel_for(radii.size(), [&](std::size_t i) {
    const double r = radii[i];
    if (cfg.generalized) {
      bool t = false;
      const double phi = engine.generalized_frequency(field, c, fc, cfg.k, cfg.gamma, r, &t);
      est.profile.values[i] = phi;
      core[i] = phi / (1.0 + fc.C0 * std::pow(r, fc.theta));
      trunc[i] = t;
    } else {
      est.profile.values[i] = engine.frequency(field, c, r);
      core[i] = est.profile.values[i];
    }
  });
  est.truncated = trunc.front() != 0;
  double scale = 0.0;
  for (double v : est.profile.values) scale = std::max(scale, std::abs(v));
  // Round-off floor, so that an exactly constant profile is not reported as decreasing.
  est.monotone = monotonicity_report(est.profile, std::max(fc.slack, 1e-12 * scale));
  est.undetermined = !est.monotone.pass;

  // Aitken on the three smallest radii: core(r) ~ L + c r^p on a geometric schedule.
  const double N1 = core[0], N2 = core[1], N3 = core[2];
  est.raw_small = N1;
  double limit = N1;
  const double d1 = N2 - N1, d2 = N3 - N2;
  const double q = radii[1] / radii[0];
  if (std::abs(d2) > 1e-14 * std::max(1.0, std::abs(N1))) {
    const double rho = d1 / d2;
    if (rho > 0.0 && rho < 0.95) {
      const double cand = N1 - d1 * rho / (1.0 - rho);
      if (std::abs(cand - N1) <= std::abs(N3 - N1)) {
        limit = cand;
        est.extrapolation_used = true;
        est.order = -std::log(rho) / std::log(q);
      }
    }
  }
  est.extrapolated = limit;
  est.kappa_hat = cfg.generalized ? (limit - P.n - P.a) / 2.0 : limit;
  return est;
}

// ------------------------------------------------------------ fitting

BlowupFit fit_blowup_polynomial(const ScalarField& f, int m, const FunctionalEngine& engine) {
  if (m < 1) throw DomainError("blow-up fit needs m >= 1");
  const WeightParams& P = engine.params();
  const auto basis = basis_solid_harmonics(2 * m, P.n, P);
  const int K = static_cast<int>(basis.size());
  std::vector<PolynomialField> bf;
  for (const auto& b : basis) bf.emplace_back(b.poly);
  Eigen::MatrixXd G(K, K);
  Eigen::VectorXd rhs(K);
  for (int i = 0; i < K; ++i) {
    for (int j = i; j < K; ++j) G(i, j) = G(j, i) = engine.sphere_inner(bf[i], bf[j]);
    rhs(i) = engine.sphere_inner(bf[i], f);
  }
  const Eigen::VectorXd c = G.ldlt().solve(rhs);
  BlowupFit out;
  out.p = SolidHarmonic{Polynomial(P.n), 2 * m, P};
  for (int i = 0; i < K; ++i) {
    out.coefficients.push_back(c(i));
    out.p.poly += basis[i].poly * c(i);
  }
  const double origin[3] = {0, 0, 0};
  out.residual = engine.monneau(f, std::span<const double>(origin, P.n), out.p, 1.0);
  return out;
}

// ------------------------------------------------------------ density

RadialProfile coincidence_density(const GridField& f, std::span<const double> x0,
                                  const std::vector<double>& radii) {
  if (!f.contact_mask) throw DomainError("coincidence density needs a contact mask");
  const GridSpec& g = f.spec();
  RadialProfile out;
  out.name = "density";
  const int n2 = g.n() == 2 ? g.nx() : 1;
  for (double r : radii) {
    if (r < 3.0 * g.hx()) continue;
    for (int i = 0; i < g.n(); ++i)
      if (std::abs(x0[i]) + r > g.half_width() * (1 + 1e-12))
        throw GeometryError("density ball leaves the box");
    std::size_t total = 0, hit = 0;
    for (int i2 = 0; i2 < n2; ++i2)
      for (int i1 = 0; i1 < g.nx(); ++i1) {
        double d2 = std::pow(g.x_node(i1) - x0[0], 2);
        if (g.n() == 2) d2 += std::pow(g.x_node(i2) - x0[1], 2);
        if (d2 > r * r * (1 + 1e-12)) continue;
        ++total;
        hit += (*f.contact_mask)[g.thin_index(i1, i2)];
      }
    out.radii.push_back(r);
    out.values.push_back(static_cast<double>(hit) / static_cast<double>(total));
  }
  return out;
}

DensityVerdict density_vanishing(const RadialProfile& d) {
  DensityVerdict v;
  if (d.values.empty()) return v;
  v.last = d.values.back();
  std::vector<double> r, val;
  for (std::size_t i = 0; i < d.radii.size(); ++i)
    if (d.radii[i] >= d.radii.back() / 10.0 * (1 - 1e-12)) {
      r.push_back(d.radii[i]);
      val.push_back(d.values[i]);
    }
  bool all_zero = std::all_of(val.begin(), val.end(), [](double x) { return x == 0.0; });
  v.slope = all_zero ? -std::numeric_limits<double>::infinity() : loglog_slope(r, val);
  v.vanishing = v.last < 0.1 && v.slope < -0.5;
  return v;
}

// ------------------------------------------------------------ classification

std::string to_string(BlowupReport::Kind k) {
  switch (k) {
    case BlowupReport::Kind::regular: return "regular";
    case BlowupReport::Kind::singular: return "singular";
    case BlowupReport::Kind::other: return "other";
    default: return "undetermined";
  }
}

namespace {

BlowupFit pruned_fit(BlowupFit fit, double prune_rel, int budget) {
  const double mx = fit.p.poly.max_abs_coefficient();
  fit.p.poly = fit.p.poly.pruned(prune_rel * mx);
  fit.trace = nonneg_trace_check(fit.p, budget);
  fit.accepted = fit.trace.outcome != TraceCheck::Outcome::negative_witness;
  return fit;
}

double sphere_distance(const Polynomial& p, const Polynomial& q, const FunctionalEngine& e) {
  PolynomialField d(p - q);
  return std::sqrt(std::max(0.0, e.sphere_inner(d, d)));
}

}  // namespace

BlowupReport classify(std::shared_ptr<const GridField> solved, const ObstacleSpec& obstacle,
                      std::span<const double> x0, const WeightParams& params,
                      const ClassifyConfig& config, const FunctionalEngine& engine) {
  BlowupReport rep;
  rep.x0.assign(x0.begin(), x0.end());
  const int n = params.n;
  const auto v = obstacle_normalize(solved, obstacle, x0, config.frequency.k, params);
  const double origin[3] = {0, 0, 0};
  const std::span<const double> o(origin, n);

  FrequencyConfig fcfg = config.frequency;
  if (fcfg.grid_h <= 0.0) fcfg.grid_h = solved->spec().hx();
  rep.frequency = frequency_at(*v, o, fcfg, engine);
  const double kh = rep.frequency.kappa_hat;

  std::vector<double> dr = config.density_radii;
  if (dr.empty()) dr = rep.frequency.profile.radii;
  rep.density = coincidence_density(*solved, x0, dr);
  rep.density_verdict = density_vanishing(rep.density);

  // Nondegeneracy and sup growth over the frequency radii.
  std::vector<double> sups;
  rep.nondegeneracy_lo = std::numeric_limits<double>::infinity();
  rep.nondegeneracy_hi = 0.0;
  for (double r : rep.frequency.profile.radii) {
    const double s = engine.sup_on_sphere(*v, o, r);
    sups.push_back(s);
    const double ratio = s / std::pow(r, kh);
    rep.nondegeneracy_lo = std::min(rep.nondegeneracy_lo, ratio);
    rep.nondegeneracy_hi = std::max(rep.nondegeneracy_hi, ratio);
  }
  rep.sup_slope = loglog_slope(rep.frequency.profile.radii, sups);
  const bool zero_obs = is_zero_obstacle(obstacle);
  const double kg = config.frequency.k + config.frequency.gamma;
  rep.branch = (config.frequency.generalized && rep.frequency.truncated &&
                rep.sup_slope > kg - config.eps_dichotomy)
                   ? "b"
                   : "a";

  std::ostringstream why;
  if (rep.frequency.undetermined) {
    rep.kind = BlowupReport::Kind::undetermined;
    why << rep.frequency.monotone.detail;
  } else if (std::abs(kh - (1.0 + params.s)) < config.tol_regular) {
    rep.kind = BlowupReport::Kind::regular;
    why << "kappa_hat within " << config.tol_regular << " of 1+s";
  } else {
    const int m = static_cast<int>(std::lround(kh / 2.0));
    const bool even_match = m >= 1 && std::abs(kh - 2.0 * m) < config.tol_singular;
    const bool below_k = zero_obs || 2 * m <= config.frequency.k;
    if (even_match && below_k && rep.density_verdict.vanishing) {
      const double R = config.fit_radius > 0.0 ? config.fit_radius : rep.frequency.profile.radii.back();
      auto fit_at = [&](double r) {
        const RescaledField w = rescale(v, o, r, Normalization::almgren, engine);
        return pruned_fit(fit_blowup_polynomial(w, m, engine), config.prune_rel,
                          config.trace_budget);
      };
      rep.fit = fit_at(R);
      rep.fit_half = fit_at(R / 2.0);
      rep.fit_distance = sphere_distance(rep.fit->p.poly, rep.fit_half->p.poly, engine);
      if (rep.fit->accepted) {
        rep.kind = BlowupReport::Kind::singular;
        rep.m = m;
        rep.d = stratum_dimension(rep.fit->p);
        why << "kappa_hat near 2m = " << 2 * m << ", density vanishing, fit "
            << to_string(rep.fit->trace.outcome);
      } else {
        rep.kind = BlowupReport::Kind::other;
        why << "best fit has a negative trace";
      }
    } else {
      rep.kind = BlowupReport::Kind::other;
      if (!even_match) why << "kappa_hat matches neither 1+s nor an even integer";
      else if (!below_k) why << "2m exceeds k";
      else why << "density profile not vanishing";
      if (rep.branch == "b") why << "; dichotomy (b)";
    }
  }
  rep.detail = why.str();
  return rep;
}

std::vector<BlowupReport> classify_many(std::shared_ptr<const GridField> solved,
                                        const ObstacleSpec& obstacle,
                                        const std::vector<std::vector<double>>& points,
                                        const WeightParams& params, const ClassifyConfig& config,
                                        const FunctionalEngine& engine) {
  std::vector<BlowupReport> out(points.size());
  // Each classification already spreads its radii over the workers, so points run in turn
  // when there is a single point and in parallel otherwise.
  parallel_for(points.size(), [&](std::size_t i) {
    out[i] = classify(solved, obstacle, points[i], params, config, engine);
  });
  return out;
}

std::string to_json(const BlowupReport& r) {
  nlohmann::json j;
  j["x0"] = r.x0;
  j["kappa_hat"] = r.frequency.kappa_hat;
  j["kappa_raw"] = r.frequency.raw_small;
  j["extrapolation_used"] = r.frequency.extrapolation_used;
  j["truncated"] = r.frequency.truncated;
  j["branch"] = r.branch;
  j["classification"] = to_string(r.kind);
  j["m"] = r.m;
  j["d"] = r.d;
  if (r.fit) {
    j["poly"] = nlohmann::json::parse(r.fit->p.poly.to_json());
    j["residual"] = r.fit->residual;
    j["trace_check"] = to_string(r.fit->trace.outcome);
    j["fit_distance_half_radius"] = r.fit_distance;
  } else {
    j["poly"] = nullptr;
    j["residual"] = nullptr;
  }
  j["density"] = nlohmann::json::array();
  for (std::size_t i = 0; i < r.density.radii.size(); ++i)
    j["density"].push_back({{"r", r.density.radii[i]}, {"value", r.density.values[i]}});
  j["frequency_profile"] = nlohmann::json::array();
  for (std::size_t i = 0; i < r.frequency.profile.radii.size(); ++i)
    j["frequency_profile"].push_back(
        {{"r", r.frequency.profile.radii[i]}, {"value", r.frequency.profile.values[i]}});
  j["nondegeneracy"] = {{"lo", r.nondegeneracy_lo}, {"hi", r.nondegeneracy_hi}};
  j["sup_slope"] = r.sup_slope;
  j["detail"] = r.detail;
  return j.dump(2);
}

// ------------------------------------------------------------ strata

StrataTable stratify(const std::vector<BlowupReport>& reports, const FunctionalEngine& engine,
                     double neighbour_radius) {
  StrataTable t;
  for (std::size_t i = 0; i < reports.size(); ++i)
    if (reports[i].kind == BlowupReport::Kind::singular)
      t.groups[{reports[i].m, reports[i].d}].push_back(i);
  for (const auto& [key, idx] : t.groups)
    for (std::size_t a = 0; a < idx.size(); ++a)
      for (std::size_t b = a + 1; b < idx.size(); ++b) {
        const auto& A = reports[idx[a]];
        const auto& B = reports[idx[b]];
        double sep = 0.0;
        for (std::size_t k = 0; k < A.x0.size(); ++k) sep += std::pow(A.x0[k] - B.x0[k], 2);
        sep = std::sqrt(sep);
        if (sep > neighbour_radius) continue;
        const double d = sphere_distance(A.fit->p.poly, B.fit->p.poly, engine);
        t.pairs.push_back({idx[a], idx[b], sep, d * d});
      }
  return t;
}

void write_strata_csv(const std::string& path, const std::string& header_comment,
                      const std::vector<BlowupReport>& reports, const StrataTable& table) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  std::istringstream hc(header_comment);
  for (std::string line; std::getline(hc, line);) out << "# " << line << '\n';
  out << "m,d,x1,x2,kappa_hat,residual\n";
  char buf[256];
  for (const auto& [key, idx] : table.groups)
    for (std::size_t i : idx) {
      const auto& r = reports[i];
      std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g,%.17g,%.17g\n", key.first, key.second,
                    r.x0[0], r.x0.size() > 1 ? r.x0[1] : 0.0, r.frequency.kappa_hat,
                    r.fit ? r.fit->residual : std::numeric_limits<double>::quiet_NaN());
      out << buf;
    }
  out << "# pairs: i,j,separation,distance\n";
  for (const auto& p : table.pairs) {
    std::snprintf(buf, sizeof buf, "# %zu,%zu,%.17g,%.17g\n", p.i, p.j, p.separation, p.distance);
    out << buf;
  }
}

}  // namespace fraclab
