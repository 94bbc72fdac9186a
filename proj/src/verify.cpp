#include "fraclab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "fraclab/blowup.hpp"
#include "fraclab/functionals.hpp"
#include "fraclab/grushin.hpp"
#include "fraclab/harmonics.hpp"
#include "fraclab/quadrature.hpp"

namespace fraclab {

namespace {

constexpr double kOrigin[3] = {0, 0, 0};

VerifyCheck make(const std::string& suite, const std::string& name, double value, double tol,
                 std::string detail) {
  VerifyCheck c{suite, name, value, tol, std::isfinite(value) && value <= tol, std::move(detail)};
  return c;
}

double rel(double x, double ref) { return std::abs(x - ref) / std::max(std::abs(ref), 1e-300); }

// Five even polynomial fields in n = 1: three solid harmonics (one shifted by a constant)
// and two plain polynomials.
std::vector<Polynomial> identity_fields(const WeightParams& P) {
  std::vector<Polynomial> f;
  f.push_back(extend_la_harmonic(Polynomial::monomial({2}), P).poly);
  f.push_back(extend_la_harmonic(Polynomial::monomial({3}), P).poly);
  f.push_back(extend_la_harmonic(Polynomial::monomial({4}), P).poly + Polynomial::constant(1, 0.3));
  Polynomial g(1);
  g.add_term({1}, 0, 1.0);
  g.add_term({0}, 2, 0.5);
  f.push_back(g);
  Polynomial q(1);
  q.add_term({2}, 2, 1.0);
  q.add_term({1}, 0, -0.7);
  q.add_term({0}, 0, 0.2);
  f.push_back(q);
  return f;
}

std::vector<VerifyCheck> identities(const WeightParams& params, const std::string& fault) {
  const std::string S = "identities";
  double worst_h = 0.0, worst_n = 0.0;
  for (double a : {0.0, params.a}) {
    const auto P = WeightParams::from_s((1 - a) / 2, 1);
    FunctionalEngine eng(P);
    for (const auto& f : identity_fields(P)) {
      PolynomialField u(f);
      GrushinView G(u, P);
      for (int i = 0; i < 10; ++i) {
        const double r = 0.1 + 0.09 * i;
        const double rh = fault == "correspondence_height" ? r * (1 + 1e-4) : r;
        const auto g = grushin_frequency(G, h_transform(rh, P), P);
        worst_h = std::max(worst_h, rel(eng.height(u, kOrigin, r), std::pow(r, a) * g.H));
        const double rn = fault == "correspondence_frequency" ? r * (1 + 1e-4) : r;
        const auto gn = rn == rh ? g : grushin_frequency(G, h_transform(rn, P), P);
        worst_n = std::max(worst_n, rel(eng.frequency(u, kOrigin, r), (1 - a) * gn.N));
      }
    }
  }
  std::vector<VerifyCheck> out;
  out.push_back(make(S, "correspondence_height", worst_h, 1e-6,
                     "max relative |H~(r) - r^a H(h(r))|, 5 fields, 10 radii, a in {0, a}"));
  out.push_back(make(S, "correspondence_frequency", worst_n, 1e-6,
                     "max relative |N~(r) - (1-a) N(h(r))|"));

  // Weiss identity W = H (N - kappa) / r^{n+a+2 kappa} on a non-homogeneous field.
  FunctionalEngine eng(params);
  Polynomial q(params.n);
  MultiIndex b2(params.n, 0), b3(params.n, 0);
  b2[0] = 2;
  b3[0] = 3;
  q.add_term(b2, 0, 1.0);
  q.add_term(b3, 0, 0.4);
  PolynomialField u(extend_polynomial(q, params));
  const double kappa = fault == "weiss_identity" ? 2.0 + 1e-6 : 2.0;
  double worst_w = 0.0;
  for (double r : {0.2, 0.4, 0.7}) {
    const auto smp = eng.sample(u, std::span<const double>(kOrigin, params.n), r);
    const double W = eng.weiss(u, std::span<const double>(kOrigin, params.n), 2.0, r);
    const double rhs = smp.H * (smp.N() - kappa) / std::pow(r, params.n + params.a + 2 * kappa);
    worst_w = std::max(worst_w, std::abs(W - rhs) / std::max(std::abs(W), 1e-12));
  }
  out.push_back(make(S, "weiss_identity", worst_w, 1e-8,
                     "relative |W - H (N - kappa)/r^{n+a+2 kappa}| for x1^2 + 0.4 x1^3 extended"));

  // Frequency of a homogeneous solid harmonic is its degree at every radius.
  Polynomial t(params.n);
  t.add_term(b3, 0, 1.0);
  if (fault == "frequency_homogeneous") t.add_term(b2, 0, 1e-3);
  PolynomialField h(extend_polynomial(t, params));
  double worst_f = 0.0;
  for (double r : {0.05, 0.2, 0.5})
    worst_f = std::max(worst_f, std::abs(eng.frequency(h, std::span<const double>(kOrigin, params.n), r) - 3.0));
  out.push_back(make(S, "frequency_homogeneous", worst_f, 1e-8, "|N(r) - 3| for the extension of x1^3"));
  return out;
}

std::vector<VerifyCheck> harmonics(const WeightParams& params, const std::string& fault) {
  const std::string S = "harmonics";
  double worst_la = 0.0, worst_tr = 0.0;
  for (int n = 1; n <= 3; ++n) {
    const auto P = WeightParams::from_s(params.s, n);
    for (int k = 0; k <= 6; ++k)
      for (const auto& beta : multi_indices(n, k)) {
        const auto q = Polynomial::monomial(beta);
        auto ext = extend_la_harmonic(q, P).poly;
        if (fault == "la_apply_extension" && k == 4) ext.add_term(beta, 2, 1e-9);
        worst_la = std::max(worst_la, la_apply(ext, P.a).max_abs_coefficient());
        auto tr = ext.trace();
        if (fault == "trace_recovery" && k == 3) tr.add_term(beta, 0, 1e-9);
        worst_tr = std::max(worst_tr, (tr - q).max_abs_coefficient());
      }
  }
  std::vector<VerifyCheck> out;
  out.push_back(make(S, "la_apply_extension", worst_la, 1e-12,
                     "max coefficient of L_a(extension of x^beta), |beta| <= 6, n <= 3"));
  out.push_back(make(S, "trace_recovery", worst_tr, 1e-12, "max coefficient of trace(ext q) - q"));

  // c_{2k} against Gamma(k+1/2) Gamma(1-s) / (Gamma(1/2) Gamma(k+1-s)).
  const double s = fault == "extension_coefficients" ? params.s + 1e-6 : params.s;
  const auto c = extension_coefficients(8, s);
  double worst_c = 0.0;
  for (int k = 0; k <= 8; ++k) {
    const double ref = std::exp(std::lgamma(k + 0.5) + std::lgamma(1 - params.s) -
                                std::lgamma(0.5) - std::lgamma(k + 1 - params.s));
    worst_c = std::max(worst_c, rel(c[k], ref));
  }
  out.push_back(make(S, "extension_coefficients", worst_c, 1e-12,
                     "relative error of c_2k against the Gamma-function closed form, k <= 8"));
  return out;
}

std::vector<VerifyCheck> grushin(const WeightParams& params, const std::string& fault) {
  const std::string S = "grushin";
  std::mt19937 rng(20240607);
  std::uniform_real_distribution<double> u(-2.0, 2.0), ul(0.05, 4.0);
  double worst_g = 0.0;
  for (int t = 0; t < 10000; ++t) {
    const double x[2] = {u(rng), u(rng)};
    const double z = u(rng), lam = ul(rng);
    const GrushinPoint d = dilate(x, z, lam, params.alpha);
    const double r0 = rho_alpha(x, z, params.alpha);
    const double scale = fault == "gauge_homogeneity" ? lam * (1 + 1e-9) : lam;
    worst_g = std::max(worst_g, rel(rho_alpha(d.x, d.z, params.alpha), scale * r0));
  }
  double worst_b = 0.0;
  int disagree = 0;
  const auto P2 = WeightParams::from_s(params.s, 2);
  for (int t = 0; t < 10000; ++t) {
    const double x[2] = {u(rng), u(rng)};
    const double y = u(rng);
    const double de = std::sqrt(x[0] * x[0] + x[1] * x[1] + y * y);
    const double yy = fault == "ball_correspondence" ? std::abs(y) * (1 + 1e-9) : std::abs(y);
    const double rho = rho_alpha(x, h_transform(yy, P2), P2.alpha);
    worst_b = std::max(worst_b, rel(rho, h_transform(de, P2)));
    disagree += (rho <= h_transform(1.0, P2)) != (de <= 1.0);
  }
  std::vector<VerifyCheck> out;
  out.push_back(make(S, "gauge_homogeneity", worst_g, 1e-12,
                     "max relative |rho(delta_lambda p) - lambda rho(p)|, 1e4 samples"));
  out.push_back(make(S, "ball_correspondence", worst_b + disagree, 1e-12,
                     "max relative |rho(x, h(y)) - h(|(x, y)|)| plus membership disagreements"));
  const double ca = c_alpha_constant(fault == "c_alpha_n2" ? 0.05 : 0.0, 2);
  out.push_back(make(S, "c_alpha_n2", std::abs(ca * 4 * std::numbers::pi - 1.0), 0.01,
                     "relative gap between C_alpha (alpha = 0, n = 2) and 1/(4 pi)"));
  const double xs[2] = {0.3, -0.5};
  const double alpha = std::max(params.alpha, 0.0);
  const double r1 = std::abs(b_alpha_stencil_residual(xs, 0.8, alpha, 2, 0.04));
  const double r2 = std::abs(b_alpha_stencil_residual(xs, 0.8, alpha, 2, 0.02));
  double order = std::log2(r1 / r2);
  if (fault == "stencil_order") order -= 1.0;
  out.push_back(make(S, "stencil_order", std::abs(order - 2.0), 0.1,
                     "|observed order - 2| of the fundamental-solution stencil residual"));
  return out;
}

std::vector<VerifyCheck> quadrature(const WeightParams& params, const std::string& fault) {
  const std::string S = "quadrature";
  double worst_m = 0.0, worst_y = 0.0;
  for (int n = 1; n <= 2; ++n) {
    const SphereRule rule(n, params.a);
    const double bump = fault == "sphere_measure" ? 1 + 1e-9 : 1.0;
    const double m = rule.integrate_even([&](const Point&, const Point&) { return bump; },
                                         std::span<const double>(kOrigin, n), 1.0);
    worst_m = std::max(worst_m, rel(m, weighted_sphere_measure(n, params.a)));
    const double my = rule.integrate_even(
        [&](const Point& p, const Point&) {
          return p.y * p.y * (fault == "sphere_moment" ? 1 + 1e-9 : 1.0);
        },
        std::span<const double>(kOrigin, n), 1.0);
    worst_y = std::max(worst_y, rel(my, weighted_sphere_measure(n, params.a + 2)));
  }
  double worst_j = 0.0;
  const int m = 12;
  const auto r = gauss_jacobi_interval(m, -params.a + (fault == "jacobi_moments" ? 1e-6 : 0.0), 1.0);
  const double e = -params.a;
  for (int k = 0; k < 2 * m; ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) acc += r.weights[i] * std::pow(r.nodes[i], k);
    worst_j = std::max(worst_j, rel(acc, 1.0 / (e + k + 1)));
  }
  std::vector<VerifyCheck> out;
  out.push_back(make(S, "sphere_measure", worst_m, 1e-12,
                     "relative error of int_S |y|^a against the closed form, n <= 2"));
  out.push_back(make(S, "sphere_moment", worst_y, 1e-12, "relative error of int_S y^2 |y|^a"));
  out.push_back(make(S, "jacobi_moments", worst_j, 1e-12,
                     "relative error of int_0^1 t^k t^{-a} dt, k < 2m, m = 12"));
  return out;
}

}  // namespace

std::vector<std::string> verify_suites() { return {"identities", "harmonics", "grushin", "quadrature"}; }

std::vector<std::string> verify_check_names() {
  return {"correspondence_height", "correspondence_frequency", "weiss_identity",
          "frequency_homogeneous", "la_apply_extension",     "trace_recovery",
          "extension_coefficients", "gauge_homogeneity",     "ball_correspondence",
          "c_alpha_n2",            "stencil_order",          "sphere_measure",
          "sphere_moment",         "jacobi_moments"};
}

std::vector<VerifyCheck> run_verify_suite(const std::string& suite, const WeightParams& params,
                                          const std::string& fault) {
  if (suite == "identities") return identities(params, fault);
  if (suite == "harmonics") return harmonics(params, fault);
  if (suite == "grushin") return grushin(params, fault);
  if (suite == "quadrature") return quadrature(params, fault);
  throw DomainError("unknown verify suite \"" + suite + "\"");
}

}  // namespace fraclab
