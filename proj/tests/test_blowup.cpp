#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fraclab/blowup.hpp"
#include "json.hpp"

using namespace fraclab;

namespace {

const double kOrigin[3] = {0, 0, 0};
std::span<const double> origin(int n) { return std::span<const double>(kOrigin, n); }

Polynomial extension_of(std::initializer_list<std::pair<MultiIndex, double>> trace, int n,
                        const WeightParams& P) {
  Polynomial q(n);
  for (const auto& [b, c] : trace) q.add_term(b, 0, c);
  return extend_polynomial(q, P);
}

BoundaryData data_of(const Polynomial& p) {
  return [p](const Point& q) { return p.evaluate(std::span<const double>(q.x.data(), p.n()), q.y); };
}

std::shared_ptr<const GridField> solve_zero_obstacle(const WeightParams& P, const GridSpec& g,
                                                     BoundaryData bd) {
  ThinObstacleProblem pr{P, g, thin_samples(g, [](std::span<const double>) { return 0.0; }),
                         std::move(bd)};
  SolverOptions o;
  o.omega = 0.0;
  auto r = psor_solve(pr, o);
  REQUIRE(r.converged);
  return r.field;
}

std::shared_ptr<const GridField> signorini_solve_1d(int nx) {
  const double h = 2.0 / (nx - 1);
  const auto g = GridSpec::graded(1, 1.0, nx, 1.0, h, 1.15, std::min(1e-3, h / 8));
  return solve_zero_obstacle(WeightParams::from_s(0.5, 1), g,
                             [](const Point& p) { return signorini_value(p.x[0], p.y); });
}

GridSpec grid_2d(int nx) {
  const double h = 2.0 / (nx - 1);
  return GridSpec::graded(2, 1.0, nx, 1.0, h, 1.3, std::min(0.02, h / 4));
}

ClassifyConfig default_classify() {
  ClassifyConfig c;
  c.frequency.functional = FunctionalConfig::defaults(0.5);
  c.frequency.functional.r_max = 0.4;
  return c;
}

ObstacleSpec zero_obstacle(int n) { return ObstacleSpec::polynomial(n, {}, 2, 0.5); }

double max_coefficient_gap(const Polynomial& p, const Polynomial& q) {
  return (p - q).max_abs_coefficient();
}

}  // namespace

TEST_CASE("extend_polynomial handles mixed degrees") {
  const auto P = WeightParams::from_s(0.3, 2);
  Polynomial q(2);
  q.add_term({0, 0}, 0, 1.5);
  q.add_term({1, 0}, 0, -2.0);
  q.add_term({2, 1}, 0, 0.7);
  q.add_term({0, 4}, 0, 0.2);
  const Polynomial e = extend_polynomial(q, P);
  CHECK(max_coefficient_gap(e.trace(), q) < 1e-14);
  CHECK(la_apply(e, P.a).max_abs_coefficient() < 1e-12);
  Polynomial bad(2);
  bad.add_term({1, 0}, 1, 1.0);
  CHECK_THROWS_AS(extend_polynomial(bad, P), DomainError);
}

TEST_CASE("obstacle normalization") {
  const auto P = WeightParams::from_s(0.5, 1);
  SUBCASE("zero obstacle leaves the field unchanged") {
    auto base = std::make_shared<PolynomialField>(extension_of({{{2}, 1.0}}, 1, P));
    ObstacleNormalizedField v(base, zero_obstacle(1), {0.3}, 2, P);
    for (double x : {-0.2, 0.1}) {
      Point p, q;
      p.x[0] = x;
      p.y = 0.15;
      q = p;
      q.x[0] += 0.3;
      CHECK(v.value(p) == base->value(q));
    }
  }
  SUBCASE("a polynomial obstacle of degree k cancels exactly") {
    const auto P2 = WeightParams::from_s(0.3, 2);
    const auto obs = ObstacleSpec::polynomial(2, {{{2, 0}, 1.0}, {{1, 1}, -0.4}, {{0, 1}, 0.3}}, 2, 0.5);
    const Polynomial phi_ext = extension_of({{{2, 0}, 1.0}, {{1, 1}, -0.4}, {{0, 1}, 0.3}}, 2, P2);
    auto base = std::make_shared<PolynomialField>(phi_ext);
    ObstacleNormalizedField v(base, obs, {0.2, -0.1}, 2, P2);
    for (double t : {0.0, 0.4, 1.1, 2.5}) {
      Point p;
      p.x = {0.3 * std::cos(t), 0.3 * std::sin(t), 0.0};
      p.y = 0.05 + 0.1 * t;
      CHECK(std::abs(v.value(p)) < 1e-14);
      double g[3];
      v.gradient(p, g);
      for (double gi : g) CHECK(std::abs(gi) < 1e-13);
    }
    const auto rs = obstacle_residual_scaling(obs, std::vector<double>{0.2, -0.1}, 2, {0.05, 0.1, 0.2});
    CHECK(rs.exact);
  }
  SUBCASE("|x|^{k+gamma} obstacle: residual decays like r^{k+gamma-2}") {
    const double pw = 2.5;
    const auto obs = ObstacleSpec::callable(
        1,
        [pw](std::span<const double> x, const MultiIndex& b) {
          const double ax = std::abs(x[0]), sg = x[0] < 0 ? -1.0 : 1.0;
          switch (b[0]) {
            case 0: return std::pow(ax, pw);
            case 1: return pw * std::pow(ax, pw - 1) * sg;
            default: return pw * (pw - 1) * std::pow(ax, pw - 2);
          }
        },
        2, 2, 0.5, "abs_power");
    const auto rs = obstacle_residual_scaling(obs, origin(1), 2, {0.01, 0.02, 0.04, 0.08, 0.16});
    CHECK_FALSE(rs.exact);
    CHECK(rs.slope == doctest::Approx(0.5).epsilon(1e-6));
  }
  SUBCASE("gradient matches finite differences") {
    const auto obs = ObstacleSpec::sine(1, 2, 0.5);
    auto base = signorini_field(1);
    auto shared = std::make_shared<CallableField>(base);
    ObstacleNormalizedField v(shared, obs, {-0.2}, 2, P);
    Point p;
    p.x[0] = 0.13;
    p.y = 0.21;
    double g[2];
    v.gradient(p, g);
    const double e = 1e-6;
    Point a = p, b = p;
    a.x[0] += e;
    b.x[0] -= e;
    CHECK(g[0] == doctest::Approx((v.value(a) - v.value(b)) / (2 * e)).epsilon(1e-7));
    a = p;
    b = p;
    a.y += e;
    b.y -= e;
    CHECK(g[1] == doctest::Approx((v.value(a) - v.value(b)) / (2 * e)).epsilon(1e-7));
  }
}

TEST_CASE("rescalings") {
  const auto P = WeightParams::from_s(0.25, 1);
  const FunctionalEngine eng(P);
  const Polynomial p2 = extension_of({{{2}, 1.0}}, 1, P);
  auto f = std::make_shared<PolynomialField>(p2);

  SUBCASE("homogeneous p2 rescales to the same field, with unit height") {
    const auto a = rescale(f, origin(1), 0.3, Normalization::almgren, eng);
    const auto b = rescale(f, origin(1), 0.8, Normalization::almgren, eng);
    CHECK(eng.height(a, origin(1), 1.0) == doctest::Approx(1.0).epsilon(1e-6));
    for (double t : {0.1, 0.9, 2.0, 3.0}) {
      Point p;
      p.x[0] = 0.7 * std::cos(t);
      p.y = 0.7 * std::sin(t);
      CHECK(std::abs(a.value(p) - b.value(p)) < 1e-6);
    }
  }
  SUBCASE("frequency relation N(rescaled, rho) = N(field, r rho)") {
    const Polynomial mix = p2 + extension_of({{{4}, 0.8}, {{3}, -0.5}}, 1, P);
    auto g = std::make_shared<PolynomialField>(mix);
    const double x0[1] = {0.1};
    for (auto [r, rho] : {std::pair{0.5, 0.4}, {0.3, 1.0}, {0.8, 0.25}}) {
      const auto v = rescale(g, x0, r, Normalization::almgren, eng);
      CHECK(eng.frequency(v, origin(1), rho) ==
            doctest::Approx(eng.frequency(*g, x0, r * rho)).epsilon(1e-10));
    }
  }
  SUBCASE("kappa normalization and error paths") {
    const auto k = rescale(f, origin(1), 0.5, Normalization::kappa, eng, 2.0);
    CHECK(k.d_r() == doctest::Approx(0.25));
    Point p;
    p.x[0] = 0.4;
    p.y = 0.3;
    CHECK(k.value(p) == doctest::Approx(p2.evaluate(std::span<const double>(p.x.data(), 1), p.y)));
    auto zero = std::make_shared<PolynomialField>(Polynomial(1));
    CHECK_THROWS_AS(rescale(zero, origin(1), 0.5, Normalization::almgren, eng), UndefinedError);
    CHECK_THROWS_AS(rescale(f, origin(1), -1.0, Normalization::kappa, eng, 2.0), DomainError);
  }
  SUBCASE("materialize samples the view") {
    const auto a = rescale(f, origin(1), 0.5, Normalization::kappa, eng, 2.0);
    const auto g = a.materialize(GridSpec::uniform(1, 1.0, 9, 1.0, 9));
    CHECK(g.node(2, 0, 6) == doctest::Approx(p2.evaluate(std::vector<double>{-0.5}, 0.75)));
  }
}

TEST_CASE("blow-up polynomial fits") {
  for (double s : {0.25, 0.5, 0.75}) {
    const auto P = WeightParams::from_s(s, 1);
    const FunctionalEngine eng(P);
    const Polynomial p2 = extension_of({{{2}, 1.0}}, 1, P);
    auto f = std::make_shared<PolynomialField>(p2);
    const auto v = rescale(f, origin(1), 0.5, Normalization::almgren, eng);
    const auto fit = fit_blowup_polynomial(v, 1, eng);
    const Polynomial expected = p2 * (0.25 / v.d_r());
    CHECK(max_coefficient_gap(fit.p.poly, expected) < 1e-6);
    CHECK(fit.residual < 1e-10);

    // Cross terms vanish because solid harmonics of different degree are orthogonal.
    const Polynomial p4 = extend_la_harmonic(Polynomial::monomial({4}), P).poly;
    const double eps = 1e-3;
    PolynomialField mixed(p2 + p4 * eps);
    const auto fit2 = fit_blowup_polynomial(mixed, 1, eng);
    CHECK(max_coefficient_gap(fit2.p.poly, p2) < 1e-9);
    const PolynomialField p4f(p4);
    CHECK(fit2.residual ==
          doctest::Approx(eps * eps * eng.sphere_inner(p4f, p4f)).epsilon(1e-6));
  }
  const FunctionalEngine eng(WeightParams::from_s(0.5, 1));
  CHECK_THROWS_AS(fit_blowup_polynomial(PolynomialField(Polynomial(1)), 0, eng), DomainError);
}

TEST_CASE("frequency_at on exact fields") {
  SUBCASE("Signorini") {
    const auto P = WeightParams::from_s(0.5, 1);
    const FunctionalEngine eng(P);
    FrequencyConfig c;
    c.functional = FunctionalConfig::defaults(0.5);
    const auto e = frequency_at(signorini_field(1), origin(1), c, eng);
    CHECK(e.kappa_hat == doctest::Approx(1.5).epsilon(1e-8));
    CHECK_FALSE(e.undetermined);
  }
  SUBCASE("degree 4 solid harmonic, plain and generalized") {
    const auto P = WeightParams::from_s(0.3, 2);
    const FunctionalEngine eng(P);
    PolynomialField f(extension_of({{{4, 0}, 1.0}, {{2, 2}, -3.0}, {{0, 0}, 0.0}}, 2, P));
    FrequencyConfig c;
    c.functional = FunctionalConfig::defaults(0.5);
    CHECK(frequency_at(f, origin(2), c, eng).kappa_hat == doctest::Approx(4.0).epsilon(1e-8));
    // With k + gamma > 4 the truncation never activates and Phi/(1 + C0 r^theta) = n + a + 2 kappa.
    c.generalized = true;
    c.k = 4;
    c.gamma = 0.5;
    c.functional = FunctionalConfig::defaults(0.5);
    const auto g = frequency_at(f, origin(2), c, eng);
    CHECK_FALSE(g.truncated);
    CHECK(g.kappa_hat == doctest::Approx(4.0).epsilon(1e-8));
  }
  SUBCASE("solved Signorini instance") {
    const auto u = signorini_solve_1d(257);
    const FunctionalEngine eng(WeightParams::from_s(0.5, 1));
    FrequencyConfig c;
    c.functional = FunctionalConfig::defaults(0.5);
    c.functional.r_max = 0.4;
    c.grid_h = u->spec().hx();
    const auto e = frequency_at(*u, origin(1), c, eng);
    CHECK(std::abs(e.kappa_hat - 1.5) < 0.02);
    CHECK_FALSE(e.undetermined);
    CHECK(e.profile.radii.front() >= 4 * c.grid_h);
  }
}

TEST_CASE("coincidence density profiles") {
  const auto u = signorini_solve_1d(257);
  const std::vector<double> radii = {0.01, 0.02, 0.04, 0.08, 0.16, 0.32};
  SUBCASE("regular point tends to one half") {
    const auto d = coincidence_density(*u, origin(1), radii);
    CHECK(d.radii.front() >= 3 * u->spec().hx());
    CHECK(std::abs(d.values.back() - 0.5) < 0.05);
    CHECK_FALSE(density_vanishing(d).vanishing);
  }
  SUBCASE("interior contact point") {
    const double x0[1] = {-0.5};
    const auto d = coincidence_density(*u, x0, {0.05, 0.1, 0.2, 0.4});
    for (double v : d.values) CHECK(v == 1.0);
  }
  SUBCASE("manufactured p2 singular point") {
    const auto P = WeightParams::from_s(0.5, 1);
    const auto g = GridSpec::graded(1, 1.0, 257, 1.0, 1.0 / 128, 1.15, 1e-3);
    const auto w = solve_zero_obstacle(P, g, data_of(extension_of({{{2}, 1.0}}, 1, P)));
    const auto d = coincidence_density(*w, origin(1), radii);
    const auto verdict = density_vanishing(d);
    CHECK(verdict.vanishing);
    CHECK(verdict.last < 0.1);
    CHECK(verdict.slope < -0.5);
  }
  SUBCASE("balls leaving the box") {
    const double x0[1] = {0.8};
    CHECK_THROWS_AS(coincidence_density(*u, x0, {0.5}), GeometryError);
  }
}

TEST_CASE("classification on solved instances") {
  const auto cfg = default_classify();
  SUBCASE("Signorini free boundary is regular") {
    const auto u = signorini_solve_1d(257);
    const auto P = WeightParams::from_s(0.5, 1);
    const FunctionalEngine eng(P);
    const auto fb = free_boundary_nodes(*u);
    REQUIRE(fb.size() == 1);
    const auto rep = classify(u, zero_obstacle(1), fb[0], P, cfg, eng);
    CHECK(rep.kind == BlowupReport::Kind::regular);
    CHECK(rep.branch == "a");
    CHECK(rep.nondegeneracy_lo > 0.5);
    CHECK(rep.nondegeneracy_hi < 2.0);
    const double off[1] = {0.5};
    CHECK_THROWS_AS(classify(u, zero_obstacle(1), off, P, cfg, eng), DomainError);
  }
  SUBCASE("n = 2 traces x1^2 and |x|^2") {
    for (double s : {0.25, 0.5, 0.75}) {
      const auto P = WeightParams::from_s(s, 2);
      const FunctionalEngine eng(P);
      const auto line = solve_zero_obstacle(P, grid_2d(65), data_of(extension_of({{{2, 0}, 1.0}}, 2, P)));
      std::vector<std::vector<double>> pts;
      for (double t : {-0.25, -0.125, 0.0, 0.125, 0.25}) pts.push_back({0.0, t});
      const auto reps = classify_many(line, zero_obstacle(2), pts, P, cfg, eng);
      for (const auto& r : reps) {
        CHECK(r.kind == BlowupReport::Kind::singular);
        CHECK(r.m == 1);
        CHECK(r.d == 1);
        REQUIRE(r.fit);
        CHECK(r.fit->residual < 1e-4);
        CHECK(r.fit_distance < 1e-3);
      }
      const auto table = stratify(reps, eng, 0.2);
      REQUIRE(table.groups.size() == 1);
      CHECK(table.groups.begin()->first == std::pair{1, 1});
      CHECK(table.groups.begin()->second.size() == 5);
      CHECK(table.pairs.size() == 4);  // neighbours 0.125 apart
      for (const auto& pr : table.pairs) CHECK(pr.distance < 1e-3);

      const auto point = solve_zero_obstacle(
          P, grid_2d(65), data_of(extension_of({{{2, 0}, 1.0}, {{0, 2}, 1.0}}, 2, P)));
      const auto rep = classify(point, zero_obstacle(2), origin(2), P, cfg, eng);
      CHECK(rep.kind == BlowupReport::Kind::singular);
      CHECK(rep.m == 1);
      CHECK(rep.d == 0);

      std::vector<BlowupReport> mixed = {reps[0], rep};
      const auto t2 = stratify(mixed, eng, 1.0);
      CHECK(t2.groups.size() == 2);
      CHECK(t2.pairs.empty());
    }
  }
}

TEST_CASE("report serialization and strata CSV") {
  const auto P = WeightParams::from_s(0.5, 2);
  const FunctionalEngine eng(P);
  const auto u = solve_zero_obstacle(P, grid_2d(33), data_of(extension_of({{{2, 0}, 1.0}}, 2, P)));
  const auto rep = classify(u, zero_obstacle(2), origin(2), P, default_classify(), eng);
  const auto j = nlohmann::json::parse(to_json(rep));
  for (const char* key : {"x0", "kappa_hat", "branch", "classification", "m", "d", "poly",
                          "residual", "density"})
    CHECK(j.contains(key));
  CHECK(j["classification"] == to_string(rep.kind));

  const auto dir = std::filesystem::temp_directory_path() / "fraclab_test_blowup";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "strata.csv").string();
  const std::vector<BlowupReport> one = {rep};
  write_strata_csv(path, "scenario test\nhash 0", one, stratify(one, eng, 0.1));
  std::ifstream in(path);
  std::string first, second, third;
  std::getline(in, first);
  std::getline(in, second);
  std::getline(in, third);
  CHECK(first == "# scenario test");
  CHECK(third == "m,d,x1,x2,kappa_hat,residual");
}
