#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "fraclab/scenario.hpp"
#include "fraclab/verify.hpp"

using namespace fraclab;

namespace {

const char* kLine = R"({
  "name": "line",
  "s": 0.5, "n": 2,
  "grid": {"nx": 33, "ratio": 1.3},
  "instance": {"kind": "solid_harmonic", "trace": [{"beta": [2, 0], "coef": 1.0}]},
  "analyses": {"x0": [[0.0, 0.25]], "functionals": "N,W,M"}
})";

}  // namespace

TEST_CASE("parse a solid harmonic scenario") {
  const auto sc = Scenario::parse(kLine);
  CHECK(sc.name == "line");
  CHECK(sc.params.n == 2);
  CHECK(sc.params.a == doctest::Approx(0.0));
  CHECK(sc.instance.kind == InstanceConfig::Kind::solid_harmonic);
  CHECK(*sc.instance.kappa == 2);
  CHECK(sc.default_kappa() == 2.0);
  CHECK(sc.grid_spec().nx() == 33);
  CHECK(sc.grid_spec().hx() == doctest::Approx(1.0 / 16));
  CHECK(sc.analyses.x0.size() == 1);
  CHECK(sc.hash.size() == 16);
  REQUIRE(sc.monneau_polynomial());
  CHECK(sc.monneau_polynomial()->degree == 2);

  // Boundary data is the extension x1^2 - y^2 at s = 1/2.
  Point p;
  p.x = {0.3, -0.2, 0.0};
  p.y = 0.4;
  CHECK(sc.boundary()(p) == doctest::Approx(0.09 - 0.16));
  const auto pr = sc.problem();
  CHECK(pr.phi.size() == pr.grid.thin_size());
}

TEST_CASE("the hash follows the content, not the formatting") {
  const auto a = Scenario::parse(kLine);
  const auto b = Scenario::parse(
      R"({"n":2,"s":0.5,"name":"line","grid":{"ratio":1.3,"nx":33},)"
      R"("instance":{"trace":[{"coef":1.0,"beta":[2,0]}],"kind":"solid_harmonic"},)"
      R"("analyses":{"functionals":"N,W,M","x0":[[0.0,0.25]]}})");
  CHECK(a.hash == b.hash);
  const auto c = Scenario::parse(R"({"name":"line","s":0.3,"n":2,"instance":{"kind":"zero"}})");
  CHECK(a.hash != c.hash);
  CHECK(a.header("solve").find(a.hash) != std::string::npos);
}

TEST_CASE("named instances") {
  const auto sig = Scenario::parse(R"({"name":"sig","s":0.5,"n":1,"instance":{"kind":"signorini_32"}})");
  CHECK(sig.default_kappa() == 1.5);
  Point p;
  p.x = {-0.5, 0, 0};
  CHECK(sig.boundary()(p) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(!sig.classify_config().frequency.generalized);

  const auto zero = Scenario::parse(R"({"name":"z","s":0.25,"n":1,"instance":{"kind":"zero"}})");
  const auto pr = zero.problem();
  for (double v : pr.phi) CHECK(v == -1.0);
  CHECK(zero.default_kappa() == doctest::Approx(1.25));

  const auto obs = Scenario::parse(R"({"name":"o","s":0.5,"n":1,
    "instance":{"kind":"obstacle","obstacle":{"kind":"polynomial","k":2,"gamma":0.5,
      "coefficients":[{"beta":[0],"coef":0.5},{"beta":[2],"coef":-2.0},{"beta":[3],"coef":0.4}]}}})");
  const std::vector<double> x = {0.5};
  CHECK(obs.obstacle().value(x) == doctest::Approx(0.5 - 0.5 + 0.05));
  CHECK(obs.classify_config().frequency.generalized);
  CHECK(!obs.exact_solution());
}

TEST_CASE("configuration errors") {
  const char* bad[] = {
      "{not json",
      R"({"name":"x","n":1,"instance":{"kind":"zero"}})",                      // no s
      R"({"name":"x","s":0.5,"alpha":0,"n":1,"instance":{"kind":"zero"}})",    // both
      R"({"name":"x","s":0.5,"n":1,"instance":{"kind":"nope"}})",
      R"({"name":"x","s":0.3,"n":1,"instance":{"kind":"signorini_32"}})",
      R"({"name":"x","s":0.5,"n":1,"instance":{"kind":"zero"},"grid":{"nx":64}})",
      R"({"name":"x","s":0.5,"n":1,"instance":{"kind":"zero"},"grdi":{}})",
      R"({"name":"x","s":0.5,"n":1,"instance":{"kind":"solid_harmonic",
          "trace":[{"beta":[2],"coef":1},{"beta":[1],"coef":1}]}})",
      R"({"name":"x","s":0.5,"n":1,"instance":{"kind":"solid_harmonic",
          "trace":[{"beta":[2],"coef":1}],"kappa":3}})",
      R"({"name":"x","s":0.5,"n":1,"instance":{"kind":"zero"},"analyses":{"functionals":"Q"}})",
      R"({"name":"x","s":1.5,"n":1,"instance":{"kind":"zero"}})",
      R"({"name":"x","s":0.5,"n":3,"instance":{"kind":"zero"}})",
  };
  for (const char* text : bad) CHECK_THROWS_AS(Scenario::parse(text), ConfigError);
  CHECK_THROWS_AS(Scenario::load("/nonexistent/file.json"), ConfigError);
}

TEST_CASE("verification suites pass and a seeded fault hits only its check") {
  for (double s : {0.25, 0.5, 0.75}) {
    const auto P = WeightParams::from_s(s, 1);
    for (const auto& suite : verify_suites())
      for (const auto& c : run_verify_suite(suite, P)) {
        INFO(suite << "/" << c.name << " s=" << s << " value=" << c.value);
        CHECK(c.pass);
        CHECK(c.tolerance > 0.0);
      }
  }
  const auto P = WeightParams::from_s(0.4, 1);
  std::size_t seen = 0;
  for (const auto& suite : verify_suites()) {
    const auto clean = run_verify_suite(suite, P);
    for (const auto& target : clean) {
      const auto faulty = run_verify_suite(suite, P, target.name);
      for (const auto& c : faulty) {
        INFO("fault " << target.name << " check " << c.name);
        CHECK(c.pass == (c.name != target.name));
      }
      ++seen;
    }
  }
  CHECK(seen == verify_check_names().size());
  CHECK_THROWS_AS(run_verify_suite("nope", P), DomainError);
}
