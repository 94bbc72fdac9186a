#include "fraclab/harmonics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "fraclab/grushin.hpp"
#include "json.hpp"

namespace fraclab {

// ------------------------------------------------------ GrushinPolynomial

namespace {

double signed_power(double z, double p, bool odd) {
  const double m = p == 0.0 ? 1.0 : std::pow(std::abs(z), p);
  return odd && z < 0.0 ? -m : m;
}

double x_power(std::span<const double> x, const MultiIndex& beta) {
  double v = 1.0;
  for (std::size_t i = 0; i < beta.size(); ++i)
    for (int t = 0; t < beta[i]; ++t) v *= x[i];
  return v;
}

}  // namespace

void GrushinPolynomial::add(MultiIndex beta, double p, double coef) {
  if (static_cast<int>(beta.size()) != n) throw DomainError("multi-index length must equal n");
  const bool integer = std::floor(p) == p;
  const bool odd = integer && std::fmod(std::abs(p), 2.0) == 1.0;
  terms.push_back({std::move(beta), p, odd, coef});
}

double GrushinPolynomial::evaluate(std::span<const double> x, double z) const {
  double v = 0.0;
  for (const Term& t : terms) v += t.coef * x_power(x, t.beta) * signed_power(z, t.zpow, t.odd);
  return v;
}

void GrushinPolynomial::gradient(std::span<const double> x, double z, std::span<double> g) const {
  std::fill(g.begin(), g.begin() + n + 1, 0.0);
  for (const Term& t : terms) {
    const double zp = signed_power(z, t.zpow, t.odd);
    for (int i = 0; i < n; ++i) {
      if (t.beta[i] == 0) continue;
      MultiIndex b = t.beta;
      b[i] -= 1;
      g[i] += t.coef * t.beta[i] * x_power(x, b) * zp;
    }
    if (t.zpow != 0.0) {
      if (z == 0.0 && t.zpow < 1.0) throw UndefinedError("z-derivative singular at z = 0");
      // d/dz sgn^odd |z|^p = p sgn^{odd+1} |z|^{p-1}
      g[n] += t.coef * x_power(x, t.beta) * t.zpow * signed_power(z, t.zpow - 1.0, !t.odd);
    }
  }
}

double GrushinPolynomial::homogeneity(double alpha) const {
  double d = -1.0;
  for (const Term& t : terms) {
    int b = 0;
    for (int v : t.beta) b += v;
    const double dt = (alpha + 1.0) * b + t.zpow;
    if (d >= 0.0 && std::abs(dt - d) > 1e-12) return -1.0;
    d = dt;
  }
  return d < 0.0 ? 0.0 : d;
}

// --------------------------------------------------------------- L_a algebra

std::vector<double> extension_coefficients(int kmax, double s) {
  if (!(s > 0.0 && s < 1.0)) throw DomainError("s must lie in (0,1)");
  std::vector<double> c(kmax + 1);
  c[0] = 1.0;
  for (int i = 1; i <= kmax; ++i) c[i] = c[i - 1] * (2.0 * i - 1.0) / (2.0 * i - 2.0 * s);
  return c;
}

Polynomial la_apply(const Polynomial& p, double a) {
  if (!p.even_in_y()) throw DomainError("la_apply needs a polynomial even in y");
  Polynomial r(p.n());
  for (const auto& [key, c] : p.terms()) {
    const auto& beta = key.first;
    const int k = key.second;
    for (int i = 0; i < p.n(); ++i) {
      if (beta[i] < 2) continue;
      MultiIndex b = beta;
      b[i] -= 2;
      r.add_term(b, k, c * beta[i] * (beta[i] - 1));
    }
    // D_yy y^k + (a/y) D_y y^k = k (k - 1 + a) y^{k-2}
    if (k >= 2) r.add_term(beta, k - 2, c * k * (k - 1 + a));
  }
  return r;
}

SolidHarmonic extend_la_harmonic(const Polynomial& q, const WeightParams& params) {
  if (!(params.s > 0.0 && params.s < 1.0)) throw DomainError("s must lie in (0,1)");
  if (q.depends_on_y()) throw DomainError("extend_la_harmonic expects a polynomial on R^n");
  const auto deg = q.homogeneous_degree();
  if (!deg) throw DomainError("extend_la_harmonic expects a homogeneous polynomial");
  const std::vector<double> c = extension_coefficients(*deg / 2, params.s);
  SolidHarmonic e{Polynomial(q.n()), *deg, params};
  Polynomial lap = q;
  for (int k = 0; 2 * k <= *deg && !lap.is_zero(); ++k) {
    const double f = (k % 2 ? -1.0 : 1.0) * c[k] / factorial(2 * k);
    for (const auto& [key, v] : lap.terms()) e.poly.add_term(key.first, 2 * k, f * v);
    lap = lap.laplacian_x();
  }
  return e;
}

std::vector<SolidHarmonic> basis_solid_harmonics(int kappa, int n, const WeightParams& params) {
  std::vector<SolidHarmonic> out;
  for (const MultiIndex& beta : multi_indices(n, kappa))
    out.push_back(extend_la_harmonic(Polynomial::monomial(beta, 0, 1.0 / multi_factorial(beta)),
                                     params));
  return out;
}

// ------------------------------------------------------------ trace checks

std::string to_string(TraceCheck::Outcome o) {
  switch (o) {
    case TraceCheck::Outcome::certified_nonneg: return "certified-nonneg";
    case TraceCheck::Outcome::negative_witness: return "certified-negative-witness";
    default: return "undetermined";
  }
}

TraceCheck nonneg_trace_check(const SolidHarmonic& p, int budget) {
  const Polynomial q = p.trace();
  const int n = q.n();
  const double scale = std::max(q.max_abs_coefficient(), 1e-300);
  const double tol = 1e-12 * scale;
  TraceCheck out;
  auto witness = [&](std::vector<double> x, std::string method) {
    out.outcome = TraceCheck::Outcome::negative_witness;
    out.witness = std::move(x);
    out.method = std::move(method);
    return out;
  };
  if (q.is_zero()) {
    out.outcome = TraceCheck::Outcome::certified_nonneg;
    out.method = "zero trace";
    return out;
  }
  const int kappa = q.degree();
  if (kappa % 2 == 1) {
    // q(-x) = -q(x): any point with q != 0 yields a witness at x or -x.
    std::vector<double> x(n, 0.0);
    for (int t = 0; t < 64; ++t) {
      for (int i = 0; i < n; ++i) x[i] = std::cos(0.7 * t + 1.3 * i + 0.1);
      const double v = q.evaluate(x);
      if (std::abs(v) > tol) {
        if (v > 0.0)
          for (double& xi : x) xi = -xi;
        return witness(x, "odd degree antipodal pair");
      }
    }
  }
  if (kappa == 0 || n == 1) {
    // Single monomial c x^kappa (or a constant): the sign of c decides.
    const double c = q.terms().begin()->second;
    if (c >= 0.0) {
      out.outcome = TraceCheck::Outcome::certified_nonneg;
      out.method = "single even monomial";
      return out;
    }
    return witness(std::vector<double>(n, 1.0), "single even monomial");
  }
  if (kappa == 2) {
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    for (const auto& [key, c] : q.terms()) {
      std::vector<int> idx;
      for (int i = 0; i < n; ++i)
        for (int t = 0; t < key.first[i]; ++t) idx.push_back(i);
      if (idx[0] == idx[1]) {
        M(idx[0], idx[0]) += c;
      } else {
        M(idx[0], idx[1]) += 0.5 * c;
        M(idx[1], idx[0]) += 0.5 * c;
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    if (es.eigenvalues()(0) >= -tol) {
      out.outcome = TraceCheck::Outcome::certified_nonneg;
      out.method = "quadratic form eigenvalues";
      return out;
    }
    const Eigen::VectorXd v = es.eigenvectors().col(0);
    return witness(std::vector<double>(v.data(), v.data() + n), "quadratic form eigenvalues");
  }
  const bool even_terms = std::all_of(q.terms().begin(), q.terms().end(), [](const auto& t) {
    return t.second >= 0.0 &&
           std::all_of(t.first.first.begin(), t.first.first.end(), [](int b) { return b % 2 == 0; });
  });
  if (even_terms) {
    out.outcome = TraceCheck::Outcome::certified_nonneg;
    out.method = "even powers with nonnegative coefficients";
    return out;
  }
  std::vector<double> x(n);
  std::mt19937_64 rng(20240611);
  std::normal_distribution<double> gauss;
  double worst = 0.0;
  std::vector<double> worst_x;
  for (int t = 0; t < budget; ++t) {
    if (n == 2) {
      const double th = 2.0 * std::numbers::pi * t / budget;
      x = {std::cos(th), std::sin(th)};
    } else {
      double nrm = 0.0;
      for (double& xi : x) {
        xi = gauss(rng);
        nrm += xi * xi;
      }
      for (double& xi : x) xi /= std::sqrt(nrm);
    }
    const double v = q.evaluate(x);
    if (v < worst) {
      worst = v;
      worst_x = x;
    }
  }
  if (worst < -tol) return witness(worst_x, "sphere sampling");
  out.outcome = TraceCheck::Outcome::undetermined;
  out.method = "sphere sampling found no negative value";
  return out;
}

int stratum_dimension(const SolidHarmonic& p) {
  const Polynomial q = p.trace();
  if (q.is_zero()) throw DomainError("stratum_dimension of the zero trace");
  const int n = q.n();
  std::vector<Polynomial> grads;
  std::map<MultiIndex, int> row_of;
  for (int i = 0; i < n; ++i) {
    grads.push_back(q.derivative_x(i));
    for (const auto& [key, c] : grads.back().terms()) row_of.try_emplace(key.first, 0);
  }
  int r = 0;
  for (auto& [beta, idx] : row_of) idx = r++;
  if (r == 0) return n;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(r, n);
  for (int i = 0; i < n; ++i)
    for (const auto& [key, c] : grads[i].terms()) A(row_of[key.first], i) = c;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  lu.setThreshold(1e-10);
  return n - static_cast<int>(lu.rank());
}

GrushinPolynomial grushin_model_solution(int n, double alpha) {
  if (!(alpha > -0.5)) throw DomainError("alpha must exceed -1/2");
  GrushinPolynomial p;
  p.n = n;
  const double A = (alpha + 1.0) * (2.0 * alpha + 1.0) / n;
  for (int i = 0; i < n; ++i) {
    MultiIndex b(n, 0);
    b[i] = 2;
    p.add(b, 0.0, A);
  }
  // |z|^{2(alpha+1)} is even in z even when 2(alpha+1) is an odd integer.
  p.terms.push_back({MultiIndex(n, 0), 2.0 * (alpha + 1.0), false, -1.0});
  return p;
}

Polynomial taylor_polynomial(const ObstacleSpec& obstacle, std::span<const double> x0, int k) {
  if (k < 0) throw DomainError("Taylor degree must be nonnegative");
  if (k > obstacle.max_order()) throw DomainError("obstacle derivatives missing beyond order " +
                                                  std::to_string(obstacle.max_order()));
  const int n = obstacle.n();
  Polynomial q(n);
  for (int d = 0; d <= k; ++d)
    for (const MultiIndex& beta : multi_indices(n, d))
      q.add_term(beta, 0, obstacle.derivative(x0, beta) / multi_factorial(beta));
  return q;
}

double orthogonality_check(const GrushinPolynomial& p, const GrushinPolynomial& q,
                           const WeightParams& params, double r) {
  const double kp = p.homogeneity(params.alpha), kq = q.homogeneity(params.alpha);
  if (kp < 0.0 || kq < 0.0) throw DomainError("orthogonality_check needs homogeneous inputs");
  if (std::abs(kp - kq) < 1e-12) throw DomainError("orthogonality needs distinct degrees");
  const double alpha = params.alpha;
  auto f = [&](std::span<const double> x, double z) {
    return p.evaluate(x, z) * q.evaluate(x, z) * psi_alpha(x, z, alpha);
  };
  return pushforward_integral(f, r, params, IntegralKind::sphere, 40, 96, 24, 2.0 * params.a);
}

std::string to_json(const SolidHarmonic& p) {
  auto j = nlohmann::json::parse(p.poly.to_json());
  j["s"] = p.params.s;
  j["degree"] = p.degree;
  return j.dump();
}

}  // namespace fraclab
