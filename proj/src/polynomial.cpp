#include "fraclab/polynomial.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace fraclab {

namespace {

// Integer power that keeps the sign of negative bases (std::pow does too, but this is cheaper).
double ipow(double x, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= x;
  return r;
}

void enumerate(int n, int k, int pos, MultiIndex& cur, std::vector<MultiIndex>& out) {
  if (pos == n - 1) {
    cur[pos] = k;
    out.push_back(cur);
    return;
  }
  for (int v = k; v >= 0; --v) {
    cur[pos] = v;
    enumerate(n, k - v, pos + 1, cur, out);
  }
}

}  // namespace

std::vector<MultiIndex> multi_indices(int n, int k) {
  std::vector<MultiIndex> out;
  if (n < 1 || k < 0) return out;
  MultiIndex cur(n, 0);
  enumerate(n, k, 0, cur, out);
  return out;
}

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

double multi_factorial(const MultiIndex& beta) {
  double f = 1.0;
  for (int b : beta) f *= factorial(b);
  return f;
}

Polynomial Polynomial::constant(int n, double c) {
  Polynomial p(n);
  p.add_term(MultiIndex(n, 0), 0, c);
  return p;
}

Polynomial Polynomial::monomial(MultiIndex beta, int ypow, double coef) {
  Polynomial p(static_cast<int>(beta.size()));
  p.add_term(beta, ypow, coef);
  return p;
}

void Polynomial::add_term(const MultiIndex& beta, int ypow, double coef) {
  if (static_cast<int>(beta.size()) != n_) throw DomainError("multi-index length must equal n");
  if (ypow < 0) throw DomainError("negative y power");
  if (coef == 0.0) return;
  auto [it, inserted] = terms_.try_emplace(Key{beta, ypow}, coef);
  if (!inserted) {
    it->second += coef;
    if (it->second == 0.0) terms_.erase(it);
  }
}

double Polynomial::coefficient(const MultiIndex& beta, int ypow) const {
  auto it = terms_.find(Key{beta, ypow});
  return it == terms_.end() ? 0.0 : it->second;
}

int Polynomial::degree() const {
  int d = 0;
  for (const auto& [key, c] : terms_) {
    int t = key.second;
    for (int b : key.first) t += b;
    d = std::max(d, t);
  }
  return d;
}

std::optional<int> Polynomial::homogeneous_degree() const {
  std::optional<int> d;
  for (const auto& [key, c] : terms_) {
    int t = key.second;
    for (int b : key.first) t += b;
    if (d && *d != t) return std::nullopt;
    d = t;
  }
  return d ? d : std::optional<int>(0);
}

bool Polynomial::even_in_y() const {
  return std::all_of(terms_.begin(), terms_.end(),
                     [](const auto& t) { return t.first.second % 2 == 0; });
}

bool Polynomial::depends_on_y() const {
  return std::any_of(terms_.begin(), terms_.end(),
                     [](const auto& t) { return t.first.second != 0; });
}

double Polynomial::max_abs_coefficient() const {
  double m = 0.0;
  for (const auto& [key, c] : terms_) m = std::max(m, std::abs(c));
  return m;
}

double Polynomial::evaluate(std::span<const double> x, double y) const {
  double v = 0.0;
  for (const auto& [key, c] : terms_) {
    double t = c * ipow(y, key.second);
    for (int i = 0; i < n_; ++i) t *= ipow(x[i], key.first[i]);
    v += t;
  }
  return v;
}

void Polynomial::gradient(std::span<const double> x, double y, std::span<double> g) const {
  std::fill(g.begin(), g.begin() + n_ + 1, 0.0);
  for (const auto& [key, c] : terms_) {
    const auto& beta = key.first;
    const int k = key.second;
    for (int d = 0; d <= n_; ++d) {
      const int e = d < n_ ? beta[d] : k;
      if (e == 0) continue;
      double t = c * e;
      for (int i = 0; i < n_; ++i) t *= ipow(x[i], beta[i] - (i == d ? 1 : 0));
      t *= ipow(y, k - (d == n_ ? 1 : 0));
      g[d] += t;
    }
  }
}

Polynomial Polynomial::derivative_x(int i) const {
  Polynomial r(n_);
  for (const auto& [key, c] : terms_) {
    if (key.first[i] == 0) continue;
    MultiIndex b = key.first;
    const int e = b[i]--;
    r.add_term(b, key.second, c * e);
  }
  return r;
}

Polynomial Polynomial::derivative_y() const {
  Polynomial r(n_);
  for (const auto& [key, c] : terms_)
    if (key.second > 0) r.add_term(key.first, key.second - 1, c * key.second);
  return r;
}

Polynomial Polynomial::laplacian_x() const {
  Polynomial r(n_);
  for (int i = 0; i < n_; ++i) r += derivative_x(i).derivative_x(i);
  return r;
}

Polynomial Polynomial::trace() const {
  Polynomial r(n_);
  for (const auto& [key, c] : terms_)
    if (key.second == 0) r.add_term(key.first, 0, c);
  return r;
}

Polynomial Polynomial::translated(std::span<const double> t) const {
  // Expand each x_i^b as (x_i + t_i)^b by the binomial theorem.
  Polynomial r(n_);
  for (const auto& [key, c] : terms_) {
    Polynomial acc = Polynomial::monomial(MultiIndex(n_, 0), key.second, c);
    for (int i = 0; i < n_; ++i) {
      const int b = key.first[i];
      if (b == 0) continue;
      Polynomial factor(n_);
      double binom = 1.0;
      for (int j = 0; j <= b; ++j) {
        MultiIndex e(n_, 0);
        e[i] = j;
        factor.add_term(e, 0, binom * ipow(t[i], b - j));
        binom = binom * (b - j) / (j + 1);
      }
      acc = acc * factor;
    }
    r += acc;
  }
  return r;
}

Polynomial Polynomial::pruned(double tol) const {
  Polynomial r(n_);
  for (const auto& [key, c] : terms_)
    if (std::abs(c) > tol) r.terms_.emplace(key, c);
  return r;
}

Polynomial& Polynomial::operator+=(const Polynomial& o) {
  if (o.n_ != n_) throw DomainError("dimension mismatch in polynomial sum");
  for (const auto& [key, c] : o.terms_) add_term(key.first, key.second, c);
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& o) {
  if (o.n_ != n_) throw DomainError("dimension mismatch in polynomial difference");
  for (const auto& [key, c] : o.terms_) add_term(key.first, key.second, -c);
  return *this;
}

Polynomial& Polynomial::operator*=(double c) {
  if (c == 0.0) {
    terms_.clear();
    return *this;
  }
  for (auto& [key, v] : terms_) v *= c;
  return *this;
}

Polynomial Polynomial::operator*(const Polynomial& o) const {
  if (o.n_ != n_) throw DomainError("dimension mismatch in polynomial product");
  Polynomial r(n_);
  for (const auto& [k1, c1] : terms_)
    for (const auto& [k2, c2] : o.terms_) {
      MultiIndex b = k1.first;
      for (int i = 0; i < n_; ++i) b[i] += k2.first[i];
      r.add_term(b, k1.second + k2.second, c1 * c2);
    }
  return r;
}

std::string Polynomial::to_json() const {
  nlohmann::json j;
  j["n"] = n_;
  j["terms"] = nlohmann::json::array();
  for (const auto& [key, c] : terms_)
    j["terms"].push_back({{"beta", key.first}, {"ypow", key.second}, {"coef", c}});
  return j.dump();
}

Polynomial Polynomial::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  Polynomial p(j.at("n").get<int>());
  for (const auto& t : j.at("terms"))
    p.add_term(t.at("beta").get<MultiIndex>(), t.value("ypow", 0), t.at("coef").get<double>());
  return p;
}

}  // namespace fraclab
