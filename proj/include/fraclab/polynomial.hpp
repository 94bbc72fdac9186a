#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fraclab/core.hpp"

namespace fraclab {

/// Sparse polynomial in x in R^n and one extra variable y, keyed by (beta, ypow).
/// A polynomial on R^n is the special case where every ypow is 0.
class Polynomial {
 public:
  using Key = std::pair<MultiIndex, int>;

  explicit Polynomial(int n = 1) : n_(n) {}
  static Polynomial constant(int n, double c);
  static Polynomial monomial(MultiIndex beta, int ypow = 0, double coef = 1.0);

  int n() const { return n_; }
  const std::map<Key, double>& terms() const { return terms_; }
  void add_term(const MultiIndex& beta, int ypow, double coef);
  double coefficient(const MultiIndex& beta, int ypow = 0) const;

  bool is_zero() const { return terms_.empty(); }
  int degree() const;
  /// Common total degree |beta| + ypow, or nullopt when terms of different degree are present.
  std::optional<int> homogeneous_degree() const;
  bool even_in_y() const;
  bool depends_on_y() const;
  double max_abs_coefficient() const;

  double evaluate(std::span<const double> x, double y = 0.0) const;
  /// Writes (d/dx_1, ..., d/dx_n, d/dy) into g[0..n].
  void gradient(std::span<const double> x, double y, std::span<double> g) const;

  Polynomial derivative_x(int i) const;
  Polynomial derivative_y() const;
  Polynomial laplacian_x() const;
  /// Restriction to y = 0.
  Polynomial trace() const;
  /// p(x + t, y).
  Polynomial translated(std::span<const double> t) const;
  /// Drops terms with |coef| <= tol.
  Polynomial pruned(double tol) const;

  Polynomial& operator+=(const Polynomial& o);
  Polynomial& operator-=(const Polynomial& o);
  Polynomial& operator*=(double c);
  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(Polynomial a, double c) { return a *= c; }
  friend Polynomial operator*(double c, Polynomial a) { return a *= c; }
  Polynomial operator*(const Polynomial& o) const;

  /// {"terms":[{"beta":[...],"ypow":k,"coef":c}, ...]}
  std::string to_json() const;
  static Polynomial from_json(const std::string& text);

 private:
  int n_;
  std::map<Key, double> terms_;
};

using PolynomialOnRn = Polynomial;

/// All multi-indices of total degree k in n variables, in lexicographic order (descending first entry).
std::vector<MultiIndex> multi_indices(int n, int k);
double factorial(int k);
double multi_factorial(const MultiIndex& beta);

}  // namespace fraclab
