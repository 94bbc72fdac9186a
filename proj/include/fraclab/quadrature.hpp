#pragma once

#include <span>
#include <vector>

#include "fraclab/core.hpp"

namespace fraclab {

struct Rule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Jacobi rule on (-1, 1) for the weight (1-t)^alpha (1+t)^beta (Golub-Welsch).
Rule1D gauss_jacobi(int m, double alpha, double beta);
Rule1D gauss_legendre(int m);
/// Rule for  int_0^L f(t) t^e dt,  e > -1.
Rule1D gauss_jacobi_interval(int m, double e, double L);

/// Closed form of  int_{S^n} |y|^e dH_n  over the unit sphere of R^{n+1}.
double weighted_sphere_measure(int n, double e);

/// Nodes on the open upper unit hemisphere of R^{n+1} whose weights absorb |y|^e.
/// The polar angle sigma is measured from the thin plane {y = 0}; the endpoint
/// factor sigma^e is built into a Gauss-Jacobi rule, so e in (-1, 1) is safe.
class SphereRule {
 public:
  struct Node {
    Point dir;  // unit vector (x, y) with y > 0
    double w;
  };

  SphereRule(int n, double e, int n_polar = 32, int n_azimuth = 64);

  int n() const { return n_; }
  double exponent() const { return e_; }
  const std::vector<Node>& nodes() const { return nodes_; }

  /// int over the full sphere S(x0, r) of f |y|^e, for f even in y.
  template <class F>
  double integrate_even(F&& f, std::span<const double> x0, double r) const {
    double acc = 0.0;
    Point p;
    for (const Node& nd : nodes_) {
      for (int i = 0; i < n_; ++i) p.x[i] = x0[i] + r * nd.dir.x[i];
      p.y = r * nd.dir.y;
      acc += nd.w * f(p, nd.dir);
    }
    return 2.0 * acc * scale(r);
  }

  /// Same as integrate_even but also visits the mirrored lower hemisphere, so odd-in-y
  /// integrands are handled.
  template <class F>
  double integrate_full(F&& f, std::span<const double> x0, double r) const {
    double acc = 0.0;
    Point p;
    for (const Node& nd : nodes_) {
      for (int i = 0; i < n_; ++i) p.x[i] = x0[i] + r * nd.dir.x[i];
      p.y = r * nd.dir.y;
      acc += nd.w * f(p, nd.dir);
      p.y = -p.y;
      Point d = nd.dir;
      d.y = -d.y;
      acc += nd.w * f(p, d);
    }
    return acc * scale(r);
  }

  double scale(double r) const;

 private:
  int n_;
  double e_;
  std::vector<Node> nodes_;
};

}  // namespace fraclab
