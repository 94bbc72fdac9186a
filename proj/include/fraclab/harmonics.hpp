#pragma once

#include <span>
#include <string>
#include <vector>

#include "fraclab/core.hpp"
#include "fraclab/polynomial.hpp"

namespace fraclab {

/// Homogeneous polynomial in (x, y), even in y, annihilated by L_a.
struct SolidHarmonic {
  Polynomial poly;
  int degree = 0;
  WeightParams params;

  double evaluate(std::span<const double> x, double y) const { return poly.evaluate(x, y); }
  Polynomial trace() const { return poly.trace(); }
};

/// Function of (x, z) built from terms c x^beta sgn(z)^odd |z|^p with a real exponent p.
struct GrushinPolynomial {
  struct Term {
    MultiIndex beta;
    double zpow = 0.0;
    bool odd = false;
    double coef = 0.0;
  };
  int n = 1;
  std::vector<Term> terms;

  /// Adds c x^beta z^p; an odd integer p gives a term odd in z, any other p uses |z|^p.
  void add(MultiIndex beta, double p, double coef);

  double evaluate(std::span<const double> x, double z) const;
  /// Gradient (d/dx_1..d/dx_n, d/dz); undefined where z = 0 and a power below 1 appears.
  void gradient(std::span<const double> x, double z, std::span<double> g) const;
  /// Degree under delta_lambda(x, z) = (lambda^{alpha+1} x, lambda z), or -1 if not homogeneous.
  double homogeneity(double alpha) const;
};

/// c_{2k} = prod_{i=1}^k (2i-1)/(2i-2s), k = 0..kmax, built as a running product.
std::vector<double> extension_coefficients(int kmax, double s);

/// Delta_x p + D_yy p + (a/y) D_y p, computed termwise and exact on coefficients.
Polynomial la_apply(const Polynomial& p, double a);
inline Polynomial la_apply(const SolidHarmonic& p) { return la_apply(p.poly, p.params.a); }

SolidHarmonic extend_la_harmonic(const Polynomial& q, const WeightParams& params);
std::vector<SolidHarmonic> basis_solid_harmonics(int kappa, int n, const WeightParams& params);

struct TraceCheck {
  enum class Outcome { certified_nonneg, negative_witness, undetermined };
  Outcome outcome = Outcome::undetermined;
  std::vector<double> witness;
  std::string method;
};
std::string to_string(TraceCheck::Outcome o);

TraceCheck nonneg_trace_check(const SolidHarmonic& p, int budget);
int stratum_dimension(const SolidHarmonic& p);

GrushinPolynomial grushin_model_solution(int n, double alpha);

/// Taylor polynomial of degree k of the obstacle at x0, in the local variable x - x0.
Polynomial taylor_polynomial(const ObstacleSpec& obstacle, std::span<const double> x0, int k);

/// int_{S_rho(r)} p q psi_alpha / |grad rho_alpha| dH_n for Grushin-homogeneous p, q of
/// different degrees, computed by transport to the Euclidean sphere.
double orthogonality_check(const GrushinPolynomial& p, const GrushinPolynomial& q,
                           const WeightParams& params, double r);

std::string to_json(const SolidHarmonic& p);

}  // namespace fraclab
