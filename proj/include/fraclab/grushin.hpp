#pragma once

#include <functional>
#include <span>
#include <vector>

#include "fraclab/core.hpp"
#include "fraclab/harmonics.hpp"

namespace fraclab {

struct GrushinPoint {
  std::vector<double> x;
  double z = 0.0;
};

double rho_alpha(std::span<const double> x, double z, double alpha);
/// Euclidean norm of the gradient of rho_alpha in (x, z).
double grad_rho_norm(std::span<const double> x, double z, double alpha);
/// psi_alpha = |z|^{2 alpha} / rho_alpha^{2 alpha}.
double psi_alpha(std::span<const double> x, double z, double alpha);
GrushinPoint dilate(std::span<const double> x, double z, double lambda, double alpha);

/// Z_alpha f = (alpha+1) x . grad_x f + z d_z f, exact on polynomials.
double z_alpha_apply(const GrushinPolynomial& f, std::span<const double> x, double z, double alpha);
/// Same operator on a callable, differentiated by central differences of step h.
double z_alpha_apply(const std::function<double(std::span<const double>, double)>& f,
                     std::span<const double> x, double z, double alpha, double h = 1e-5);

/// Symbolic vector fields: X_j = |z|^alpha d_{x_j} for j < n, X_n = d_z (0-based j).
GrushinPolynomial apply_x_field(const GrushinPolynomial& f, int j, double alpha);
GrushinPolynomial apply_z_alpha(const GrushinPolynomial& f, double alpha);

/// max over samples of |(X_j Z - Z X_j - X_j) f| for the polynomial test function f.
double commutator_check(const GrushinPolynomial& f, int j,
                        const std::vector<GrushinPoint>& samples, double alpha);

/// C_alpha, cached per (alpha, n). Throws for Q <= 2.
double c_alpha_constant(double alpha, int n);
double fundamental_solution(std::span<const double> x, double z, double alpha, int n);
/// Central-difference stencil of B_alpha = D_zz + |z|^{2 alpha} Delta_x applied to Gamma.
double b_alpha_stencil_residual(std::span<const double> x, double z, double alpha, int n, double h);

/// Field on the Grushin side, with the Euclidean gradient in (x, z).
class GrushinField {
 public:
  virtual ~GrushinField() = default;
  virtual int dim() const = 0;
  virtual double value(std::span<const double> x, double z) const = 0;
  virtual void gradient(std::span<const double> x, double z, std::span<double> g) const = 0;
};

class GrushinPolynomialField final : public GrushinField {
 public:
  explicit GrushinPolynomialField(GrushinPolynomial p) : p_(std::move(p)) {}
  int dim() const override { return p_.n; }
  double value(std::span<const double> x, double z) const override { return p_.evaluate(x, z); }
  void gradient(std::span<const double> x, double z, std::span<double> g) const override {
    p_.gradient(x, z, g);
  }

 private:
  GrushinPolynomial p_;
};

/// u(x, z) = u~(x, h^{-1}(|z|)) for an extension-side field u~.
class GrushinView final : public GrushinField {
 public:
  GrushinView(const ScalarField& ext, WeightParams params) : f_(ext), p_(params) {}
  int dim() const override { return f_.dim(); }
  double value(std::span<const double> x, double z) const override;
  void gradient(std::span<const double> x, double z, std::span<double> g) const override;

 private:
  const ScalarField& f_;
  WeightParams p_;
};

/// u~(x, y) = u(x, h(|y|)) for a Grushin-side field u.
class ExtensionView final : public ScalarField {
 public:
  ExtensionView(const GrushinField& g, WeightParams params) : g_(g), p_(params) {}
  int dim() const override { return g_.dim(); }
  double value(const Point& p) const override;
  void gradient(const Point& p, std::span<double> g) const override;

 private:
  const GrushinField& g_;
  WeightParams p_;
};

/// Node-to-node transports: the z-nodes are h(y-nodes), values are copied.
GridField to_grushin(const GridField& field, const WeightParams& params);
GridField from_grushin(const GridField& field, const WeightParams& params);

enum class IntegralKind { ball, sphere };

/// Grushin ball integral of f dx dz, or sphere integral of f / |grad rho| dH_n, over
/// rho_alpha <= r (resp. = r), evaluated on the Euclidean side with weight |y|^{-a}.
/// When the transported integrand is known to carry the factor |y|^absorb (psi_alpha
/// contributes |y|^{2a}), passing it moves that factor into the Jacobi weight and keeps
/// the remaining integrand smooth. f itself is always the full integrand.
double pushforward_integral(const std::function<double(std::span<const double>, double)>& f,
                            double r, const WeightParams& params, IntegralKind kind,
                            int n_polar = 32, int n_azimuth = 64, int n_radial = 24,
                            double absorb = 0.0);

struct GrushinFunctionals {
  double H = 0.0;
  double D = 0.0;
  double N = 0.0;
};

/// H(u, r), D(u, r) and N(u, r) on the gauge ball of radius r centred at the origin.
GrushinFunctionals grushin_frequency(const GrushinField& u, double r, const WeightParams& params,
                                     int n_polar = 32, int n_azimuth = 64, int n_radial = 24);

}  // namespace fraclab
