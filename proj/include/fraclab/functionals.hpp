#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fraclab/core.hpp"
#include "fraclab/harmonics.hpp"
#include "fraclab/quadrature.hpp"

namespace fraclab {

/// Default c in the monotonicity slack c h^2.
inline constexpr double kSlackC = 1.0;

/// Constants of the generalized frequency and the radii schedule.
struct FunctionalConfig {
  double theta = 0.25;
  double C0 = 10.0;
  std::optional<double> r0;  // default: half the distance from x0 to the box boundary
  double r_min = 0.05;
  double r_max = 0.5;
  int count = 12;
  double slack = 0.0;

  /// theta = min(gamma/2, 0.25), C0 = 10.
  static FunctionalConfig defaults(double gamma);
  /// Throws unless 0 < theta < gamma, and theta <= gamma/2 when `weiss_bounds` is set.
  void validate(double gamma, bool weiss_bounds = false) const;
  /// Geometric schedule from r_min to r_max, increasing.
  std::vector<double> radii() const;
};

/// One evaluation of every sphere and ball quantity at radius r.
struct RadialSample {
  double r = 0.0;
  double H = 0.0;  // int_{S(r)} u^2 |y|^a
  double D = 0.0;  // int_{B(r)} |grad u|^2 |y|^a
  double I = 0.0;  // int_{S(r)} u u_nu |y|^a
  double N() const { return r * D / H; }
};

/// Quadrature engine for one (n, a). Thread-safe: all members are const after construction.
class FunctionalEngine {
 public:
  explicit FunctionalEngine(const WeightParams& params, int n_polar = 32, int n_azimuth = 64,
                            int n_radial = 20);

  const WeightParams& params() const { return params_; }
  const SphereRule& sphere() const { return sphere_; }

  double height(const ScalarField& u, std::span<const double> x0, double r) const;
  double dirichlet(const ScalarField& u, std::span<const double> x0, double r) const;
  double flux(const ScalarField& u, std::span<const double> x0, double r) const;
  double frequency(const ScalarField& u, std::span<const double> x0, double r) const;
  RadialSample sample(const ScalarField& u, std::span<const double> x0, double r,
                      bool with_dirichlet = true) const;

  /// W_kappa = r^{-(Qt-2+2 kappa)} D - kappa r^{-(Qt-1+2 kappa)} H.
  double weiss(const ScalarField& u, std::span<const double> x0, double kappa, double r) const;
  /// M_kappa = r^{-(n+a+2 kappa)} int_{S(r)} (u - p(. - x0))^2 |y|^a with kappa = deg p.
  double monneau(const ScalarField& u, std::span<const double> x0, const SolidHarmonic& p,
                 double r) const;
  /// Phi(r) = (r + C0 r^{1+theta}) d/dr log max{H, r^{n+a+2(k+gamma-theta)}}.
  double generalized_frequency(const ScalarField& v, std::span<const double> x0,
                               const FunctionalConfig& cfg, int k, double gamma, double r,
                               bool* truncated = nullptr) const;
  /// max |u| over the quadrature nodes of S(x0, r).
  double sup_on_sphere(const ScalarField& u, std::span<const double> x0, double r) const;
  /// int_{S(1)} f g |y|^a for polynomial arguments, the blow-up inner product.
  double sphere_inner(const ScalarField& f, const ScalarField& g) const;

 private:
  void require_ball(const ScalarField& u, std::span<const double> x0, double r) const;

  WeightParams params_;
  SphereRule sphere_;
  Rule1D radial_;  // Gauss-Jacobi on [0, 1] for t^{n+a}
};

/// Adapters from polynomials to fields.
class PolynomialField final : public ScalarField {
 public:
  explicit PolynomialField(Polynomial p) : p_(std::move(p)) {}
  int dim() const override { return p_.n(); }
  double value(const Point& p) const override;
  void gradient(const Point& p, std::span<double> g) const override;
  const Polynomial& polynomial() const { return p_; }

 private:
  Polynomial p_;
};

/// Field evaluated through a callable; the gradient is optional and otherwise taken by
/// central differences.
class CallableField final : public ScalarField {
 public:
  using ValueFn = std::function<double(const Point&)>;
  using GradFn = std::function<void(const Point&, std::span<double>)>;
  CallableField(int n, ValueFn value, GradFn grad = {}) : n_(n), f_(std::move(value)), g_(std::move(grad)) {}
  int dim() const override { return n_; }
  double value(const Point& p) const override { return f_(p); }
  void gradient(const Point& p, std::span<double> g) const override;

 private:
  int n_;
  ValueFn f_;
  GradFn g_;
};

/// Re (x1 + i|y|)^{3/2}: the s = 1/2 Signorini solution, contact set {x1 <= 0}.
double signorini_value(double x1, double y);
void signorini_gradient(double x1, double y, double& gx, double& gy);
CallableField signorini_field(int n);

// ---------------------------------------------------------------- profiles

struct RadialProfile {
  std::string name;
  std::vector<double> radii;
  std::vector<double> values;
  std::vector<double> slopes() const;
};

struct Verdict {
  bool pass = true;
  double worst_violation = 0.0;
  double r_star = 0.0;  // radius of the worst violation (0 when passing)
  std::string detail;
};

/// Nondecreasing within slack: each value must exceed every earlier value minus slack.
Verdict monotonicity_report(const RadialProfile& profile, double slack);
/// Finite-difference slopes must stay above -C_M r^{gamma-1} - slack.
Verdict monneau_drift_check(const RadialProfile& profile, double gamma, double C_M, double slack);

/// Row of a radial profile; quantities that were not requested hold NaN.
struct ProfileRow {
  double r = 0.0, H = 0.0, D = 0.0, N = 0.0, W = 0.0, M = 0.0, Phi = 0.0;
  bool truncated = false;  // Phi used the r^{n+a+2(k+gamma-theta)} branch
};

struct ProfileRequest {
  bool want_N = true, want_W = false, want_M = false, want_Phi = false;
  double kappa = 0.0;                      // for W and M
  std::optional<SolidHarmonic> monneau_p;  // required when want_M
  FunctionalConfig phi;                    // theta, C0 for Phi
  int k = 2;
  double gamma = 0.5;
  /// Parses "N,W,M,Phi" (any subset, any order); throws DomainError on unknown names.
  static ProfileRequest parse(const std::string& list);
};

/// Evaluates every requested quantity at each radius, one radius per worker.
std::vector<ProfileRow> compute_profile(const FunctionalEngine& engine, const ScalarField& u,
                                        std::span<const double> x0,
                                        const std::vector<double>& radii,
                                        const ProfileRequest& request);
void write_profile_csv(const std::string& path, const std::string& header_comment,
                       const std::vector<ProfileRow>& rows, const ProfileRequest& request);
RadialProfile column(const std::vector<ProfileRow>& rows, const std::string& name);

// Free-function forms with default quadrature sizes.
double height(const ScalarField& u, const WeightParams& p, std::span<const double> x0, double r);
double dirichlet(const ScalarField& u, const WeightParams& p, std::span<const double> x0, double r);
double frequency(const ScalarField& u, const WeightParams& p, std::span<const double> x0, double r);
double weiss(const ScalarField& u, const WeightParams& p, std::span<const double> x0, double kappa,
             double r);
double monneau(const ScalarField& u, std::span<const double> x0, const SolidHarmonic& sh, double r);

}  // namespace fraclab
