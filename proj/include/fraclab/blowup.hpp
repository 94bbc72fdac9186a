#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fraclab/core.hpp"
#include "fraclab/functionals.hpp"
#include "fraclab/harmonics.hpp"
#include "fraclab/solver.hpp"

namespace fraclab {

/// v^{x0}(x, y) = u(x0 + x, y) - [phi(x0 + x) - q_k(x) + q~_k(x, y)], in local coordinates.
class ObstacleNormalizedField final : public ScalarField {
 public:
  ObstacleNormalizedField(std::shared_ptr<const ScalarField> base, const ObstacleSpec& obstacle,
                          std::vector<double> x0, int k, const WeightParams& params);

  int dim() const override { return base_->dim(); }
  double value(const Point& p) const override;
  void gradient(const Point& p, std::span<double> g) const override;
  bool covers_ball(std::span<const double> c, double r) const override;

  const Polynomial& taylor() const { return q_; }
  const Polynomial& taylor_extension() const { return qt_; }
  const std::vector<double>& center() const { return x0_; }

 private:
  std::shared_ptr<const ScalarField> base_;
  ObstacleSpec obstacle_;
  std::vector<double> x0_;
  Polynomial q_, qt_;
  bool zero_obstacle_;
};

/// L_a-harmonic extension of an inhomogeneous polynomial, degree by degree.
Polynomial extend_polynomial(const Polynomial& q, const WeightParams& params);

/// Free-boundary test on a solved field: a contact node and a non-contact node both lie
/// within 2 hx of x0.
bool on_free_boundary(const GridField& solved, std::span<const double> x0);
/// Contact nodes with at least one non-contact x-neighbour, away from the box edge.
std::vector<std::vector<double>> free_boundary_nodes(const GridField& solved);

/// Throws DomainError when `solved` carries a contact mask and x0 is not on its free boundary.
std::shared_ptr<ObstacleNormalizedField> obstacle_normalize(
    std::shared_ptr<const GridField> solved, const ObstacleSpec& obstacle,
    std::span<const double> x0, int k, const WeightParams& params);

/// sup_{|x| = t} |Delta_x (phi(x0 + .) - q_k)| at each radius and its log-log slope, which
/// bounds |L_a v| / |y|^a. `exact` is set when the residual vanishes identically.
struct ResidualScaling {
  std::vector<double> radii, sup;
  double slope = 0.0;
  bool exact = false;
};
ResidualScaling obstacle_residual_scaling(const ObstacleSpec& obstacle, std::span<const double> x0,
                                          int k, const std::vector<double>& radii);

enum class Normalization { almgren, kappa };

/// u(x0 + r x, r y) / d_r, a lazy view; `materialize` resamples it on a grid.
class RescaledField final : public ScalarField {
 public:
  RescaledField(std::shared_ptr<const ScalarField> base, std::vector<double> x0, double r,
                double d_r, Normalization norm);
  int dim() const override { return base_->dim(); }
  double value(const Point& p) const override;
  void gradient(const Point& p, std::span<double> g) const override;
  bool covers_ball(std::span<const double> c, double rho) const override;

  double scale() const { return r_; }
  double d_r() const { return d_; }
  Normalization normalization() const { return norm_; }
  GridField materialize(const GridSpec& unit) const;

 private:
  Point map(const Point& p) const;
  std::shared_ptr<const ScalarField> base_;
  std::vector<double> x0_;
  double r_, d_;
  Normalization norm_;
};

/// Almgren: d_r = (H(r)/r^{n+a})^{1/2}; kappa: d_r = r^kappa. Throws UndefinedError when
/// d_r = 0.
RescaledField rescale(std::shared_ptr<const ScalarField> field, std::span<const double> x0,
                      double r, Normalization norm, const FunctionalEngine& engine,
                      double kappa = 0.0);

struct FrequencyConfig {
  FunctionalConfig functional;  // radii schedule, theta, C0, slack
  bool generalized = false;     // Phi instead of N
  int k = 2;
  double gamma = 0.5;
  double grid_h = 0.0;          // r_min is raised to 4 grid_h when positive
  /// Monotonicity slack is max(functional.slack, slack_c * grid_h^2).
  double slack_c = kSlackC;
};

struct FrequencyEstimate {
  double kappa_hat = 0.0;
  double raw_small = 0.0;     // profile value at the smallest radius
  double extrapolated = 0.0;  // Aitken / Richardson limit of the profile at 0+
  double order = 0.0;         // estimated convergence order of the profile in r
  bool extrapolation_used = false;
  bool truncated = false;     // Phi used the r^{n+a+2(k+gamma-theta)} branch at r_min
  bool undetermined = false;  // profile not monotone within slack
  RadialProfile profile;
  Verdict monotone;
};

FrequencyEstimate frequency_at(const ScalarField& field, std::span<const double> x0,
                               const FrequencyConfig& config, const FunctionalEngine& engine);

struct BlowupFit {
  SolidHarmonic p;
  std::vector<double> coefficients;  // in the basis_solid_harmonics(2m) order
  double residual = 0.0;             // Monneau of the fit at r = 1
  TraceCheck trace;
  bool accepted = false;
};

BlowupFit fit_blowup_polynomial(const ScalarField& rescaled, int m, const FunctionalEngine& engine);

/// Fraction of thin nodes in B_r(x0) that are in contact; radii below 3 hx are dropped.
RadialProfile coincidence_density(const GridField& solved, std::span<const double> x0,
                                  const std::vector<double>& radii);

/// "Density -> 0": last value < 0.1 and log-log slope < -0.5 over the last decade of radii.
struct DensityVerdict {
  bool vanishing = false;
  double last = 0.0;
  double slope = 0.0;
};
DensityVerdict density_vanishing(const RadialProfile& density);

struct ClassifyConfig {
  FrequencyConfig frequency;
  double tol_regular = 0.05;
  double tol_singular = 0.05;
  double fit_radius = 0.0;             // default: the largest profile radius
  std::vector<double> density_radii;   // default: the frequency radii
  int trace_budget = 4000;
  /// Fitted coefficients below prune_rel * max are zeroed before the trace check and d(p).
  double prune_rel = 1e-3;
  double eps_dichotomy = 0.1;
};

struct BlowupReport {
  enum class Kind { regular, singular, other, undetermined };
  std::vector<double> x0;
  Kind kind = Kind::undetermined;
  int m = 0;
  int d = -1;
  FrequencyEstimate frequency;
  std::optional<BlowupFit> fit;
  std::optional<BlowupFit> fit_half;  // fit at half the radius, for the uniqueness surrogate
  double fit_distance = 0.0;          // ||p_r - p_{r/2}|| in the |y|^a sphere norm
  RadialProfile density;
  DensityVerdict density_verdict;
  double nondegeneracy_lo = 0.0;      // min over radii of sup_S(r)|v| / r^kappa
  double nondegeneracy_hi = 0.0;
  std::string branch;                 // "a" or "b", the sup-growth dichotomy
  double sup_slope = 0.0;             // log-log slope of sup_S(r)|v|
  std::string detail;
};
std::string to_string(BlowupReport::Kind k);
std::string to_json(const BlowupReport& r);

BlowupReport classify(std::shared_ptr<const GridField> solved, const ObstacleSpec& obstacle,
                      std::span<const double> x0, const WeightParams& params,
                      const ClassifyConfig& config, const FunctionalEngine& engine);

/// Reports for several points, one point per worker.
std::vector<BlowupReport> classify_many(std::shared_ptr<const GridField> solved,
                                        const ObstacleSpec& obstacle,
                                        const std::vector<std::vector<double>>& points,
                                        const WeightParams& params, const ClassifyConfig& config,
                                        const FunctionalEngine& engine);

struct StrataTable {
  std::map<std::pair<int, int>, std::vector<std::size_t>> groups;  // (m, d) -> report indices
  struct Pair {
    std::size_t i, j;
    double separation;
    double distance;  // int_{S(1)} |y|^a (p_i - p_j)^2
  };
  std::vector<Pair> pairs;
};

/// Groups singular reports by (m, d) and tabulates polynomial distances of pairs within
/// `neighbour_radius` of each other.
StrataTable stratify(const std::vector<BlowupReport>& reports, const FunctionalEngine& engine,
                     double neighbour_radius);
void write_strata_csv(const std::string& path, const std::string& header_comment,
                      const std::vector<BlowupReport>& reports, const StrataTable& table);

}  // namespace fraclab
