#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fraclab/blowup.hpp"
#include "fraclab/core.hpp"
#include "fraclab/functionals.hpp"
#include "fraclab/polynomial.hpp"
#include "fraclab/solver.hpp"

namespace fraclab {

/// Malformed or inconsistent scenario file.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Box geometry. Without `ny` the y-nodes are graded toward the thin set.
struct GridConfig {
  double half_width = 1.0;
  int nx = 65;
  double height = 1.0;
  std::optional<int> ny;          // uniform y spacing when set
  std::optional<double> hy_max;   // default: hx
  double ratio = 1.15;
  std::optional<double> y_first;  // default: min(1e-3, hx/8)

  GridSpec build(int n) const;
};

/// The problem being solved: a named exact instance or an obstacle with polynomial data.
///   signorini_32    Re(x1 + i|y|)^{3/2} on the boundary, zero obstacle (s = 1/2 only)
///   solid_harmonic  L_a extension of the trace q on the boundary, zero obstacle
///   zero            zero data under the obstacle phi = -1, so u = 0 and nothing touches
///   obstacle        user obstacle (polynomial or sine) with the extension of `boundary_trace`
struct InstanceConfig {
  enum class Kind { signorini_32, solid_harmonic, zero, obstacle };
  Kind kind = Kind::zero;
  Polynomial trace{1};            // solid_harmonic
  std::optional<int> kappa;       // solid_harmonic; checked against the degree of q
  std::string obstacle_kind = "polynomial";  // obstacle: polynomial | sine
  std::map<MultiIndex, double> obstacle_coefficients;
  int k = 2;
  double gamma = 0.5;
  Polynomial boundary_trace{1};   // obstacle: Dirichlet data is its L_a extension
};
std::string to_string(InstanceConfig::Kind k);

struct AnalysisConfig {
  std::vector<std::vector<double>> x0;   // profile and blowup centres; default: the origin
  std::string functionals = "N";
  std::optional<double> kappa;           // W and M degree; defaults from the instance
  std::optional<Polynomial> monneau_trace;  // trace of the Monneau comparison polynomial
  double tol_regular = 0.05;
  double tol_singular = 0.05;
  double neighbour_radius = 0.2;
  double C_M = 1.0;                      // Monneau drift constant for non-flat obstacles
  int max_points = 24;                   // classify: free-boundary points, evenly thinned
  std::vector<std::string> verify_suites = {"identities", "harmonics", "grushin", "quadrature"};
};

struct Scenario {
  std::string name;
  WeightParams params;
  GridConfig grid;
  InstanceConfig instance;
  SolverOptions solver;
  CoordinateMode mode = CoordinateMode::extension;
  FunctionalConfig functional;
  AnalysisConfig analyses;
  std::string canonical;  // key-sorted JSON of the parsed input
  std::string hash;       // 64-bit FNV-1a of `canonical`, 16 hex digits

  /// Throws ConfigError with a message naming the offending field.
  static Scenario parse(const std::string& json_text);
  static Scenario load(const std::string& path);

  GridSpec grid_spec() const { return grid.build(params.n); }
  ObstacleSpec obstacle() const;
  BoundaryData boundary() const;
  ThinObstacleProblem problem() const;
  /// Exact solution when the instance has one in closed form.
  std::optional<BoundaryData> exact_solution() const;
  /// L_a extension of the Monneau trace, or of the instance trace for solid_harmonic.
  std::optional<SolidHarmonic> monneau_polynomial() const;
  /// Homogeneity of the instance: deg q, 3/2 for Signorini, else 1 + s.
  double default_kappa() const;
  ClassifyConfig classify_config() const;

  /// Two comment lines: identity (command, name, hash) and the parameter echo.
  std::string header(const std::string& command) const;
};

}  // namespace fraclab
