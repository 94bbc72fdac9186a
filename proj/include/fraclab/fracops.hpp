#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fraclab/core.hpp"
#include "fraclab/solver.hpp"

namespace fraclab {

/// A function on R^n, n in {1, 2}.
using TraceFn = std::function<double(std::span<const double>)>;

/// How the integrand is treated beyond the outer radius R.
enum class FarField {
  decaying,  // u -> u_infinity: the tail is 2(u(x) - u_infinity) |S| R^{-2s}/(2s)
  bounded    // |u| <= sup_bound: the u(x +- z) part is dropped and bounded in the error estimate
};

struct FracEvalConfig {
  double delta = 0.25;       // inner radius; [0, delta] uses Gauss-Jacobi with weight r^{1-2s}
  double R = 64.0;           // outer truncation
  int order = 16;            // points per panel and in the inner rule
  double max_panel = 0.5;    // panels double from delta up to this width
  int n_angle = 64;          // directions on the half circle (n = 2)
  FarField far = FarField::decaying;
  double u_infinity = 0.0;   // limit at infinity for FarField::decaying
  double sup_bound = 1.0;    // used by FarField::bounded
  double inner_tol = 1e-7;   // allowed change of the inner integral between order/2 and order

  void validate() const;
};

struct FracEvalResult {
  double value = 0.0;
  double inner_change = 0.0;   // |inner(order) - inner(order/2)|
  double tail = 0.0;           // closed-form tail contribution beyond R
  double tail_bound = 0.0;     // bound on the neglected part of the tail
};

/// (gamma_{n,s}/2) int (2u(x) - u(x+z) - u(x-z)) / |z|^{n+2s} dz. Throws DomainError when
/// the inner integral does not settle under refinement (u not C^2 near x).
FracEvalResult frac_laplacian(const TraceFn& u, int n, std::span<const double> x, double s,
                              const FracEvalConfig& config = {});

/// Thin trace of a solved field, extended beyond the box by c |x|^{-(n+2s)} with c fitted
/// to the trace on the box boundary. The interpolant is only C^0 across grid lines, so
/// evaluations on it want delta of a few hx and inner_tol at interpolation accuracy.
class GriddedTrace {
 public:
  GriddedTrace(const GridField& field, double s);
  double operator()(std::span<const double> x) const;
  double decay_coefficient() const { return c_; }
  TraceFn fn() const;

 private:
  const GridField* field_;
  double p_;
  double c_ = 0.0;
};

/// (-Delta)^s exp(-|x - c|^2 / sigma^2) at distance r from the centre, by numerical
/// inversion of the Fourier symbol (2 pi |xi|)^{2s}.
double gaussian_fractional_laplacian(int n, double s, double sigma, double r);

/// Poisson extension of exp(-|x - c|^2 / sigma^2) to the upper half-space for L_a.
double gaussian_extension(int n, double s, double sigma, std::span<const double> center,
                          const Point& p);

struct ComplementarityPoint {
  std::vector<double> x;
  double gap = 0.0;       // u - phi
  double frac = 0.0;      // (-Delta)^s u
  double min = 0.0;       // min(gap, frac)
  double lambda = 0.0;    // solver Neumann trace
};
struct ComplementarityReport {
  std::vector<ComplementarityPoint> points;
  double max_violation = 0.0;  // max |min(gap, frac)|
};

/// Points are snapped to thin nodes; DomainError if a point is more than 1e-9 hx away.
ComplementarityReport complementarity_residual(const SolveResult& solved,
                                               const ThinObstacleProblem& problem,
                                               const std::vector<std::vector<double>>& points,
                                               const FracEvalConfig& config = {});

struct CalibrationFunction {
  std::string name;
  int n = 1;
  double s = 0.5;
  TraceFn trace;
  BoundaryData extension;  // exact L_a extension, used as Dirichlet data
  TraceFn frac;            // (-Delta)^s of the trace
};
CalibrationFunction gaussian_calibration(int n, double s, double sigma,
                                         std::vector<double> center = {});

struct CalibrationSample {
  std::vector<double> x;
  double lambda = 0.0;
  double frac = 0.0;
  double ratio = 0.0;
};
struct Calibration {
  double C_hat = 0.0;   // median of lambda / (-Delta)^s u
  double spread = 0.0;  // (max - min) / C_hat over the samples
  bool ok = false;      // spread below the limit
  std::vector<CalibrationSample> samples;
  SolveResult solve;
};

/// Pins the trace to the calibration function on `grid`, solves, and compares the Neumann
/// trace with (-Delta)^s at thin nodes with |x|_inf <= L/2 where |(-Delta)^s u| is at least a
/// fifth of its maximum there.
Calibration calibrate_extension(const GridSpec& grid, const WeightParams& params,
                                const CalibrationFunction& fn, const SolverOptions& options = {},
                                double max_spread = 0.05,
                                CoordinateMode mode = CoordinateMode::extension);

class CalibrationError : public Error {
 public:
  using Error::Error;
};

struct ConsistencyPoint {
  std::vector<double> x;
  double lambda = 0.0;
  double frac = 0.0;
  double deviation = 0.0;  // |lambda - C_hat frac| / max |lambda|
};
struct ConsistencyReport {
  Calibration calibration;
  std::vector<ConsistencyPoint> points;
  double max_deviation = 0.0;
};

/// Calibrates C(n,s) on the target's grid, then compares lambda with C_hat (-Delta)^s u at
/// the target's off-contact thin nodes with |x|_inf <= L/2 (all of them for a pinned-trace
/// target). Throws CalibrationError when the
/// calibration spread exceeds `max_spread`.
ConsistencyReport extension_consistency(const SolveResult& target,
                                        const ThinObstacleProblem& problem,
                                        const CalibrationFunction& fn,
                                        const FracEvalConfig& config = {},
                                        const SolverOptions& options = {},
                                        double max_spread = 0.05);

}  // namespace fraclab
