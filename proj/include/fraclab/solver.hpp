#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fraclab/core.hpp"

namespace fraclab {

enum class CoordinateMode { extension, grushin };
std::string to_string(CoordinateMode m);

/// Boundary data in extension coordinates (x, y); grushin-mode solves evaluate it at
/// (x, h^{-1}(z)).
using BoundaryData = std::function<double(const Point&)>;

/// Thin-obstacle problem on [-L, L]^n x [0, Y] with Dirichlet data on the outer boundary.
/// In grushin mode the grid's y-nodes are read as z-nodes.
struct ThinObstacleProblem {
  WeightParams params;
  GridSpec grid;
  std::vector<double> phi;  // obstacle on the thin nodes, thin_index order
  BoundaryData boundary;
  CoordinateMode mode = CoordinateMode::extension;
  /// Pins the thin trace to phi instead of imposing u >= phi (used for calibration solves).
  bool thin_dirichlet = false;

  /// Throws DomainError on size mismatch, non-finite data, or grushin mode with alpha < 0.
  void validate() const;
  /// Physical coordinates of node j in the y (or z) direction, mapped back to y.
  double extension_y(int j) const;
};

/// Flux-form coefficients. Rows only depend on the y index because x is uniform, so the
/// whole operator is four short arrays.
struct AssembledSystem {
  int n = 1;
  int nx = 0;
  int ny = 0;
  double cell_area = 0.0;  // hx^n, the thin-cell footprint
  std::vector<double> tx;  // coupling to each x-neighbour at row j
  std::vector<double> ty;  // coupling between rows j and j+1
  std::vector<double> diag;
  CoordinateMode mode = CoordinateMode::extension;
  double trace_factor = 1.0;  // (2s)^{1-2s} in grushin mode, 1 otherwise

  /// (A u) at an interior-in-x node; u is a full grid vector.
  double apply(const std::vector<double>& u, const GridSpec& g, int i1, int i2, int j) const;
  /// 1/2 sum over faces T (u_p - u_q)^2, the discrete energy up to a constant.
  double energy(const std::vector<double>& u, const GridSpec& g) const;
};

AssembledSystem assemble(const ThinObstacleProblem& problem);

enum class SweepOrder { red_black, symmetric };

struct SolverOptions {
  double omega = 1.8;      // <= 0 selects 2/(1+sin(pi/(nx-1)))
  double tol = 1e-10;      // natural residual, in u units
  double compl_tol = 1e-9; // max |min(u - phi, lambda)| with lambda in trace units
  int max_iter = 100000;   // sweeps
  int check_every = 10;    // residual and energy checks
  SweepOrder order = SweepOrder::red_black;
  const std::vector<double>* initial = nullptr;  // full grid vector, optional
};

struct SolveResult {
  std::shared_ptr<GridField> field;
  std::vector<std::uint8_t> contact;  // thin nodes with u - phi < 10 tol
  std::vector<double> lambda;         // Neumann trace on thin nodes; NaN on the box edge
  int iterations = 0;
  double residual = 0.0;        // natural residual (u units) at exit
  double complementarity = 0.0; // max |min(u - phi, lambda)| over interior thin nodes
  bool converged = false;
  bool max_principle_ok = true;
  double omega = 0.0;
  std::vector<double> energy_history;
  std::string note;
  CoordinateMode mode = CoordinateMode::extension;
  WeightParams params;
};

SolveResult psor_solve(const ThinObstacleProblem& problem, const SolverOptions& options = {});

/// Neumann trace of a field on the problem's grid, from the assembled y = 0 row.
std::vector<double> neumann_trace(const std::vector<double>& u, const ThinObstacleProblem& problem);

/// Solves on `base` and `levels - 1` nested refinements, warm-starting each level from the
/// cubic interpolant of the previous one.
std::vector<SolveResult> solve_cascade(
    const std::function<ThinObstacleProblem(const GridSpec&)>& build, const GridSpec& base,
    int levels, const SolverOptions& options = {});

/// Solves on each grid in turn, warm-starting from the cubic interpolant of the previous
/// solution. Grids need not be nested.
std::vector<SolveResult> solve_sequence(
    const std::function<ThinObstacleProblem(const GridSpec&)>& build,
    const std::vector<GridSpec>& grids, const SolverOptions& options = {});

/// Level `level` of an h-graded family: nx-1 doubles, hy_max = hx, the grading ratio
/// approaches 1 as ratio0 - 1 halves, and y_first halves with hx.
GridSpec convergence_grid(int n, double half_width, int nx0, double height, double ratio0,
                          double y_first0, int level);

/// Boundary data read off an enclosing coarse solve (two-level box).
BoundaryData enclosing_boundary(const SolveResult& outer);

/// max_i |u(x) - u(-x1, x')| over grid nodes.
double x1_symmetry_defect(const GridField& f);

struct ModeCrosscheck {
  double sup_discrepancy = 0.0;
  double h = 0.0;
  SolveResult extension;
  SolveResult grushin;
};

/// Solves in both coordinate modes on corresponding nodes (z_j = h(y_j)) and compares.
ModeCrosscheck coordinate_mode_crosscheck(const ThinObstacleProblem& problem,
                                          const SolverOptions& options = {});

/// Thin trace of a boundary function on the problem grid, handy for building phi.
std::vector<double> thin_samples(const GridSpec& g, const std::function<double(std::span<const double>)>& f);

}  // namespace fraclab
