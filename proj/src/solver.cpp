#include "fraclab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "fraclab/grushin.hpp"
#include "fraclab/parallel.hpp"

namespace fraclab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool is_boundary_column(const GridSpec& g, int i1, int i2) {
  const int last = g.nx() - 1;
  if (i1 == 0 || i1 == last) return true;
  return g.n() == 2 && (i2 == 0 || i2 == last);
}

int columns_i2(const GridSpec& g) { return g.n() == 2 ? g.nx() : 1; }

Point node_point(const GridSpec& g, int i1, int i2, double y) {
  Point p;
  p.x[0] = g.x_node(i1);
  if (g.n() == 2) p.x[1] = g.x_node(i2);
  p.y = y;
  return p;
}

// Sum of the 2n x-neighbour values of node (i1, i2, j).
double x_neighbour_sum(const std::vector<double>& u, const GridSpec& g, int i1, int i2, int j) {
  double s = u[g.index(i1 - 1, i2, j)] + u[g.index(i1 + 1, i2, j)];
  if (g.n() == 2) s += u[g.index(i1, i2 - 1, j)] + u[g.index(i1, i2 + 1, j)];
  return s;
}

struct Column {
  int i1, i2;
};

}  // namespace

std::string to_string(CoordinateMode m) {
  return m == CoordinateMode::extension ? "extension" : "grushin";
}

void ThinObstacleProblem::validate() const {
  if (phi.size() != grid.thin_size()) throw DomainError("obstacle size does not match the grid");
  for (double v : phi)
    if (!std::isfinite(v)) throw DomainError("obstacle values must be finite");
  if (!boundary) throw DomainError("boundary data missing");
  if (params.n != grid.n()) throw DomainError("grid dimension does not match params");
  if (mode == CoordinateMode::grushin && params.alpha < 0.0)
    throw DomainError("grushin mode needs alpha >= 0 (s <= 1/2); use extension mode");
  if (grid.h_min() < 1e-12) throw DomainError("degenerate grid spacing");
}

double ThinObstacleProblem::extension_y(int j) const {
  const double t = grid.y_nodes()[j];
  return mode == CoordinateMode::grushin ? h_inverse(t, params) : t;
}

AssembledSystem assemble(const ThinObstacleProblem& problem) {
  problem.validate();
  const GridSpec& g = problem.grid;
  AssembledSystem A;
  A.n = g.n();
  A.nx = g.nx();
  A.ny = g.ny();
  A.mode = problem.mode;
  const double hx = g.hx();
  A.cell_area = std::pow(hx, g.n());
  const auto& y = g.y_nodes();
  const int ny = g.ny();
  // Extension mode: |y|^a on every face. Grushin mode: 1 on z-faces, |z|^{2 alpha} on x-faces.
  const bool gr = problem.mode == CoordinateMode::grushin;
  const double ey = gr ? 0.0 : problem.params.a;
  const double ex = gr ? 2.0 * problem.params.alpha : problem.params.a;
  A.trace_factor = gr ? std::pow(2.0 * problem.params.s, 1.0 - 2.0 * problem.params.s) : 1.0;
  A.ty.assign(ny - 1, 0.0);
  A.tx.assign(ny - 1, 0.0);
  A.diag.assign(ny - 1, 0.0);
  for (int j = 0; j + 1 < ny; ++j) {
    const double dy = y[j + 1] - y[j];
    if (!(dy > 0.0)) throw DomainError("degenerate y spacing");
    A.ty[j] = A.cell_area * std::pow(0.5 * (y[j] + y[j + 1]), ey) / dy;
  }
  // Lateral faces span [y_{j-1/2}, y_{j+1/2}] (from 0 for the thin row). The weight is
  // integrated exactly there: a midpoint sample keeps a relative error of order (ratio - 1)^2
  // on a geometrically graded layer, which does not shrink as hx is refined.
  for (int j = 0; j + 1 < ny; ++j) {
    const double lo = j == 0 ? 0.0 : 0.5 * (y[j - 1] + y[j]);
    const double hi = 0.5 * (y[j] + y[j + 1]);
    const double w = (std::pow(hi, 1.0 + ex) - std::pow(lo, 1.0 + ex)) / (1.0 + ex);
    A.tx[j] = std::pow(hx, g.n() - 2) * w;
  }
  for (int j = 0; j + 1 < ny; ++j)
    A.diag[j] = 2 * g.n() * A.tx[j] + A.ty[j] + (j > 0 ? A.ty[j - 1] : 0.0);
  return A;
}

double AssembledSystem::apply(const std::vector<double>& u, const GridSpec& g, int i1, int i2,
                              int j) const {
  double v = diag[j] * u[g.index(i1, i2, j)] - tx[j] * x_neighbour_sum(u, g, i1, i2, j) -
             ty[j] * u[g.index(i1, i2, j + 1)];
  if (j > 0) v -= ty[j - 1] * u[g.index(i1, i2, j - 1)];
  return v;
}

double AssembledSystem::energy(const std::vector<double>& u, const GridSpec& g) const {
  double e = 0.0;
  const int n2 = columns_i2(g);
  for (int i2 = 0; i2 < n2; ++i2)
    for (int i1 = 0; i1 < nx; ++i1)
      for (int j = 0; j + 1 < ny; ++j) {
        const double c = u[g.index(i1, i2, j)];
        const double up = u[g.index(i1, i2, j + 1)] - c;
        e += ty[j] * up * up;
        if (i1 + 1 < nx) {
          const double d = u[g.index(i1 + 1, i2, j)] - c;
          e += tx[j] * d * d;
        }
        if (n == 2 && i2 + 1 < nx) {
          const double d = u[g.index(i1, i2 + 1, j)] - c;
          e += tx[j] * d * d;
        }
      }
  return 0.5 * e;
}

std::vector<double> thin_samples(const GridSpec& g,
                                 const std::function<double(std::span<const double>)>& f) {
  std::vector<double> out(g.thin_size());
  const int n2 = columns_i2(g);
  for (int i2 = 0; i2 < n2; ++i2)
    for (int i1 = 0; i1 < g.nx(); ++i1) {
      const double x[2] = {g.x_node(i1), g.x_node(i2)};
      out[g.thin_index(i1, i2)] = f(std::span<const double>(x, g.n()));
    }
  return out;
}

namespace {

struct Residuals {
  double natural = 0.0;
  double complementarity = 0.0;
};

Residuals residuals(const std::vector<double>& u, const ThinObstacleProblem& P,
                    const AssembledSystem& A) {
  const GridSpec& g = P.grid;
  Residuals r;
  const int n2 = columns_i2(g);
  for (int i2 = 0; i2 < n2; ++i2)
    for (int i1 = 0; i1 < g.nx(); ++i1) {
      if (is_boundary_column(g, i1, i2)) continue;
      for (int j = 0; j + 1 < g.ny(); ++j) {
        const double Au = A.apply(u, g, i1, i2, j);
        if (j == 0) {
          if (P.thin_dirichlet) continue;
          const double gap = u[g.index(i1, i2, 0)] - P.phi[g.thin_index(i1, i2)];
          r.natural = std::max(r.natural, std::abs(std::min(gap, Au / A.diag[0])));
          const double lam = Au * A.trace_factor / A.cell_area;
          r.complementarity = std::max(r.complementarity, std::abs(std::min(gap, lam)));
        } else {
          r.natural = std::max(r.natural, std::abs(Au) / A.diag[j]);
        }
      }
    }
  return r;
}

}  // namespace

std::vector<double> neumann_trace(const std::vector<double>& u, const ThinObstacleProblem& problem) {
  const AssembledSystem A = assemble(problem);
  const GridSpec& g = problem.grid;
  std::vector<double> lam(g.thin_size(), kNaN);
  const int n2 = columns_i2(g);
  for (int i2 = 0; i2 < n2; ++i2)
    for (int i1 = 0; i1 < g.nx(); ++i1)
      if (!is_boundary_column(g, i1, i2))
        lam[g.thin_index(i1, i2)] = A.apply(u, g, i1, i2, 0) * A.trace_factor / A.cell_area;
  return lam;
}

SolveResult psor_solve(const ThinObstacleProblem& P, const SolverOptions& opt) {
  const AssembledSystem A = assemble(P);
  const GridSpec& g = P.grid;
  const int nx = g.nx(), ny = g.ny(), J = ny - 1;
  const int n2 = columns_i2(g);
  if (!(opt.tol > 0.0) || opt.max_iter < 1 || opt.check_every < 1)
    throw DomainError("solver options: tol > 0, max_iter >= 1 and check_every >= 1 required");

  double omega = opt.omega;
  if (omega <= 0.0) omega = 2.0 / (1.0 + std::sin(std::numbers::pi / (nx - 1)));
  if (!(omega > 0.0 && omega < 2.0)) throw DomainError("omega must lie in (0, 2)");

  // Dirichlet values and the initial state.
  std::vector<double> u(g.size(), 0.0);
  std::vector<double> yext(ny);
  for (int j = 0; j < ny; ++j) yext[j] = P.extension_y(j);
  if (opt.initial) {
    if (opt.initial->size() != g.size()) throw DomainError("initial guess size mismatch");
    u = *opt.initial;
  }
  for (int i2 = 0; i2 < n2; ++i2)
    for (int i1 = 0; i1 < nx; ++i1) {
      const bool edge = is_boundary_column(g, i1, i2);
      const double top = P.boundary(node_point(g, i1, i2, yext[J]));
      for (int j = 0; j < ny; ++j) {
        double& v = u[g.index(i1, i2, j)];
        if (edge) v = P.boundary(node_point(g, i1, i2, yext[j]));
        else if (j == J) v = top;
        else if (!opt.initial) v = top;
      }
      if (!edge) {
        double& v0 = u[g.index(i1, i2, 0)];
        const double ph = P.phi[g.thin_index(i1, i2)];
        v0 = P.thin_dirichlet ? ph : std::max(v0, ph);
      }
    }

  // Forward elimination from the top row down, so the thin unknown is solved last. The
  // pivots of rows >= 1 do not involve row 0, so pinned-trace solves reuse them.
  std::vector<double> dp(J), mult(J, 0.0);
  dp[J - 1] = A.diag[J - 1];
  for (int j = J - 2; j >= 0; --j) {
    mult[j] = A.ty[j] / dp[j + 1];
    dp[j] = A.diag[j] - mult[j] * A.ty[j];
  }
  std::vector<Column> colors[2];
  for (int i2 = 0; i2 < n2; ++i2)
    for (int i1 = 0; i1 < nx; ++i1)
      if (!is_boundary_column(g, i1, i2)) colors[(i1 + i2) % 2].push_back({i1, i2});

  auto relax_column = [&](const Column& c, double w, std::vector<double>& bp) {
    const std::size_t base = g.index(c.i1, c.i2, 0);
    const int j0 = P.thin_dirichlet ? 1 : 0;
    bp[J - 1] = A.tx[J - 1] * x_neighbour_sum(u, g, c.i1, c.i2, J - 1) + A.ty[J - 1] * u[base + J];
    for (int j = J - 2; j >= j0; --j) {
      bp[j] = A.tx[j] * x_neighbour_sum(u, g, c.i1, c.i2, j) + mult[j] * bp[j + 1];
    }
    double prev;
    if (j0 == 0) {
      const double ph = P.phi[g.thin_index(c.i1, c.i2)];
      const double z0 = std::max(ph, bp[0] / dp[0]);
      double v = u[base] + w * (z0 - u[base]);
      u[base] = std::max(v, ph);
      prev = z0;
    } else {
      prev = u[base];
    }
    for (int j = std::max(1, j0); j < J; ++j) {
      const double z = (bp[j] + A.ty[j - 1] * prev) / dp[j];
      u[base + j] += w * (z - u[base + j]);
      prev = z;
    }
  };

  SolveResult res;
  res.mode = P.mode;
  res.params = P.params;
  double e_prev = A.energy(u, g);
  res.energy_history.push_back(e_prev);
  std::ostringstream note;
  const int chunks = std::max(1, thread_budget() * 4);

  int it = 0;
  Residuals rr;
  for (it = 1; it <= opt.max_iter; ++it) {
    if (opt.order == SweepOrder::red_black) {
      for (auto& cols : colors) {
        const std::size_t m = cols.size();
        const std::size_t nch = std::min<std::size_t>(chunks, std::max<std::size_t>(1, m));
        parallel_for(nch, [&](std::size_t k) {
          std::vector<double> bp(J);
          for (std::size_t q = k * m / nch; q < (k + 1) * m / nch; ++q)
            relax_column(cols[q], omega, bp);
        });
      }
    } else {
      std::vector<Column> all;
      for (int i2 = 0; i2 < n2; ++i2)
        for (int i1 = 0; i1 < nx; ++i1)
          if (!is_boundary_column(g, i1, i2)) all.push_back({i1, i2});
      std::vector<double> bp(J);
      for (const auto& c : all) relax_column(c, omega, bp);
      for (auto c = all.rbegin(); c != all.rend(); ++c) relax_column(*c, omega, bp);
    }
    if (it % opt.check_every == 0 || it == opt.max_iter) {
      const double e = A.energy(u, g);
      res.energy_history.push_back(e);
      if (e > e_prev + 1e-13 * std::max(1.0, std::abs(e_prev)) && omega > 1.0) {
        omega = 1.0 + 0.5 * (omega - 1.0);
        note << "energy rose at sweep " << it << ", omega reduced to " << omega << "; ";
      }
      e_prev = e;
      rr = residuals(u, P, A);
      if (rr.natural < opt.tol && rr.complementarity < opt.compl_tol) break;
    }
  }
  if (it > opt.max_iter) it = opt.max_iter;
  rr = residuals(u, P, A);
  res.iterations = it;
  res.residual = rr.natural;
  res.complementarity = rr.complementarity;
  res.converged = rr.natural < opt.tol && rr.complementarity < opt.compl_tol;
  res.omega = omega;
  if (!res.converged) note << "not converged after " << it << " sweeps; ";

  // Discrete maximum principle: interior values between the boundary and trace extremes.
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int i2 = 0; i2 < n2; ++i2)
    for (int i1 = 0; i1 < nx; ++i1)
      for (int j = 0; j < ny; ++j) {
        if (j == 0 || j == J || is_boundary_column(g, i1, i2)) {
          lo = std::min(lo, u[g.index(i1, i2, j)]);
          hi = std::max(hi, u[g.index(i1, i2, j)]);
        }
      }
  const double slack = 10.0 * opt.tol * std::max(1.0, hi - lo);
  for (int i2 = 0; i2 < n2 && res.max_principle_ok; ++i2)
    for (int i1 = 0; i1 < nx; ++i1)
      for (int j = 1; j < J; ++j) {
        const double v = u[g.index(i1, i2, j)];
        if (v < lo - slack || v > hi + slack) {
          res.max_principle_ok = false;
          note << "maximum principle violated at node (" << i1 << "," << i2 << "," << j << "); ";
          break;
        }
      }

  res.lambda = neumann_trace(u, P);
  res.contact.assign(g.thin_size(), 0);
  for (std::size_t t = 0; t < g.thin_size(); ++t) {
    const int i1 = static_cast<int>(t % nx), i2 = static_cast<int>(t / nx);
    res.contact[t] = u[g.index(i1, i2, 0)] - P.phi[t] < 10.0 * opt.tol ? 1 : 0;
  }
  res.field = std::make_shared<GridField>(g, std::move(u));
  res.field->contact_mask = res.contact;
  res.field->neumann_trace = res.lambda;
  res.note = note.str();
  return res;
}

std::vector<SolveResult> solve_sequence(
    const std::function<ThinObstacleProblem(const GridSpec&)>& build,
    const std::vector<GridSpec>& grids, const SolverOptions& options) {
  std::vector<SolveResult> out;
  for (const GridSpec& g : grids) {
    const ThinObstacleProblem P = build(g);
    SolverOptions o = options;
    std::vector<double> warm;
    if (!out.empty()) {
      const GridField& prev = *out.back().field;
      if (prev.spec().n() != g.n()) throw DomainError("grid sequence changes dimension");
      warm.resize(g.size());
      const int n2 = columns_i2(g);
      for (int i2 = 0; i2 < n2; ++i2)
        for (int i1 = 0; i1 < g.nx(); ++i1)
          for (int j = 0; j < g.ny(); ++j)
            warm[g.index(i1, i2, j)] = prev.value(node_point(g, i1, i2, g.y_nodes()[j]));
      o.initial = &warm;
    }
    out.push_back(psor_solve(P, o));
  }
  return out;
}

std::vector<SolveResult> solve_cascade(
    const std::function<ThinObstacleProblem(const GridSpec&)>& build, const GridSpec& base,
    int levels, const SolverOptions& options) {
  if (levels < 1) throw DomainError("cascade needs at least one level");
  std::vector<GridSpec> grids{base};
  for (int l = 1; l < levels; ++l) grids.push_back(grids.back().refined());
  return solve_sequence(build, grids, options);
}

GridSpec convergence_grid(int n, double half_width, int nx0, double height, double ratio0,
                          double y_first0, int level) {
  if (level < 0 || nx0 < 3) throw DomainError("convergence_grid: bad level or base size");
  const int nx = (nx0 - 1) * (1 << level) + 1;
  const double hx = 2.0 * half_width / (nx - 1);
  const double ratio = 1.0 + (ratio0 - 1.0) * std::pow(0.5, level);
  const double y_first = y_first0 * std::pow(0.5, level);
  return GridSpec::graded(n, half_width, nx, height, hx, ratio, y_first);
}

BoundaryData enclosing_boundary(const SolveResult& outer) {
  if (outer.mode != CoordinateMode::extension)
    throw DomainError("enclosing boundary needs an extension-mode solve");
  std::shared_ptr<const GridField> f = outer.field;
  return [f](const Point& p) { return f->value(p); };
}

double x1_symmetry_defect(const GridField& f) {
  const GridSpec& g = f.spec();
  double d = 0.0;
  const int n2 = columns_i2(g);
  for (int i2 = 0; i2 < n2; ++i2)
    for (int i1 = 0; i1 < g.nx(); ++i1)
      for (int j = 0; j < g.ny(); ++j)
        d = std::max(d, std::abs(f.node(i1, i2, j) - f.node(g.nx() - 1 - i1, i2, j)));
  return d;
}

ModeCrosscheck coordinate_mode_crosscheck(const ThinObstacleProblem& problem,
                                          const SolverOptions& options) {
  if (problem.mode != CoordinateMode::extension)
    throw DomainError("crosscheck starts from an extension-mode problem");
  ModeCrosscheck out;
  out.extension = psor_solve(problem, options);

  ThinObstacleProblem G = problem;
  G.mode = CoordinateMode::grushin;
  std::vector<double> z;
  for (double y : problem.grid.y_nodes()) z.push_back(h_transform(y, problem.params));
  G.grid = GridSpec(problem.grid.n(), problem.grid.half_width(), problem.grid.nx(), z);
  out.grushin = psor_solve(G, options);

  const GridField back = from_grushin(*out.grushin.field, problem.params);
  const auto& ue = out.extension.field->values();
  const auto& ug = back.values();
  for (std::size_t i = 0; i < ue.size(); ++i)
    out.sup_discrepancy = std::max(out.sup_discrepancy, std::abs(ue[i] - ug[i]));
  out.h = problem.grid.h_max();
  return out;
}

}  // namespace fraclab
