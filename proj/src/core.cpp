#include "fraclab/core.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace fraclab {

WeightParams WeightParams::from_s(double s, int n) {
  if (!(s > 0.0 && s < 1.0)) throw DomainError("s must lie in (0,1)");
  if (n < 1) throw DomainError("dimension n must be positive");
  WeightParams p;
  p.s = s;
  p.a = 1.0 - 2.0 * s;
  p.alpha = p.a / (1.0 - p.a);
  p.n = n;
  p.Q = 1.0 + n / (1.0 - p.a);
  p.Qtilde = n + 1.0 + p.a;
  return p;
}

WeightParams WeightParams::from_alpha(double alpha, int n) {
  if (!(alpha > -0.5)) throw DomainError("alpha must exceed -1/2");
  // alpha = (1-2s)/(2s)  <=>  s = 1/(2(alpha+1))
  WeightParams p = from_s(0.5 / (alpha + 1.0), n);
  p.alpha = alpha;
  return p;
}

double h_transform(double y, const WeightParams& p) {
  if (y < 0.0) throw DomainError("h_transform requires y >= 0");
  if (y == 0.0) return 0.0;
  return std::pow(y / (1.0 - p.a), 1.0 - p.a);
}

double h_inverse(double z, const WeightParams& p) {
  if (z < 0.0) throw DomainError("h_inverse requires z >= 0");
  if (z == 0.0) return 0.0;
  return (1.0 - p.a) * std::pow(z, 1.0 / (1.0 - p.a));
}

double jacobian_weight(double y, const WeightParams& p) {
  if (y < 0.0) throw DomainError("jacobian_weight requires y >= 0");
  if (y == 0.0) {
    if (p.a > 0.0) throw UndefinedError("jacobian weight is singular at y = 0 for a > 0");
    return p.a == 0.0 ? 1.0 : 0.0;
  }
  return std::pow(1.0 - p.a, p.a) * std::pow(y, -p.a);
}

double gamma_ns(int n, double s) {
  if (!(s > 0.0 && s < 1.0)) throw DomainError("s must lie in (0,1)");
  if (n < 1) throw DomainError("dimension n must be positive");
  const double pi = std::numbers::pi;
  return s * std::pow(2.0, 2.0 * s) * std::tgamma(0.5 * n + s) /
         (std::pow(pi, 0.5 * n) * std::tgamma(1.0 - s));
}

// ---------------------------------------------------------------- GridSpec

GridSpec::GridSpec(int n, double half_width, int nx, std::vector<double> y_nodes)
    : n_(n), L_(half_width), nx_(nx), y_(std::move(y_nodes)) {
  if (n != 1 && n != 2) throw DomainError("grids support n in {1,2}");
  if (!(half_width > 0.0)) throw DomainError("half width must be positive");
  if (nx < 8 || y_.size() < 8) throw DomainError("a grid needs at least 8 nodes per axis");
  if (y_.front() != 0.0) throw DomainError("first y-node must be 0");
  for (std::size_t j = 1; j < y_.size(); ++j)
    if (!(y_[j] > y_[j - 1])) throw DomainError("y-nodes must be strictly increasing");
  hx_ = 2.0 * L_ / (nx - 1);
}

GridSpec GridSpec::uniform(int n, double half_width, int nx, double height, int ny) {
  std::vector<double> y(ny);
  for (int j = 0; j < ny; ++j) y[j] = height * j / (ny - 1);
  return GridSpec(n, half_width, nx, std::move(y));
}

GridSpec GridSpec::graded(int n, double half_width, int nx, double height, double hy_max,
                          double ratio, double y_first) {
  if (!(ratio >= 1.0) || !(y_first > 0.0) || !(hy_max >= y_first) || !(height > y_first))
    throw DomainError("invalid grading parameters");
  std::vector<double> d;
  double total = 0.0, step = y_first;
  while (total < height) {
    d.push_back(step);
    total += step;
    step = std::min(step * ratio, hy_max);
  }
  // Drop a sliver at the top and absorb the mismatch by a uniform stretch.
  if (d.size() > 1 && total - height > 0.5 * d.back()) {
    total -= d.back();
    d.pop_back();
  }
  std::vector<double> y{0.0};
  double acc = 0.0;
  for (double di : d) {
    acc += di * height / total;
    y.push_back(acc);
  }
  y.back() = height;
  return GridSpec(n, half_width, nx, std::move(y));
}

GridSpec GridSpec::refined() const {
  std::vector<double> y;
  y.reserve(2 * y_.size() - 1);
  for (std::size_t j = 0; j + 1 < y_.size(); ++j) {
    y.push_back(y_[j]);
    y.push_back(0.5 * (y_[j] + y_[j + 1]));
  }
  y.push_back(y_.back());
  return GridSpec(n_, L_, 2 * nx_ - 1, std::move(y));
}

std::size_t GridSpec::thin_size() const {
  return n_ == 1 ? static_cast<std::size_t>(nx_) : static_cast<std::size_t>(nx_) * nx_;
}

double GridSpec::h_min() const {
  double h = hx_;
  for (std::size_t j = 1; j < y_.size(); ++j) h = std::min(h, y_[j] - y_[j - 1]);
  return h;
}

double GridSpec::h_max() const {
  double h = hx_;
  for (std::size_t j = 1; j < y_.size(); ++j) h = std::max(h, y_[j] - y_[j - 1]);
  return h;
}

// --------------------------------------------------------------- GridField

namespace {

/// Cubic Lagrange weights and their derivatives at t for the nodes t0..t3.
void lagrange4(const double* t, double q, double* w, double* dw) {
  for (int i = 0; i < 4; ++i) {
    double num = 1.0, den = 1.0, dnum = 0.0;
    for (int j = 0; j < 4; ++j) {
      if (j == i) continue;
      den *= t[i] - t[j];
    }
    for (int j = 0; j < 4; ++j) {
      if (j == i) continue;
      num *= q - t[j];
      double prod = 1.0;
      for (int k = 0; k < 4; ++k)
        if (k != i && k != j) prod *= q - t[k];
      dnum += prod;
    }
    w[i] = num / den;
    dw[i] = dnum / den;
  }
}

struct Stencil1D {
  int idx[4];
  double w[4];
  double dw[4];
};

Stencil1D x_stencil(const GridSpec& g, double x) {
  Stencil1D s;
  const double t = (x + g.half_width()) / g.hx();
  int i0 = static_cast<int>(std::floor(t));
  i0 = std::clamp(i0, 1, g.nx() - 3);
  double nodes[4];
  for (int k = 0; k < 4; ++k) {
    s.idx[k] = i0 - 1 + k;
    nodes[k] = static_cast<double>(s.idx[k]);
  }
  lagrange4(nodes, t, s.w, s.dw);
  for (double& d : s.dw) d /= g.hx();
  return s;
}

// One-sided near y = 0. Fields with a nonzero Neumann trace have a kink at y = 0 in their
// even extension, so a stencil that straddles the thin set would smear it into the first cell.
Stencil1D y_stencil(const GridSpec& g, double yq) {
  const auto& y = g.y_nodes();
  const int ny = g.ny();
  int j = static_cast<int>(std::upper_bound(y.begin(), y.end(), yq) - y.begin()) - 1;
  j = std::clamp(j, 0, ny - 2);
  const int j0 = std::clamp(j - 1, 0, ny - 4);
  Stencil1D s;
  double nodes[4];
  for (int k = 0; k < 4; ++k) {
    nodes[k] = y[j0 + k];
    s.idx[k] = j0 + k;
  }
  lagrange4(nodes, yq, s.w, s.dw);
  return s;
}

}  // namespace

GridField::GridField(GridSpec spec, std::vector<double> values)
    : spec_(std::move(spec)), values_(std::move(values)) {
  if (values_.size() != spec_.size()) throw DomainError("value array does not match the grid");
  for (double v : values_)
    if (!std::isfinite(v)) throw DomainError("grid values must be finite");
}

void GridField::eval(const Point& p, double* value, std::span<double> grad) const {
  const double yq = std::abs(p.y);
  const double ysign = p.y > 0.0 ? 1.0 : (p.y < 0.0 ? -1.0 : 0.0);
  const Stencil1D sy = y_stencil(spec_, yq);
  const Stencil1D s1 = x_stencil(spec_, p.x[0]);
  const bool want_grad = !grad.empty();
  if (spec_.n() == 1) {
    double v = 0.0, gx = 0.0, gy = 0.0;
    for (int a = 0; a < 4; ++a) {
      const double* col = &values_[spec_.index(s1.idx[a], 0, 0)];
      double cv = 0.0, cd = 0.0;
      for (int b = 0; b < 4; ++b) {
        cv += sy.w[b] * col[sy.idx[b]];
        cd += sy.dw[b] * col[sy.idx[b]];
      }
      v += s1.w[a] * cv;
      gx += s1.dw[a] * cv;
      gy += s1.w[a] * cd;
    }
    if (value) *value = v;
    if (want_grad) {
      grad[0] = gx;
      grad[1] = ysign * gy;
    }
    return;
  }
  const Stencil1D s2 = x_stencil(spec_, p.x[1]);
  double v = 0.0, g1 = 0.0, g2 = 0.0, gy = 0.0;
  for (int c = 0; c < 4; ++c) {
    for (int a = 0; a < 4; ++a) {
      const double* col = &values_[spec_.index(s1.idx[a], s2.idx[c], 0)];
      double cv = 0.0, cd = 0.0;
      for (int b = 0; b < 4; ++b) {
        cv += sy.w[b] * col[sy.idx[b]];
        cd += sy.dw[b] * col[sy.idx[b]];
      }
      v += s1.w[a] * s2.w[c] * cv;
      if (want_grad) {
        g1 += s1.dw[a] * s2.w[c] * cv;
        g2 += s1.w[a] * s2.dw[c] * cv;
        gy += s1.w[a] * s2.w[c] * cd;
      }
    }
  }
  if (value) *value = v;
  if (want_grad) {
    grad[0] = g1;
    grad[1] = g2;
    grad[2] = ysign * gy;
  }
}

double GridField::value(const Point& p) const {
  double v = 0.0;
  eval(p, &v, {});
  return v;
}

void GridField::gradient(const Point& p, std::span<double> g) const { eval(p, nullptr, g); }

bool GridField::covers_ball(std::span<const double> x0, double r) const {
  const double slack = 1e-12 * spec_.half_width();
  for (int i = 0; i < spec_.n(); ++i)
    if (std::abs(x0[i]) + r > spec_.half_width() + slack) return false;
  return r <= spec_.height() + slack;
}

void GridField::write_csv(const std::string& path, const std::string& header_comment) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  std::istringstream hc(header_comment);
  for (std::string line; std::getline(hc, line);) out << "# " << line << '\n';
  out << (spec_.n() == 1 ? "x1,y,value\n" : "x1,x2,y,value\n");
  char buf[128];
  const int n2 = spec_.n() == 2 ? spec_.nx() : 1;
  for (int i2 = 0; i2 < n2; ++i2)
    for (int i1 = 0; i1 < spec_.nx(); ++i1)
      for (int j = 0; j < spec_.ny(); ++j) {
        if (spec_.n() == 1)
          std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", spec_.x_node(i1),
                        spec_.y_nodes()[j], node(i1, i2, j));
        else
          std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", spec_.x_node(i1),
                        spec_.x_node(i2), spec_.y_nodes()[j], node(i1, i2, j));
        out << buf;
      }
}

GridField GridField::read_csv(const GridSpec& spec, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::vector<double> vals;
  vals.reserve(spec.size());
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    const auto pos = line.find_last_of(',');
    vals.push_back(std::stod(line.substr(pos + 1)));
  }
  if (vals.size() != spec.size()) throw Error(path + ": node count does not match the grid");
  return GridField(spec, std::move(vals));
}

// ------------------------------------------------------------ ObstacleSpec

namespace {

double monomial_derivative(std::span<const double> x, const MultiIndex& power,
                           const MultiIndex& beta) {
  double v = 1.0;
  for (std::size_t i = 0; i < power.size(); ++i) {
    const int b = i < beta.size() ? beta[i] : 0;
    if (b > power[i]) return 0.0;
    double f = 1.0;
    for (int t = 0; t < b; ++t) f *= power[i] - t;
    v *= f * std::pow(x[i], power[i] - b);
  }
  return v;
}

}  // namespace

ObstacleSpec ObstacleSpec::polynomial(int n, std::map<MultiIndex, double> coefficients, int k,
                                      double gamma) {
  if (k < 0 || !(gamma > 0.0 && gamma < 1.0)) throw DomainError("invalid obstacle smoothness");
  for (const auto& [beta, c] : coefficients) {
    if (static_cast<int>(beta.size()) != n) throw DomainError("multi-index length must equal n");
    for (int b : beta)
      if (b < 0) throw DomainError("negative exponent in obstacle");
    if (!std::isfinite(c)) throw DomainError("non-finite obstacle coefficient");
  }
  ObstacleSpec o;
  o.kind_ = Kind::polynomial;
  o.n_ = n;
  o.k_ = k;
  o.gamma_ = gamma;
  o.max_order_ = 1 << 20;
  o.name_ = "polynomial";
  o.coef_ = std::move(coefficients);
  return o;
}

ObstacleSpec ObstacleSpec::callable(int n, DerivativeOracle oracle, int max_order, int k,
                                    double gamma, std::string name) {
  if (k < 0 || !(gamma > 0.0 && gamma < 1.0)) throw DomainError("invalid obstacle smoothness");
  ObstacleSpec o;
  o.kind_ = Kind::callable;
  o.n_ = n;
  o.k_ = k;
  o.gamma_ = gamma;
  o.max_order_ = max_order;
  o.name_ = std::move(name);
  o.oracle_ = std::move(oracle);
  if (max_order >= 1 && o.oracle_consistency() > 1e-4)
    throw DomainError("derivative oracle inconsistent with obstacle values");
  return o;
}

ObstacleSpec ObstacleSpec::sine(int n, int k, double gamma) {
  auto oracle = [](std::span<const double> x, const MultiIndex& beta) {
    for (std::size_t i = 1; i < beta.size(); ++i)
      if (beta[i] != 0) return 0.0;
    switch (beta.empty() ? 0 : beta[0] % 4) {
      case 0: return std::sin(x[0]);
      case 1: return std::cos(x[0]);
      case 2: return -std::sin(x[0]);
      default: return -std::cos(x[0]);
    }
  };
  return callable(n, oracle, 1 << 20, k, gamma, "sine");
}

double ObstacleSpec::value(std::span<const double> x) const {
  return derivative(x, MultiIndex(n_, 0));
}

double ObstacleSpec::derivative(std::span<const double> x, const MultiIndex& beta) const {
  int order = 0;
  for (int b : beta) order += b;
  if (order > max_order_) throw DomainError("obstacle derivative of order beyond the oracle");
  if (kind_ == Kind::callable) return oracle_(x, beta);
  double v = 0.0;
  for (const auto& [power, c] : coef_) v += c * monomial_derivative(x, power, beta);
  return v;
}

double ObstacleSpec::oracle_consistency(int samples) const {
  double worst = 0.0;
  const double eps = 1e-5;
  std::vector<double> x(n_), xp(n_), xm(n_);
  for (int sidx = 0; sidx < samples; ++sidx) {
    for (int i = 0; i < n_; ++i) x[i] = std::sin(1.7 * sidx + 2.3 * i + 0.4);
    for (int i = 0; i < n_; ++i) {
      xp = x;
      xm = x;
      xp[i] += eps;
      xm[i] -= eps;
      const double fd = (value(xp) - value(xm)) / (2.0 * eps);
      MultiIndex e(n_, 0);
      e[i] = 1;
      const double d = derivative(x, e);
      worst = std::max(worst, std::abs(fd - d) / std::max(1.0, std::abs(d)));
    }
  }
  return worst;
}

std::string format_multi_index(const MultiIndex& beta) {
  std::string s;
  for (std::size_t i = 0; i < beta.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(beta[i]);
  }
  return s;
}

MultiIndex parse_multi_index(const std::string& key) {
  MultiIndex beta;
  std::stringstream ss(key);
  for (std::string part; std::getline(ss, part, ',');) {
    std::size_t used = 0;
    const int v = std::stoi(part, &used);
    if (v < 0) throw DomainError("negative entry in multi-index '" + key + "'");
    beta.push_back(v);
  }
  if (beta.empty()) throw DomainError("empty multi-index");
  return beta;
}

}  // namespace fraclab
