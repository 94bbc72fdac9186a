#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fraclab {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation (y < 0, s outside (0,1), ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A quadrature ball or stencil leaves the computational box.
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// A quantity is undefined at the requested point (zero height, singular weight, ...).
class UndefinedError : public Error {
 public:
  using Error::Error;
};

/// The exponent family attached to one fractional order s in dimension n.
struct WeightParams {
  double s = 0.5;
  double a = 0.0;
  double alpha = 0.0;
  int n = 1;
  double Q = 2.0;
  double Qtilde = 2.0;

  static WeightParams from_s(double s, int n);
  /// Build from the Grushin exponent alpha > -1/2.
  static WeightParams from_alpha(double alpha, int n);
};

double h_transform(double y, const WeightParams& p);
double h_inverse(double z, const WeightParams& p);
/// h'(y) = (1-a)^a y^{-a}, the Jacobian of (x, y) -> (x, h(y)).
double jacobian_weight(double y, const WeightParams& p);
double gamma_ns(int n, double s);

/// Tensor grid over [-L, L]^n x [0, Y]. The x-axes are uniform and share one node count.
class GridSpec {
 public:
  GridSpec(int n, double half_width, int nx, std::vector<double> y_nodes);

  /// Uniform y spacing with ny nodes on [0, Y].
  static GridSpec uniform(int n, double half_width, int nx, double height, int ny);
  /// y-nodes graded geometrically toward 0: spacing grows by `ratio` from `y_first`
  /// until it reaches `hy_max`, then stays uniform up to `height`.
  static GridSpec graded(int n, double half_width, int nx, double height, double hy_max,
                         double ratio = 1.15, double y_first = 1e-3);

  /// Halves hx and inserts the midpoint of every y-interval, so nodes are nested.
  GridSpec refined() const;

  int n() const { return n_; }
  double half_width() const { return L_; }
  double height() const { return y_.back(); }
  double hx() const { return hx_; }
  int nx() const { return nx_; }
  int ny() const { return static_cast<int>(y_.size()); }
  const std::vector<double>& y_nodes() const { return y_; }
  double x_node(int i) const { return -L_ + hx_ * i; }
  /// Number of thin (y = 0) nodes, nx^n.
  std::size_t thin_size() const;
  std::size_t size() const { return thin_size() * y_.size(); }
  /// Linear index; j (the y index) runs fastest so that columns are contiguous.
  std::size_t index(int i1, int i2, int j) const {
    return (static_cast<std::size_t>(i2) * nx_ + i1) * y_.size() + j;
  }
  std::size_t thin_index(int i1, int i2) const { return static_cast<std::size_t>(i2) * nx_ + i1; }
  /// Smallest spacing in either direction.
  double h_min() const;
  double h_max() const;
  bool even_reflection() const { return true; }

 private:
  int n_;
  double L_;
  int nx_;
  double hx_;
  std::vector<double> y_;
};

/// Point in the upper half-space: x in R^n (n <= 3 stored inline) and y.
struct Point {
  std::array<double, 3> x{0.0, 0.0, 0.0};
  double y = 0.0;
};

/// Read-only scalar field on R^n x R, even in y.
class ScalarField {
 public:
  virtual ~ScalarField() = default;
  virtual int dim() const = 0;
  virtual double value(const Point& p) const = 0;
  /// Gradient (d/dx_1, ..., d/dx_n, d/dy) written to g[0..n].
  virtual void gradient(const Point& p, std::span<double> g) const = 0;
  /// False when the closed ball around x0 is not covered by the data.
  virtual bool covers_ball(std::span<const double> x0, double r) const {
    (void)x0;
    (void)r;
    return true;
  }
};

/// Samples on a GridSpec, evaluated by tensor cubic Lagrange interpolation.
/// Values at y < 0 follow from even reflection.
class GridField final : public ScalarField {
 public:
  GridField(GridSpec spec, std::vector<double> values);

  const GridSpec& spec() const { return spec_; }
  const std::vector<double>& values() const { return values_; }
  double node(int i1, int i2, int j) const { return values_[spec_.index(i1, i2, j)]; }

  std::optional<std::vector<std::uint8_t>> contact_mask;
  std::optional<std::vector<double>> neumann_trace;

  int dim() const override { return spec_.n(); }
  double value(const Point& p) const override;
  void gradient(const Point& p, std::span<double> g) const override;
  bool covers_ball(std::span<const double> x0, double r) const override;

  /// CSV with columns x..., y, value. Lines starting with '#' are comments.
  void write_csv(const std::string& path, const std::string& header_comment) const;
  /// Reads values written by write_csv onto a known spec, node order must match.
  static GridField read_csv(const GridSpec& spec, const std::string& path);

 private:
  void eval(const Point& p, double* value, std::span<double> grad) const;

  GridSpec spec_;
  std::vector<double> values_;
};

/// A multi-index beta in N^n.
using MultiIndex = std::vector<int>;

/// Obstacle phi on R^n of class C^{k,gamma}.
class ObstacleSpec {
 public:
  enum class Kind { polynomial, callable };
  /// Returns d^beta phi(x).
  using DerivativeOracle = std::function<double(std::span<const double> x, const MultiIndex& beta)>;

  static ObstacleSpec polynomial(int n, std::map<MultiIndex, double> coefficients, int k,
                                 double gamma);
  /// `max_order` is the highest derivative order the oracle supports.
  static ObstacleSpec callable(int n, DerivativeOracle oracle, int max_order, int k, double gamma,
                               std::string name = "callable");
  /// sin(x_1), used as the reference non-polynomial obstacle.
  static ObstacleSpec sine(int n, int k, double gamma);

  Kind kind() const { return kind_; }
  int n() const { return n_; }
  int k() const { return k_; }
  double gamma() const { return gamma_; }
  int max_order() const { return max_order_; }
  const std::string& name() const { return name_; }
  const std::map<MultiIndex, double>& coefficients() const { return coef_; }

  double value(std::span<const double> x) const;
  double derivative(std::span<const double> x, const MultiIndex& beta) const;

  /// Compares first derivatives with central differences at deterministic sample points.
  /// Returns the worst relative mismatch.
  double oracle_consistency(int samples = 16) const;

 private:
  ObstacleSpec() = default;
  Kind kind_ = Kind::polynomial;
  int n_ = 1;
  int k_ = 2;
  double gamma_ = 0.5;
  int max_order_ = 0;
  std::string name_;
  std::map<MultiIndex, double> coef_;
  DerivativeOracle oracle_;
};

std::string format_multi_index(const MultiIndex& beta);
MultiIndex parse_multi_index(const std::string& key);

}  // namespace fraclab
