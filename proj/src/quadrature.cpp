#include "fraclab/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>

namespace fraclab {

Rule1D gauss_jacobi(int m, double alpha, double beta) {
  if (m < 1) throw DomainError("quadrature needs at least one node");
  if (!(alpha > -1.0 && beta > -1.0)) throw DomainError("Jacobi exponents must exceed -1");
  const double ab = alpha + beta;
  Eigen::VectorXd diag(m), off(std::max(m - 1, 1));
  diag(0) = (beta - alpha) / (ab + 2.0);
  for (int k = 1; k < m; ++k) {
    const double t = 2.0 * k + ab;
    diag(k) = (beta * beta - alpha * alpha) / (t * (t + 2.0));
    off(k - 1) = std::sqrt(4.0 * k * (k + alpha) * (k + beta) * (k + ab) /
                           (t * t * (t + 1.0) * (t - 1.0)));
  }
  Rule1D r;
  r.nodes.resize(m);
  r.weights.resize(m);
  const double mu0 = std::exp((ab + 1.0) * std::log(2.0) + std::lgamma(alpha + 1.0) +
                              std::lgamma(beta + 1.0) - std::lgamma(ab + 2.0));
  if (m == 1) {
    r.nodes[0] = diag(0);
    r.weights[0] = mu0;
    return r;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, off.head(m - 1), Eigen::ComputeEigenvectors);
  for (int i = 0; i < m; ++i) {
    r.nodes[i] = es.eigenvalues()(i);
    const double v0 = es.eigenvectors()(0, i);
    r.weights[i] = mu0 * v0 * v0;
  }
  return r;
}

Rule1D gauss_legendre(int m) { return gauss_jacobi(m, 0.0, 0.0); }

Rule1D gauss_jacobi_interval(int m, double e, double L) {
  Rule1D r = gauss_jacobi(m, 0.0, e);
  const double half = 0.5 * L;
  const double wscale = std::pow(half, 1.0 + e);
  for (int i = 0; i < m; ++i) {
    r.nodes[i] = half * (1.0 + r.nodes[i]);
    r.weights[i] *= wscale;
  }
  return r;
}

double weighted_sphere_measure(int n, double e) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * n) *
         std::exp(std::lgamma(0.5 * (e + 1.0)) - std::lgamma(0.5 * (n + e + 1.0)));
}

SphereRule::SphereRule(int n, double e, int n_polar, int n_azimuth) : n_(n), e_(e) {
  if (n < 1 || n > 2) throw DomainError("sphere rules support n in {1,2}");
  if (!(e > -1.0)) throw DomainError("sphere weight exponent must exceed -1");
  const double half_pi = 0.5 * std::numbers::pi;
  const Rule1D polar = gauss_jacobi_interval(n_polar, e, half_pi);
  for (int k = 0; k < n_polar; ++k) {
    const double sigma = polar.nodes[k];
    const double cs = std::cos(sigma), sn = std::sin(sigma);
    // (sin sigma)^e = sigma^e (sin sigma / sigma)^e, the first factor lives in the rule.
    const double w = polar.weights[k] * std::pow(sn / sigma, e) * std::pow(cs, n - 1);
    if (n == 1) {
      for (double sgn : {1.0, -1.0}) {
        Node nd;
        nd.dir.x[0] = sgn * cs;
        nd.dir.y = sn;
        nd.w = w;
        nodes_.push_back(nd);
      }
    } else {
      const double dphi = 2.0 * std::numbers::pi / n_azimuth;
      for (int q = 0; q < n_azimuth; ++q) {
        const double phi = (q + 0.5) * dphi;
        Node nd;
        nd.dir.x[0] = cs * std::cos(phi);
        nd.dir.x[1] = cs * std::sin(phi);
        nd.dir.y = sn;
        nd.w = w * dphi;
        nodes_.push_back(nd);
      }
    }
  }
}

double SphereRule::scale(double r) const { return std::pow(r, n_ + e_); }

}  // namespace fraclab
