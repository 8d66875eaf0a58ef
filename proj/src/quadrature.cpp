#include "tapspin/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

#include "tapspin/errors.hpp"

namespace tapspin {

namespace {

// Orthonormal Hermite polynomials for the N(0,1) weight:
// p_{k+1}(x) = (x p_k(x) - sqrt(k) p_{k-1}(x)) / sqrt(k+1).
// Returns p_n(x), p_{n-1}(x) and sum_{k<n} p_k(x)^2.
struct HermiteEval {
  double pn, pnm1, sumsq;
};

HermiteEval eval_hermite(std::size_t n, double x) {
  double pm1 = 0.0, p = 1.0, sumsq = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sumsq += p * p;
    const double next =
        (x * p - std::sqrt(static_cast<double>(k)) * pm1) /
        std::sqrt(static_cast<double>(k + 1));
    pm1 = p;
    p = next;
  }
  return {p, pm1, sumsq};
}

}  // namespace

GaussRule gauss_hermite_normal(std::size_t order) {
  if (order == 0) throw DomainError("gauss_hermite_normal: order must be >= 1");
  const auto n = static_cast<Eigen::Index>(order);
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub(n > 1 ? n - 1 : 0);
  for (Eigen::Index k = 0; k + 1 < n; ++k) sub[k] = std::sqrt(double(k + 1));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
  eig.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success)
    throw NumericalError("gauss_hermite_normal: eigen solver failed");

  GaussRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  for (std::size_t i = 0; i < order; ++i) {
    double x = eig.eigenvalues()[static_cast<Eigen::Index>(i)];
    // p_n'(x) = sqrt(n) p_{n-1}(x) for this normalization.
    for (int it = 0; it < 4; ++it) {
      const auto h = eval_hermite(order, x);
      const double d = std::sqrt(double(order)) * h.pnm1;
      if (d == 0.0) break;
      x -= h.pn / d;
    }
    rule.nodes[i] = x;
    rule.weights[i] = 1.0 / eval_hermite(order, x).sumsq;
  }
  // Symmetrize to remove round-off asymmetry.
  for (std::size_t i = 0, j = order - 1; i < j; ++i, --j) {
    const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
    rule.nodes[i] = -x;
    rule.nodes[j] = x;
    rule.weights[i] = rule.weights[j] = w;
  }
  if (order % 2 == 1) rule.nodes[order / 2] = 0.0;
  return rule;
}

const GaussRule& standard_gauss_hermite() {
  static const GaussRule rule = gauss_hermite_normal(61);
  return rule;
}

double integrate_adaptive(const std::function<double(double)>& f, double a,
                          double b, double abs_tol) {
  if (a == b) return 0.0;
  using boost::math::quadrature::gauss_kronrod;
  double err = 0.0;
  const double scale = std::abs(b - a);
  const double value = gauss_kronrod<double, 31>::integrate(
      f, a, b, 15, abs_tol / std::max(1.0, scale), &err);
  return value;
}

}  // namespace tapspin
