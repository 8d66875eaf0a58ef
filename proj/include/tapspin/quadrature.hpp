#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace tapspin {

// Quadrature rule for E[f(G)], G ~ N(0,1): sum_i weights[i] * f(nodes[i]).
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Gauss-Hermite rule against the standard normal density with `order` nodes
// (Golub-Welsch, nodes polished by Newton on the orthonormal recurrence).
GaussRule gauss_hermite_normal(std::size_t order);

// The 61-node rule used throughout; built once.
const GaussRule& standard_gauss_hermite();

// Adaptive Gauss-Kronrod integral of f over [a, b].
double integrate_adaptive(const std::function<double(double)>& f, double a,
                          double b, double abs_tol = 1e-10);

}  // namespace tapspin
