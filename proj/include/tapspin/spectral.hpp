#pragma once

// Eigenvalue laws of the coupling matrix and their free-probability
// transforms: Cauchy transform G, its inverse, and the R-transform
// R(w) = G^{-1}(w) - 1/w on the real axis to the right of the support.

#include <cstddef>
#include <limits>
#include <vector>

namespace tapspin {

enum class SpectralKind { semicircle, two_point, empirical };

struct Atom {
  double location;
  double weight;
};

// A compactly supported law with positive variance.
//
//  * semicircle(c, s): density on [c - 2s, c + 2s], variance s^2.
//  * two_point(c, s): atoms at c - s and c + s with weight 1/2 each.
//  * empirical: finitely many atoms with nonnegative weights summing to 1.
//
// Semicircle and two-point laws carry closed-form transforms; empirical
// laws are always evaluated numerically from their atoms.
class SpectralLaw {
 public:
  static SpectralLaw semicircle(double center = 0.0, double scale = 1.0);
  static SpectralLaw two_point(double center = 0.0, double half_gap = 1.0);
  static SpectralLaw empirical(std::vector<Atom> atoms);

  // Equal-weight atoms at the quantiles F^{-1}((i - 1/2) / n).
  static SpectralLaw quantile_discretization(const SpectralLaw& law,
                                             std::size_t n);

  SpectralKind kind() const { return kind_; }
  // Atoms of the law; empty for the semicircle.
  const std::vector<Atom>& atoms() const { return atoms_; }
  double center() const { return center_; }
  double scale() const { return scale_; }

  double mean() const;
  double variance() const;
  double d_plus() const;
  double d_minus() const;

  // G(d_plus^+): finite for the semicircle, +inf for atomic laws.
  double cauchy_edge() const;

  // Law of a + b X for X with this law (b > 0).
  SpectralLaw affine(double shift, double factor) const;

  // Quantile function F^{-1}(p) for p in (0, 1).
  double quantile(double p) const;

 private:
  SpectralLaw(SpectralKind kind, double center, double scale,
              std::vector<Atom> atoms);

  SpectralKind kind_;
  double center_ = 0.0;
  double scale_ = 1.0;
  std::vector<Atom> atoms_;
};

// Shift and scale to mean 0, variance 1. Throws DegenerateLawError on zero
// variance.
SpectralLaw standardize(const SpectralLaw& law);

// G(z) = E[1 / (z - X)], z > d_plus.
double cauchy_transform(const SpectralLaw& law, double z);
// G'(z) = -E[1 / (z - X)^2], z > d_plus.
double cauchy_transform_derivative(const SpectralLaw& law, double z);
// z > d_plus with G(z) = w, for 0 < w < G(d_plus^+).
double cauchy_inverse(const SpectralLaw& law, double w);
// R(w) = G^{-1}(w) - 1/w for 0 <= w < G(d_plus^+); R(0) is the mean.
double r_transform(const SpectralLaw& law, double w);
double r_transform_derivative(const SpectralLaw& law, double w);
// int_0^a R(w) dw.
double r_integral(const SpectralLaw& law, double a);

// The law of beta * X, with transforms expressed through the base law:
// Gbar(z) = G(z / beta) / beta and Rbar(w) = beta R(beta w).
class RescaledLaw {
 public:
  RescaledLaw(SpectralLaw base, double beta);

  const SpectralLaw& base() const { return base_; }
  double beta() const { return beta_; }
  double d_plus_bar() const { return beta_ * base_.d_plus(); }
  // Gbar(dbar_plus^+) = G(d_plus^+) / beta.
  double cauchy_edge() const { return base_.cauchy_edge() / beta_; }

  double cauchy(double z) const;
  double cauchy_inverse(double w) const;
  double r(double w) const;
  double r_derivative(double w) const;
  double r_integral(double a) const;

 private:
  SpectralLaw base_;
  double beta_;
};

}  // namespace tapspin
