#pragma once

#include <functional>
#include <vector>

#include "tapspin/rng.hpp"
#include "tapspin/spectral.hpp"

namespace tapspin {

enum class FieldKind { constant, gaussian, empirical };

// Law of the external field entries. All kinds have finite moments of every
// order.
class FieldLaw {
 public:
  static FieldLaw constant(double value);
  static FieldLaw gaussian(double mean, double sd);
  static FieldLaw empirical(std::vector<Atom> atoms);

  FieldKind kind() const { return kind_; }
  double mean() const;
  double sd() const { return sd_; }
  double value() const { return mean_; }
  const std::vector<Atom>& atoms() const { return atoms_; }

  // Identically zero field (constant 0, or a point mass at 0).
  bool is_zero() const;

  double quantile(double p) const;
  double sample(Rng& rng) const;

 private:
  FieldKind kind_ = FieldKind::constant;
  double mean_ = 0.0;
  double sd_ = 0.0;
  std::vector<Atom> atoms_;
};

// E[f(H, sigma * G)] with H ~ field and G ~ N(0,1) independent. The Gaussian
// direction uses 61-node Gauss-Hermite; atomic fields are summed exactly and
// Gaussian fields get their own Gauss-Hermite axis.
double gauss_field_expectation(const std::function<double(double, double)>& f,
                               const FieldLaw& field, double sigma);

}  // namespace tapspin
