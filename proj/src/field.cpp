#include "tapspin/field.hpp"

#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <random>

#include "tapspin/errors.hpp"
#include "tapspin/quadrature.hpp"

namespace tapspin {

FieldLaw FieldLaw::constant(double value) {
  if (!std::isfinite(value)) throw DomainError("constant field: not finite");
  FieldLaw f;
  f.kind_ = FieldKind::constant;
  f.mean_ = value;
  return f;
}

FieldLaw FieldLaw::gaussian(double mean, double sd) {
  if (!std::isfinite(mean) || !(sd >= 0.0) || !std::isfinite(sd))
    throw DomainError("gaussian field: need finite mean and sd >= 0");
  FieldLaw f;
  f.kind_ = FieldKind::gaussian;
  f.mean_ = mean;
  f.sd_ = sd;
  return f;
}

FieldLaw FieldLaw::empirical(std::vector<Atom> atoms) {
  // Reuse the validation and ordering of empirical spectral laws.
  const auto law = SpectralLaw::empirical(std::move(atoms));
  FieldLaw f;
  f.kind_ = FieldKind::empirical;
  f.atoms_ = law.atoms();
  f.mean_ = law.mean();
  f.sd_ = std::sqrt(law.variance());
  return f;
}

double FieldLaw::mean() const { return mean_; }

bool FieldLaw::is_zero() const {
  switch (kind_) {
    case FieldKind::constant:
      return mean_ == 0.0;
    case FieldKind::gaussian:
      return mean_ == 0.0 && sd_ == 0.0;
    case FieldKind::empirical:
      return atoms_.size() == 1 && atoms_.front().location == 0.0;
  }
  return false;
}

double FieldLaw::quantile(double p) const {
  if (!(p > 0.0 && p < 1.0))
    throw DomainError("field quantile: p must lie in (0, 1)");
  switch (kind_) {
    case FieldKind::constant:
      return mean_;
    case FieldKind::gaussian:
      if (sd_ == 0.0) return mean_;
      return boost::math::quantile(boost::math::normal(mean_, sd_), p);
    case FieldKind::empirical:
      break;
  }
  double cum = 0.0;
  for (const auto& a : atoms_) {
    cum += a.weight;
    if (cum >= p) return a.location;
  }
  return atoms_.back().location;
}

double FieldLaw::sample(Rng& rng) const {
  switch (kind_) {
    case FieldKind::constant:
      return mean_;
    case FieldKind::gaussian:
      return mean_ + sd_ * std::normal_distribution<double>(0.0, 1.0)(rng);
    case FieldKind::empirical:
      break;
  }
  const double u = uniform01(rng);
  double cum = 0.0;
  for (const auto& a : atoms_) {
    cum += a.weight;
    if (u < cum) return a.location;
  }
  return atoms_.back().location;
}

double gauss_field_expectation(const std::function<double(double, double)>& f,
                               const FieldLaw& field, double sigma) {
  if (!(sigma >= 0.0)) throw DomainError("gauss_field_expectation: sigma < 0");
  const GaussRule& rule = standard_gauss_hermite();

  auto over_gaussian = [&](double h) {
    if (sigma == 0.0) return f(h, 0.0);
    double acc = 0.0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k)
      acc += rule.weights[k] * f(h, sigma * rule.nodes[k]);
    return acc;
  };

  switch (field.kind()) {
    case FieldKind::constant:
      return over_gaussian(field.value());
    case FieldKind::gaussian: {
      if (field.sd() == 0.0) return over_gaussian(field.mean());
      double acc = 0.0;
      for (std::size_t k = 0; k < rule.nodes.size(); ++k)
        acc += rule.weights[k] *
               over_gaussian(field.mean() + field.sd() * rule.nodes[k]);
      return acc;
    }
    case FieldKind::empirical:
      break;
  }
  double acc = 0.0;
  for (const auto& a : field.atoms())
    acc += a.weight * over_gaussian(a.location);
  return acc;
}

}  // namespace tapspin
