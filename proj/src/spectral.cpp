#include "tapspin/spectral.hpp"

#include <algorithm>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <numbers>
#include <string>

#include "tapspin/errors.hpp"
#include "tapspin/quadrature.hpp"

namespace tapspin {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double semicircle_cdf(double x) {
  // Standard semicircle on [-2, 2].
  if (x <= -2.0) return 0.0;
  if (x >= 2.0) return 1.0;
  return 0.5 + x * std::sqrt(4.0 - x * x) / (4.0 * std::numbers::pi) +
         std::asin(0.5 * x) / std::numbers::pi;
}

void require_above_support(const SpectralLaw& law, double z,
                           const char* what) {
  if (!(z > law.d_plus()))
    throw DomainError(std::string(what) + ": z = " + std::to_string(z) +
                      " is not above the support edge " +
                      std::to_string(law.d_plus()));
}

void require_r_domain(const SpectralLaw& law, double w, const char* what) {
  if (!(w >= 0.0) || !(w < law.cauchy_edge()))
    throw DomainError(std::string(what) + ": w = " + std::to_string(w) +
                      " outside [0, G(d_plus+))");
}

// For atomic laws, R(w) is the root r of
//   psi(r) = sum_i p_i (x_i - r) / (1 + w (r - x_i)),
// which is G(1/w + r) = w rewritten without the 1/w cancellation. psi is
// strictly decreasing on r > d_plus - 1/w and psi(r) = mean - r at w = 0.
double atomic_r(const std::vector<Atom>& atoms, double d_minus, double d_plus,
                double w) {
  auto psi = [&](double r) {
    double s = 0.0;
    for (const auto& a : atoms) {
      const double u = r - a.location;
      s -= a.weight * u / (1.0 + w * u);
    }
    return s;
  };
  double lo = d_minus;
  if (w > 0.0) lo = std::max(lo, d_plus - 1.0 / w);
  double hi = d_plus;
  for (int it = 0; it < 2000; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (psi(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return std::abs(psi(lo)) < std::abs(psi(hi)) ? lo : hi;
}

// Implicit derivative dr/dw = sum p u^2/D^2 / sum p/D^2 with u = r - x,
// D = 1 + w u.
double atomic_r_derivative(const std::vector<Atom>& atoms, double r,
                           double w) {
  double num = 0.0, den = 0.0;
  for (const auto& a : atoms) {
    const double u = r - a.location;
    const double d = 1.0 + w * u;
    const double inv2 = 1.0 / (d * d);
    num += a.weight * u * u * inv2;
    den += a.weight * inv2;
  }
  return num / den;
}

}  // namespace

SpectralLaw::SpectralLaw(SpectralKind kind, double center, double scale,
                         std::vector<Atom> atoms)
    : kind_(kind), center_(center), scale_(scale), atoms_(std::move(atoms)) {}

SpectralLaw SpectralLaw::semicircle(double center, double scale) {
  if (!(scale >= 0.0) || !std::isfinite(center))
    throw DomainError("semicircle: scale must be >= 0");
  return SpectralLaw(SpectralKind::semicircle, center, scale, {});
}

SpectralLaw SpectralLaw::two_point(double center, double half_gap) {
  if (!(half_gap >= 0.0) || !std::isfinite(center))
    throw DomainError("two_point: half gap must be >= 0");
  return SpectralLaw(SpectralKind::two_point, center, half_gap,
                     {{center - half_gap, 0.5}, {center + half_gap, 0.5}});
}

SpectralLaw SpectralLaw::empirical(std::vector<Atom> atoms) {
  double total = 0.0;
  for (const auto& a : atoms) {
    if (!(a.weight >= 0.0) || !std::isfinite(a.location))
      throw DomainError("empirical law: weights must be nonnegative and "
                        "locations finite");
    total += a.weight;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw DomainError("empirical law: weights sum to " +
                      std::to_string(total) + ", expected 1");
  std::erase_if(atoms, [](const Atom& a) { return a.weight == 0.0; });
  if (atoms.empty()) throw DomainError("empirical law: no atoms");
  for (auto& a : atoms) a.weight /= total;
  std::stable_sort(atoms.begin(), atoms.end(),
                   [](const Atom& a, const Atom& b) {
                     return a.location < b.location;
                   });
  return SpectralLaw(SpectralKind::empirical, 0.0, 1.0, std::move(atoms));
}

SpectralLaw SpectralLaw::quantile_discretization(const SpectralLaw& law,
                                                 std::size_t n) {
  if (n == 0) throw DomainError("quantile_discretization: n must be >= 1");
  std::vector<Atom> atoms(n);
  const double w = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    atoms[i] = {law.quantile((static_cast<double>(i) + 0.5) * w), w};
  return empirical(std::move(atoms));
}

double SpectralLaw::mean() const {
  if (kind_ != SpectralKind::empirical) return center_;
  double m = 0.0;
  for (const auto& a : atoms_) m += a.weight * a.location;
  return m;
}

double SpectralLaw::variance() const {
  if (kind_ != SpectralKind::empirical) return scale_ * scale_;
  const double m = mean();
  double v = 0.0;
  for (const auto& a : atoms_) {
    const double d = a.location - m;
    v += a.weight * d * d;
  }
  return v;
}

double SpectralLaw::d_plus() const {
  switch (kind_) {
    case SpectralKind::semicircle:
      return center_ + 2.0 * scale_;
    case SpectralKind::two_point:
      return center_ + scale_;
    case SpectralKind::empirical:
      break;
  }
  return atoms_.back().location;
}

double SpectralLaw::d_minus() const {
  switch (kind_) {
    case SpectralKind::semicircle:
      return center_ - 2.0 * scale_;
    case SpectralKind::two_point:
      return center_ - scale_;
    case SpectralKind::empirical:
      break;
  }
  return atoms_.front().location;
}

double SpectralLaw::cauchy_edge() const {
  if (kind_ == SpectralKind::semicircle)
    return scale_ > 0.0 ? 1.0 / scale_ : kInf;
  return kInf;
}

SpectralLaw SpectralLaw::affine(double shift, double factor) const {
  if (!(factor > 0.0)) throw DomainError("affine: factor must be > 0");
  switch (kind_) {
    case SpectralKind::semicircle:
      return semicircle(shift + factor * center_, factor * scale_);
    case SpectralKind::two_point:
      return two_point(shift + factor * center_, factor * scale_);
    case SpectralKind::empirical:
      break;
  }
  std::vector<Atom> atoms = atoms_;
  for (auto& a : atoms) a.location = shift + factor * a.location;
  return empirical(std::move(atoms));
}

double SpectralLaw::quantile(double p) const {
  if (!(p > 0.0 && p < 1.0))
    throw DomainError("quantile: p must lie in (0, 1)");
  switch (kind_) {
    case SpectralKind::semicircle: {
      if (scale_ == 0.0) return center_;
      boost::uintmax_t max_iter = 200;
      auto f = [p](double x) { return semicircle_cdf(x) - p; };
      const auto [a, b] = boost::math::tools::toms748_solve(
          f, -2.0, 2.0, f(-2.0), f(2.0),
          boost::math::tools::eps_tolerance<double>(52), max_iter);
      return center_ + scale_ * 0.5 * (a + b);
    }
    case SpectralKind::two_point:
      return p < 0.5 ? center_ - scale_ : center_ + scale_;
    case SpectralKind::empirical:
      break;
  }
  double cum = 0.0;
  for (const auto& a : atoms_) {
    cum += a.weight;
    if (cum >= p) return a.location;
  }
  return atoms_.back().location;
}

SpectralLaw standardize(const SpectralLaw& law) {
  const double var = law.variance();
  if (!(var > 0.0))
    throw DegenerateLawError("standardize: law has zero variance");
  switch (law.kind()) {
    case SpectralKind::semicircle:
      return SpectralLaw::semicircle(0.0, 1.0);
    case SpectralKind::two_point:
      return SpectralLaw::two_point(0.0, 1.0);
    case SpectralKind::empirical:
      break;
  }
  const double sd = std::sqrt(var);
  return law.affine(-law.mean() / sd, 1.0 / sd);
}

double cauchy_transform(const SpectralLaw& law, double z) {
  require_above_support(law, z, "cauchy_transform");
  const double u = z - law.center();
  const double s = law.scale();
  switch (law.kind()) {
    case SpectralKind::semicircle:
      return 2.0 / (u + std::sqrt((u - 2.0 * s) * (u + 2.0 * s)));
    case SpectralKind::two_point:
      return u / ((u - s) * (u + s));
    case SpectralKind::empirical:
      break;
  }
  double g = 0.0;
  for (const auto& a : law.atoms()) g += a.weight / (z - a.location);
  return g;
}

double cauchy_transform_derivative(const SpectralLaw& law, double z) {
  require_above_support(law, z, "cauchy_transform_derivative");
  const double u = z - law.center();
  const double s = law.scale();
  switch (law.kind()) {
    case SpectralKind::semicircle:
      return (1.0 - u / std::sqrt((u - 2.0 * s) * (u + 2.0 * s))) /
             (2.0 * s * s);
    case SpectralKind::two_point:
      return -0.5 / ((u - s) * (u - s)) - 0.5 / ((u + s) * (u + s));
    case SpectralKind::empirical:
      break;
  }
  double g = 0.0;
  for (const auto& a : law.atoms()) {
    const double d = z - a.location;
    g -= a.weight / (d * d);
  }
  return g;
}

double cauchy_inverse(const SpectralLaw& law, double w) {
  if (!(w > 0.0) || !(w < law.cauchy_edge()))
    throw DomainError("cauchy_inverse: w = " + std::to_string(w) +
                      " outside (0, G(d_plus+))");
  const double s = law.scale();
  switch (law.kind()) {
    case SpectralKind::semicircle:
      return law.center() + 1.0 / w + s * s * w;
    case SpectralKind::two_point:
      return law.center() + (1.0 + std::sqrt(1.0 + 4.0 * w * w * s * s)) /
                                (2.0 * w);
    case SpectralKind::empirical:
      break;
  }
  // Bisection on (d_plus + eps, d_plus + 1e3], widening the upper end until
  // G(upper) < w.
  const double dp = law.d_plus();
  double lo = dp + std::max(1e-12, 4.0 * std::numeric_limits<double>::epsilon() *
                                       std::abs(dp));
  if (cauchy_transform(law, lo) < w)
    throw DomainError("cauchy_inverse: w = " + std::to_string(w) +
                      " exceeds G just above the support edge");
  double span = 1e3;
  double hi = dp + span;
  while (cauchy_transform(law, hi) >= w) {
    span *= 2.0;
    hi = dp + span;
    if (!std::isfinite(hi))
      throw NumericalError("cauchy_inverse: failed to bracket w = " +
                           std::to_string(w));
  }
  for (int it = 0; it < 4000; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (cauchy_transform(law, mid) > w)
      lo = mid;
    else
      hi = mid;
  }
  return std::abs(cauchy_transform(law, lo) - w) <
                 std::abs(cauchy_transform(law, hi) - w)
             ? lo
             : hi;
}

double r_transform(const SpectralLaw& law, double w) {
  require_r_domain(law, w, "r_transform");
  const double s = law.scale();
  switch (law.kind()) {
    case SpectralKind::semicircle:
      return law.center() + s * s * w;
    case SpectralKind::two_point:
      return law.center() +
             2.0 * w * s * s / (1.0 + std::sqrt(1.0 + 4.0 * w * w * s * s));
    case SpectralKind::empirical:
      break;
  }
  return atomic_r(law.atoms(), law.d_minus(), law.d_plus(), w);
}

double r_transform_derivative(const SpectralLaw& law, double w) {
  require_r_domain(law, w, "r_transform_derivative");
  const double s = law.scale();
  switch (law.kind()) {
    case SpectralKind::semicircle:
      return s * s;
    case SpectralKind::two_point: {
      const double root = std::sqrt(1.0 + 4.0 * w * w * s * s);
      return 2.0 * s * s / (root * (1.0 + root));
    }
    case SpectralKind::empirical:
      break;
  }
  const double r = atomic_r(law.atoms(), law.d_minus(), law.d_plus(), w);
  return atomic_r_derivative(law.atoms(), r, w);
}

double r_integral(const SpectralLaw& law, double a) {
  if (a == 0.0) return 0.0;
  require_r_domain(law, a, "r_integral");
  if (law.kind() == SpectralKind::semicircle)
    return law.center() * a + 0.5 * law.scale() * law.scale() * a * a;
  return integrate_adaptive([&law](double w) { return r_transform(law, w); },
                            0.0, a, 1e-12);
}

RescaledLaw::RescaledLaw(SpectralLaw base, double beta)
    : base_(std::move(base)), beta_(beta) {
  if (!(beta > 0.0) || !std::isfinite(beta))
    throw DomainError("RescaledLaw: beta must be > 0");
}

double RescaledLaw::cauchy(double z) const {
  return cauchy_transform(base_, z / beta_) / beta_;
}

double RescaledLaw::cauchy_inverse(double w) const {
  return beta_ * tapspin::cauchy_inverse(base_, beta_ * w);
}

double RescaledLaw::r(double w) const {
  return beta_ * r_transform(base_, beta_ * w);
}

double RescaledLaw::r_derivative(double w) const {
  return beta_ * beta_ * r_transform_derivative(base_, beta_ * w);
}

double RescaledLaw::r_integral(double a) const {
  return tapspin::r_integral(base_, beta_ * a);
}

}  // namespace tapspin
