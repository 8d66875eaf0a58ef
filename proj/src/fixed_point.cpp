#include "tapspin/fixed_point.hpp"

#include <cmath>
#include <random>
#include <string>

#include "tapspin/errors.hpp"

namespace tapspin {

double log_2cosh(double x) {
  const double a = std::abs(x);
  return a + std::log1p(std::exp(-2.0 * a));
}

double FixedPoint::sigma_star() const { return std::sqrt(sigma_star_sq); }

namespace {

double tanh_sq_expectation(const FieldLaw& field, double sigma) {
  return gauss_field_expectation(
      [](double h, double z) {
        const double t = std::tanh(h + z);
        return t * t;
      },
      field, sigma);
}

double rbar_prime_checked(const RescaledLaw& law, double w) {
  if (!(w < law.cauchy_edge()))
    throw BetaTooLargeError(
        "fixed point: 1 - q = " + std::to_string(w) +
        " is outside the domain of Rbar (beta too large for this law)");
  return law.r_derivative(w);
}

}  // namespace

FixedPoint product_measure_fixed_point(const FieldLaw& field) {
  FixedPoint fp;
  fp.beta = 0.0;
  fp.product_measure = true;
  fp.q_star = tanh_sq_expectation(field, 0.0);
  fp.sigma_star_sq = 0.0;
  fp.kappa_star = 0.0;
  const double omq = 1.0 - fp.q_star;
  fp.delta_star = fp.q_star / (omq * omq);
  fp.lambda_star = 1.0 / omq;
  fp.a_star = 0.0;
  fp.lambda_margin = fp.lambda_star;
  fp.psi_rs = gauss_field_expectation(
      [](double h, double) { return log_2cosh(h); }, field, 0.0);
  fp.converged = true;
  return fp;
}

FixedPoint solve_fixed_point(const RescaledLaw& law, const FieldLaw& field,
                             const FixedPointOptions& options) {
  const double gamma = options.damping;
  if (!(gamma > 0.0 && gamma <= 1.0))
    throw DomainError("solve_fixed_point: damping must lie in (0, 1]");

  auto sigma_sq_of = [&](double q) {
    return q * rbar_prime_checked(law, 1.0 - q);
  };

  FixedPoint fp;
  fp.beta = law.beta();
  double q = 0.0;
  for (std::size_t it = 1; it <= options.max_iterations; ++it) {
    const double target =
        tanh_sq_expectation(field, std::sqrt(sigma_sq_of(q)));
    const double next = (1.0 - gamma) * q + gamma * target;
    fp.iterations = it;
    const bool done = std::abs(next - q) < options.tolerance;
    q = next;
    if (done) {
      fp.converged = true;
      break;
    }
  }

  const double omq = 1.0 - q;
  const double rp = rbar_prime_checked(law, omq);
  fp.q_star = q;
  fp.sigma_star_sq = q * rp;
  const double denom = 1.0 - omq * omq * rp;
  if (!(denom > 0.0))
    throw BetaTooLargeError("fixed point: (1-q)^2 Rbar'(1-q) >= 1, kappa* "
                            "undefined");
  fp.kappa_star = 1.0 / denom - 1.0;
  if (!(fp.kappa_star > 0.0))
    throw BetaTooLargeError("fixed point: kappa* is not positive");
  fp.delta_star = fp.sigma_star_sq / fp.kappa_star;
  fp.a_star = law.r(omq);
  fp.lambda_star = fp.a_star + 1.0 / omq;
  fp.lambda_margin = fp.lambda_star - law.d_plus_bar();
  if (!(fp.lambda_margin > 0.0))
    throw BetaTooLargeError("fixed point: lambda* does not exceed the "
                            "support edge");
  fp.psi_rs = psi_rs(fp, law, field);
  return fp;
}

FixedPoint solve_fixed_point(double beta, const SpectralLaw& law,
                             const FieldLaw& field,
                             const FixedPointOptions& options) {
  if (beta == 0.0) return product_measure_fixed_point(field);
  return solve_fixed_point(RescaledLaw(law, beta), field, options);
}

double psi_rs(const FixedPoint& fp, const RescaledLaw& law,
              const FieldLaw& field) {
  const double sigma = fp.sigma_star();
  const double entropy = gauss_field_expectation(
      [](double h, double z) { return log_2cosh(h + z); }, field, sigma);
  if (fp.product_measure) return entropy;
  const double q = fp.q_star;
  const double omq = 1.0 - q;
  return entropy + 0.5 * q * law.r(omq) -
         0.5 * q * omq * law.r_derivative(omq) + 0.5 * law.r_integral(omq);
}

DeltaEstimate theoretical_delta(const FixedPoint& fp, const FieldLaw& field,
                                std::size_t t_max, std::size_t mc_samples,
                                std::uint64_t seed) {
  if (t_max < 1) throw DomainError("theoretical_delta: t_max must be >= 1");
  if (mc_samples < 2)
    throw DomainError("theoretical_delta: need at least two samples");
  const auto m = static_cast<Eigen::Index>(mc_samples);
  const auto t = static_cast<Eigen::Index>(t_max);
  const double inv_omq = 1.0 / (1.0 - fp.q_star);
  const double kappa = fp.kappa_star;

  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd h(m), y(m);
  Eigen::MatrixXd z(m, t), x(m, t);
  const double sigma = fp.sigma_star();
  for (Eigen::Index i = 0; i < m; ++i) {
    h[i] = field.sample(rng);
    y[i] = sigma * normal(rng);
    for (Eigen::Index k = 0; k < t; ++k) z(i, k) = normal(rng);
  }

  DeltaEstimate out;
  out.samples = mc_samples;
  out.delta = Eigen::MatrixXd::Zero(t, t);
  out.std_error = Eigen::MatrixXd::Zero(t, t);
  Eigen::MatrixXd chol = Eigen::MatrixXd::Zero(t, t);
  const double dm = static_cast<double>(mc_samples);

  for (Eigen::Index s = 0; s < t; ++s) {
    for (Eigen::Index i = 0; i < m; ++i)
      x(i, s) = inv_omq * std::tanh(h[i] + y[i]) - y[i];
    for (Eigen::Index k = 0; k <= s; ++k) {
      const Eigen::ArrayXd prod = x.col(s).array() * x.col(k).array();
      const double mean = prod.mean();
      const double var = (prod - mean).square().sum() / (dm - 1.0);
      out.delta(s, k) = out.delta(k, s) = mean;
      out.std_error(s, k) = out.std_error(k, s) = std::sqrt(var / dm);
    }
    // Next row of the Cholesky factor of kappa * Delta_{s+1}; rank-deficient
    // directions get a zero coefficient.
    for (Eigen::Index k = 0; k <= s; ++k) {
      double c = kappa * out.delta(s, k);
      for (Eigen::Index j = 0; j < k; ++j) c -= chol(s, j) * chol(k, j);
      if (k < s) {
        const double pivot = chol(k, k);
        chol(s, k) = pivot > 1e-7 * std::sqrt(kappa * out.delta(k, k) + 1e-300)
                         ? c / pivot
                         : 0.0;
      } else {
        const double scale = kappa * out.delta(s, s);
        if (c < -1e-8 * std::max(1.0, scale))
          throw NumericalError(
              "theoretical_delta: Delta is not positive semidefinite at step " +
              std::to_string(s + 1));
        chol(s, s) = std::sqrt(std::max(c, 0.0));
      }
    }
    y = z.leftCols(s + 1) * chol.row(s).head(s + 1).transpose();
  }
  return out;
}

}  // namespace tapspin
