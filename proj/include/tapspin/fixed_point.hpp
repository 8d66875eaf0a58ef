#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>

#include "tapspin/field.hpp"
#include "tapspin/spectral.hpp"

namespace tapspin {

// Solution of the replica-symmetric fixed point
//   q* = E[tanh(H + sigma* G)^2],  sigma*^2 = q* Rbar'(1 - q*),
// and the constants derived from it.
struct FixedPoint {
  double beta = 0.0;
  double q_star = 0.0;
  double sigma_star_sq = 0.0;
  double kappa_star = 0.0;   // 1/(1 - (1-q)^2 Rbar'(1-q)) - 1
  double delta_star = 0.0;   // sigma*^2 / kappa*
  double lambda_star = 0.0;  // Gbar^{-1}(1 - q*)
  double a_star = 0.0;       // Rbar(1 - q*), the Onsager coefficient
  double psi_rs = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
  // lambda* - dbar_plus; must be positive for the resolvent to exist.
  double lambda_margin = 0.0;
  // beta == 0: product measure, all coupling-dependent constants vanish.
  bool product_measure = false;

  double sigma_star() const;
};

struct FixedPointOptions {
  double damping = 0.5;
  double tolerance = 1e-12;
  std::size_t max_iterations = 10000;
};

// Damped iteration q <- (1 - g) q + g E[tanh(H + sigma(q) G)^2] from q = 0.
// Throws BetaTooLargeError when 1 - q leaves the domain of Rbar or kappa* is
// not positive. Non-convergence is reported in the result, not thrown.
FixedPoint solve_fixed_point(const RescaledLaw& law, const FieldLaw& field,
                             const FixedPointOptions& options = {});

// Dispatches beta == 0 to the product-measure case; `law` must be
// standardized.
FixedPoint solve_fixed_point(double beta, const SpectralLaw& law,
                             const FieldLaw& field,
                             const FixedPointOptions& options = {});

// The beta = 0 constants: q* = E tanh(H)^2, sigma* = 0, Gamma = 0.
FixedPoint product_measure_fixed_point(const FieldLaw& field);

// E[log 2cosh(H + sigma* G)] + (q/2) Rbar(1-q) - (q(1-q)/2) Rbar'(1-q)
//   + (1/2) int_0^{1-q} Rbar.
double psi_rs(const FixedPoint& fp, const RescaledLaw& law,
              const FieldLaw& field);

// Monte Carlo estimate of the state-evolution Gram matrix Delta_t.
struct DeltaEstimate {
  Eigen::MatrixXd delta;
  Eigen::MatrixXd std_error;
  std::size_t samples = 0;
};

DeltaEstimate theoretical_delta(const FixedPoint& fp, const FieldLaw& field,
                                std::size_t t_max,
                                std::size_t mc_samples = 1000000,
                                std::uint64_t seed = 0);

// log(2 cosh x) without overflow.
double log_2cosh(double x);

}  // namespace tapspin
