#pragma once

// TAP equations m = tanh(h + Jbar m - Rbar(1 - q*) m): residuals, a damped
// reference solver, and distances between Gibbs and AMP magnetizations.

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "tapspin/amp.hpp"
#include "tapspin/ensemble.hpp"
#include "tapspin/fixed_point.hpp"

namespace tapspin {

enum class MagnetizationSource { amp, exact, mcmc, solver, other };

const char* to_string(MagnetizationSource source);

struct TapReport {
  double residual = 0.0;
  double onsager_coefficient = 0.0;  // Rbar(1 - q*)
  MagnetizationSource source = MagnetizationSource::other;
};

// (1/n) |m - tanh(h + Jbar m - a* m)|^2 with Jbar applied in factored form.
double tap_residual(const ModelInstance& instance, const FixedPoint& fp,
                    const Eigen::VectorXd& m);

TapReport tap_report(const ModelInstance& instance, const FixedPoint& fp,
                     const Eigen::VectorXd& m, MagnetizationSource source);

struct TapSolution {
  Eigen::VectorXd m;
  bool converged = false;
  std::size_t iterations = 0;
  double last_step = 0.0;  // (1/sqrt n) |m_k - m_{k-1}|
};

// m <- (1 - g) m + g tanh(h + Jbar m - a* m) until the step is below `tol`.
TapSolution solve_tap_damped(const ModelInstance& instance,
                             const FixedPoint& fp, const Eigen::VectorXd& m0,
                             double damping = 0.3, double tol = 1e-10,
                             std::size_t max_iter = 100000);

// d_t = (1/n) |<sigma> - m^t|^2 for t = 1..T.
std::vector<double> magnetization_vs_amp(const AmpTrajectory& trajectory,
                                         const Eigen::VectorXd& gibbs_mag);

}  // namespace tapspin
