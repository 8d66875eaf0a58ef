#pragma once

// Memory-AMP iteration for the TAP equations of the orthogonally invariant
// model:
//   x^t = tanh(h + y^{t-1}) / (1 - q*) - y^{t-1},  s^t = O x^t,
//   y^t = O^T Lambda s^t,  m^t = tanh(h + y^{t-1}),
// with Lambda = (lambda* - Dbar)^{-1} / (1 - q*) - I.

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "tapspin/ensemble.hpp"
#include "tapspin/fixed_point.hpp"

namespace tapspin {

// Entrywise Lambda. Throws BetaTooLargeError unless lambda* > max(dbar).
Eigen::VectorXd lambda_diag(const FixedPoint& fp, const Eigen::VectorXd& d_bar);

struct AmpState {
  std::size_t t = 0;
  Eigen::VectorXd x, s, y, m;  // x, s, m are empty at t = 0
};

// t = 0 state: y^0 iid N(0, sigma*^2) from `seed`.
AmpState init_amp(const ModelInstance& instance, const FixedPoint& fp,
                  std::uint64_t seed);

// One iteration; two dense matrix-vector products.
AmpState amp_step(const AmpState& state, const ModelInstance& instance,
                  const FixedPoint& fp, const Eigen::VectorXd& lambda);
AmpState amp_step(const AmpState& state, const ModelInstance& instance,
                  const FixedPoint& fp);

struct AmpTrajectory {
  FixedPoint fp;
  std::size_t n = 0;
  std::size_t t_max = 0;
  Eigen::MatrixXd x;  // n x t_max, column t-1 is x^t
  Eigen::MatrixXd y;  // n x (t_max + 1), column t is y^t
  Eigen::MatrixXd m;  // n x t_max, column t-1 is m^t
  // Per-step diagnostics, index t-1:
  std::vector<double> y_diff_sq;        // |y^t - y^{t-1}|^2 / n
  std::vector<double> m_norm_sq;        // |m^t|^2 / n
  std::vector<double> tap_residual;     // TAP residual of m^t

  AmpState state(std::size_t t) const;
  Eigen::MatrixXd gram_xx() const;  // X^T X / n over x^1..x^T
  Eigen::MatrixXd gram_yy() const;  // Y^T Y / n over y^1..y^T
  Eigen::MatrixXd gram_xy() const;  // X^T Y / n
  // m^T, the last iterate.
  Eigen::VectorXd final_magnetization() const;
};

AmpTrajectory run_amp(const ModelInstance& instance, const FixedPoint& fp,
                      std::size_t t_max, std::uint64_t seed);

struct StateEvolutionReport {
  std::size_t t = 0;
  double xx_max_dev = 0.0;       // max |X^T X/n - Delta|
  double yy_max_dev = 0.0;       // max |Y^T Y/n - kappa* Delta|
  double xy_max_dev = 0.0;       // max |X^T Y/n|
  double xx_diag_dev = 0.0;      // max_t |(X^T X/n)_tt - delta*|
  double yy_diag_dev = 0.0;      // max_t |(Y^T Y/n)_tt - sigma*^2|
};

StateEvolutionReport empirical_vs_theoretical_se(
    const AmpTrajectory& trajectory, const Eigen::MatrixXd& delta_theory);

}  // namespace tapspin
