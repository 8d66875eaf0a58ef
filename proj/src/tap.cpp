#include "tapspin/tap.hpp"

#include <cmath>

#include "tapspin/errors.hpp"

namespace tapspin {

const char* to_string(MagnetizationSource source) {
  switch (source) {
    case MagnetizationSource::amp:
      return "amp";
    case MagnetizationSource::exact:
      return "exact";
    case MagnetizationSource::mcmc:
      return "mcmc";
    case MagnetizationSource::solver:
      return "solver";
    case MagnetizationSource::other:
      break;
  }
  return "other";
}

namespace {

Eigen::VectorXd tap_map(const ModelInstance& instance, const FixedPoint& fp,
                        const Eigen::VectorXd& m) {
  const Eigen::VectorXd arg =
      instance.field() + apply_jbar(instance, m) - fp.a_star * m;
  return arg.array().tanh().matrix();
}

void check_magnetization(const ModelInstance& instance,
                         const Eigen::VectorXd& m, const char* what) {
  if (static_cast<std::size_t>(m.size()) != instance.n())
    throw DimensionError(std::string(what) + ": m has wrong length");
  if (m.size() > 0 && m.cwiseAbs().maxCoeff() > 1.0)
    throw DomainError(std::string(what) + ": entries of m must lie in [-1, 1]");
}

}  // namespace

double tap_residual(const ModelInstance& instance, const FixedPoint& fp,
                    const Eigen::VectorXd& m) {
  check_magnetization(instance, m, "tap_residual");
  return (m - tap_map(instance, fp, m)).squaredNorm() /
         static_cast<double>(instance.n());
}

TapReport tap_report(const ModelInstance& instance, const FixedPoint& fp,
                     const Eigen::VectorXd& m, MagnetizationSource source) {
  return {tap_residual(instance, fp, m), fp.a_star, source};
}

TapSolution solve_tap_damped(const ModelInstance& instance,
                             const FixedPoint& fp, const Eigen::VectorXd& m0,
                             double damping, double tol,
                             std::size_t max_iter) {
  check_magnetization(instance, m0, "solve_tap_damped");
  if (!(damping > 0.0 && damping <= 1.0))
    throw DomainError("solve_tap_damped: damping must lie in (0, 1]");
  const double root_n = std::sqrt(static_cast<double>(instance.n()));
  TapSolution sol;
  sol.m = m0;
  for (std::size_t it = 1; it <= max_iter; ++it) {
    const Eigen::VectorXd next =
        (1.0 - damping) * sol.m + damping * tap_map(instance, fp, sol.m);
    sol.last_step = (next - sol.m).norm() / root_n;
    sol.m = next;
    sol.iterations = it;
    if (sol.last_step < tol) {
      sol.converged = true;
      break;
    }
  }
  return sol;
}

std::vector<double> magnetization_vs_amp(const AmpTrajectory& trajectory,
                                         const Eigen::VectorXd& gibbs_mag) {
  if (static_cast<std::size_t>(gibbs_mag.size()) != trajectory.n)
    throw DimensionError("magnetization_vs_amp: length mismatch");
  std::vector<double> d(trajectory.t_max);
  const double dn = static_cast<double>(trajectory.n);
  for (std::size_t t = 0; t < trajectory.t_max; ++t)
    d[t] = (gibbs_mag - trajectory.m.col(static_cast<Eigen::Index>(t)))
               .squaredNorm() /
           dn;
  return d;
}

}  // namespace tapspin
