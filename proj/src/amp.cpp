#include "tapspin/amp.hpp"

#include <cmath>
#include <random>
#include <string>

#include "tapspin/errors.hpp"
#include "tapspin/tap.hpp"

namespace tapspin {

Eigen::VectorXd lambda_diag(const FixedPoint& fp,
                            const Eigen::VectorXd& d_bar) {
  if (fp.product_measure) return Eigen::VectorXd::Zero(d_bar.size());
  const double top = d_bar.size() > 0 ? d_bar.maxCoeff() : 0.0;
  if (!(fp.lambda_star > top))
    throw BetaTooLargeError("lambda_diag: lambda* = " +
                            std::to_string(fp.lambda_star) +
                            " does not exceed max(dbar) = " +
                            std::to_string(top));
  const double inv_omq = 1.0 / (1.0 - fp.q_star);
  return (inv_omq / (fp.lambda_star - d_bar.array()) - 1.0).matrix();
}

AmpState init_amp(const ModelInstance& instance, const FixedPoint& fp,
                  std::uint64_t seed) {
  AmpState st;
  const auto n = static_cast<Eigen::Index>(instance.n());
  st.y = Eigen::VectorXd::Zero(n);
  const double sigma = fp.sigma_star();
  if (sigma > 0.0) {
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, sigma);
    for (Eigen::Index i = 0; i < n; ++i) st.y[i] = normal(rng);
  }
  return st;
}

AmpState amp_step(const AmpState& state, const ModelInstance& instance,
                  const FixedPoint& fp, const Eigen::VectorXd& lambda) {
  if (state.y.size() != static_cast<Eigen::Index>(instance.n()) ||
      lambda.size() != state.y.size())
    throw DimensionError("amp_step: state does not match instance");
  const double inv_omq = 1.0 / (1.0 - fp.q_star);
  AmpState next;
  next.t = state.t + 1;
  next.m = (instance.field() + state.y).array().tanh().matrix();
  next.x = inv_omq * next.m - state.y;
  next.s = instance.rotation() * next.x;
  next.y = instance.rotation().transpose() * lambda.cwiseProduct(next.s);
  return next;
}

AmpState amp_step(const AmpState& state, const ModelInstance& instance,
                  const FixedPoint& fp) {
  return amp_step(state, instance, fp, lambda_diag(fp, instance.d_bar()));
}

AmpState AmpTrajectory::state(std::size_t t) const {
  if (t > t_max) throw DomainError("AmpTrajectory::state: t beyond t_max");
  AmpState st;
  st.t = t;
  st.y = y.col(static_cast<Eigen::Index>(t));
  if (t > 0) {
    const auto c = static_cast<Eigen::Index>(t - 1);
    st.x = x.col(c);
    st.m = m.col(c);
  }
  return st;
}

Eigen::MatrixXd AmpTrajectory::gram_xx() const {
  return x.transpose() * x / static_cast<double>(n);
}

Eigen::MatrixXd AmpTrajectory::gram_yy() const {
  const auto yt = y.rightCols(static_cast<Eigen::Index>(t_max));
  return yt.transpose() * yt / static_cast<double>(n);
}

Eigen::MatrixXd AmpTrajectory::gram_xy() const {
  const auto yt = y.rightCols(static_cast<Eigen::Index>(t_max));
  return x.transpose() * yt / static_cast<double>(n);
}

Eigen::VectorXd AmpTrajectory::final_magnetization() const {
  return m.col(m.cols() - 1);
}

AmpTrajectory run_amp(const ModelInstance& instance, const FixedPoint& fp,
                      std::size_t t_max, std::uint64_t seed) {
  if (t_max < 1) throw DomainError("run_amp: t_max must be >= 1");
  const Eigen::VectorXd lambda = lambda_diag(fp, instance.d_bar());
  const auto n = static_cast<Eigen::Index>(instance.n());
  const auto tt = static_cast<Eigen::Index>(t_max);
  const double dn = static_cast<double>(n);

  AmpTrajectory tr;
  tr.fp = fp;
  tr.n = instance.n();
  tr.t_max = t_max;
  tr.x.resize(n, tt);
  tr.m.resize(n, tt);
  tr.y.resize(n, tt + 1);

  AmpState st = init_amp(instance, fp, seed);
  tr.y.col(0) = st.y;
  for (std::size_t t = 1; t <= t_max; ++t) {
    AmpState next = amp_step(st, instance, fp, lambda);
    const auto c = static_cast<Eigen::Index>(t);
    tr.x.col(c - 1) = next.x;
    tr.m.col(c - 1) = next.m;
    tr.y.col(c) = next.y;
    tr.y_diff_sq.push_back((next.y - st.y).squaredNorm() / dn);
    tr.m_norm_sq.push_back(next.m.squaredNorm() / dn);
    tr.tap_residual.push_back(tap_residual(instance, fp, next.m));
    st = std::move(next);
  }
  return tr;
}

StateEvolutionReport empirical_vs_theoretical_se(
    const AmpTrajectory& trajectory, const Eigen::MatrixXd& delta_theory) {
  const auto t = std::min<Eigen::Index>(
      static_cast<Eigen::Index>(trajectory.t_max), delta_theory.rows());
  if (delta_theory.rows() != delta_theory.cols() || t < 1)
    throw DimensionError("empirical_vs_theoretical_se: bad Delta shape");
  const double kappa = trajectory.fp.kappa_star;
  const Eigen::MatrixXd xx = trajectory.gram_xx().topLeftCorner(t, t);
  const Eigen::MatrixXd yy = trajectory.gram_yy().topLeftCorner(t, t);
  const Eigen::MatrixXd xy = trajectory.gram_xy().topLeftCorner(t, t);
  const Eigen::MatrixXd d = delta_theory.topLeftCorner(t, t);

  StateEvolutionReport r;
  r.t = static_cast<std::size_t>(t);
  r.xx_max_dev = (xx - d).cwiseAbs().maxCoeff();
  r.yy_max_dev = (yy - kappa * d).cwiseAbs().maxCoeff();
  r.xy_max_dev = xy.cwiseAbs().maxCoeff();
  r.xx_diag_dev =
      (xx.diagonal().array() - trajectory.fp.delta_star).abs().maxCoeff();
  r.yy_diag_dev =
      (yy.diagonal().array() - trajectory.fp.sigma_star_sq).abs().maxCoeff();
  return r;
}

}  // namespace tapspin
