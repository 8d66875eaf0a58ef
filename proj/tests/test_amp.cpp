#include <cmath>
#include <random>

#include "doctest.h"
#include "tapspin/amp.hpp"
#include "tapspin/errors.hpp"
#include "tapspin/tap.hpp"
#include "test_support.hpp"

using namespace tapspin;

namespace {

const SpectralLaw& semicircle() {
  static const SpectralLaw law = SpectralLaw::semicircle();
  return law;
}

// Shared n = 2000 instance; the QR dominates the cost.
const ModelInstance& big_instance() {
  static const ModelInstance inst =
      build_instance(2000, 0.15, semicircle(), FieldLaw::constant(1.0), 2024);
  return inst;
}

const FixedPoint& big_fp() {
  static const FixedPoint fp = solve_fixed_point(0.15, semicircle(), FieldLaw::constant(1.0));
  return fp;
}

Eigen::VectorXd quantile_spectrum(std::size_t n, double beta) {
  Eigen::VectorXd d(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    d[static_cast<Eigen::Index>(i)] = beta * semicircle().quantile((i + 0.5) / n);
  return d;
}

}  // namespace

TEST_CASE("lambda_diag formula and traces") {
  const auto fp = solve_fixed_point(0.3, semicircle(), FieldLaw::constant(0.5));
  const Eigen::VectorXd d = quantile_spectrum(2000, 0.3);
  const Eigen::VectorXd lam = lambda_diag(fp, d);
  for (Eigen::Index i = 0; i < d.size(); i += 97)
    CHECK(lam[i] == doctest::Approx(1 / (1 - fp.q_star) / (fp.lambda_star - d[i]) - 1));
  CHECK(std::abs(lam.mean()) < 1e-3);
  CHECK(std::abs(lam.squaredNorm() / 2000.0 - fp.kappa_star) < 0.02);

  const auto zero_field = solve_fixed_point(0.2, semicircle(), FieldLaw::constant(0.0));
  const Eigen::VectorXd flat = lambda_diag(zero_field, Eigen::VectorXd::Zero(3));
  CHECK(zero_field.lambda_star == doctest::Approx(RescaledLaw(semicircle(), 0.2).r(1.0) + 1.0));
  CHECK(flat[0] == doctest::Approx(1 / zero_field.lambda_star - 1));

  FixedPoint bad = fp;
  bad.lambda_star = d.maxCoeff();
  CHECK_THROWS_AS(lambda_diag(bad, d), BetaTooLargeError);
}

TEST_CASE("trace of Lambda^2 approaches kappa* as n grows") {
  const auto fp = solve_fixed_point(0.4, semicircle(), FieldLaw::constant(0.3));
  double prev = 1.0;
  for (std::size_t n : {100, 400, 1600, 6400}) {
    const Eigen::VectorXd lam = lambda_diag(fp, quantile_spectrum(n, 0.4));
    const double err = std::abs(lam.squaredNorm() / n - fp.kappa_star) + std::abs(lam.mean());
    CHECK(err < prev);
    prev = err;
  }
}

TEST_CASE("init_amp") {
  const auto inst = build_instance(30, 0.2, semicircle(), FieldLaw::constant(0.0), 1);
  const auto fp0 = solve_fixed_point(0.2, semicircle(), FieldLaw::constant(0.0));
  const auto zero = init_amp(inst, fp0, 5);
  CHECK(zero.y.norm() == 0.0);
  CHECK(zero.t == 0);
  CHECK(zero.x.size() == 0);

  const auto& fp = big_fp();
  double sum_sq = 0.0;
  std::size_t count = 0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto st = init_amp(big_instance(), fp, s);
    sum_sq += st.y.squaredNorm();
    count += static_cast<std::size_t>(st.y.size());
  }
  // Sample variance of 10^4 N(0, s2) draws: SD is s2 sqrt(2 / 10^4).
  const double s2 = fp.sigma_star_sq;
  CHECK(std::abs(sum_sq / count - s2) < 4 * s2 * std::sqrt(2.0 / count));
  CHECK(init_amp(big_instance(), fp, 9).y == init_amp(big_instance(), fp, 9).y);
}

TEST_CASE("amp_step scalar arithmetic") {
  const ModelInstance one(0.1, Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1),
                          Eigen::VectorXd::Constant(1, 0.2), 0);
  FixedPoint fp;
  fp.q_star = 0.5;
  fp.lambda_star = 2.0;
  AmpState st;
  st.y = Eigen::VectorXd::Constant(1, 0.1);
  const auto next = amp_step(st, one, fp);
  CHECK(next.t == 1);
  CHECK(next.x[0] == doctest::Approx(2 * std::tanh(0.3) - 0.1).epsilon(1e-14));
  CHECK(next.x[0] == doctest::Approx(0.482626).epsilon(1e-6));
  CHECK(next.m[0] == doctest::Approx(std::tanh(0.3)));
  // Lambda = 2 / (2 - 0) - 1 = 0.
  CHECK(next.y[0] == 0.0);

  const ModelInstance flat(0.1, Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3),
                           Eigen::VectorXd::Zero(3), 0);
  FixedPoint zero;
  zero.lambda_star = 1.5;
  AmpState z;
  z.y = Eigen::VectorXd::Zero(3);
  const auto zn = amp_step(z, flat, zero);
  CHECK(zn.x.norm() == 0.0);
  CHECK(zn.m.norm() == 0.0);
  CHECK_THROWS_AS(amp_step(z, big_instance(), big_fp()), DimensionError);
}

TEST_CASE("y^t = Gamma x^t against an explicit resolvent") {
  const std::size_t n = 48;
  const double beta = 0.3;
  const auto field = FieldLaw::gaussian(0.2, 0.8);
  const auto inst = build_instance(n, beta, semicircle(), field, 3);
  const auto fp = solve_fixed_point(beta, semicircle(), field);
  const Eigen::MatrixXd j = inst.coupling_matrix();
  const Eigen::MatrixXd gamma =
      (fp.lambda_star * Eigen::MatrixXd::Identity(n, n) - j).inverse() / (1 - fp.q_star) -
      Eigen::MatrixXd::Identity(n, n);
  const auto traj = run_amp(inst, fp, 5, 4);
  for (std::size_t t = 1; t <= 5; ++t) {
    const auto st = traj.state(t);
    CHECK((st.y - gamma * st.x).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((st.m.array().abs() < 1.0).all());
  }
  CHECK((traj.gram_xx() - traj.gram_xx().transpose()).cwiseAbs().maxCoeff() < 1e-14);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(traj.gram_yy());
  CHECK(eig.eigenvalues().minCoeff() > -1e-12);
}

TEST_CASE("an AMP fixed point solves the TAP equations") {
  const double beta = 0.2;
  const auto field = FieldLaw::constant(0.8);
  const auto inst = build_instance(64, beta, semicircle(), field, 12);
  const auto fp = solve_fixed_point(beta, semicircle(), field);
  const auto traj = run_amp(inst, fp, 200, 1);
  CHECK(traj.y_diff_sq.back() < 1e-24);
  const auto st = traj.state(200);
  const Eigen::VectorXd m = (1 - fp.q_star) * (st.x + st.y);
  CHECK(tap_residual(inst, fp, m) < 1e-10);
  CHECK(traj.tap_residual.back() < 1e-10);
  CHECK((m - traj.final_magnetization()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("run_amp is deterministic") {
  const auto inst = build_instance(40, 0.15, semicircle(), FieldLaw::constant(1.0), 2);
  const auto fp = solve_fixed_point(0.15, semicircle(), FieldLaw::constant(1.0));
  const auto a = run_amp(inst, fp, 10, 3);
  const auto b = run_amp(inst, fp, 10, 3);
  CHECK(a.y == b.y);
  CHECK(a.m == b.m);
  CHECK(a.y_diff_sq == b.y_diff_sq);
  CHECK_THROWS_AS(run_amp(inst, fp, 0, 3), DomainError);
}

TEST_CASE("n = 2000: magnetization norm, cross Gram and convergence") {
  const auto& fp = big_fp();
  const auto traj = run_amp(big_instance(), fp, 50, 7);
  CHECK(std::abs(traj.m_norm_sq[19] - fp.q_star) < 5 / std::sqrt(2000.0));
  CHECK(traj.gram_xy().topLeftCorner(20, 20).cwiseAbs().maxCoeff() < 0.05);
  CHECK(traj.y_diff_sq.back() < 1e-6);
  for (std::size_t t = 1; t < 10; ++t) CHECK(traj.y_diff_sq[t] < traj.y_diff_sq[t - 1]);
}

TEST_CASE("state evolution diagonals at n = 2000") {
  const auto& fp = big_fp();
  const auto field = FieldLaw::constant(1.0);
  const auto traj = run_amp(big_instance(), fp, 8, 8);
  const auto delta = theoretical_delta(fp, field, 8, 200000, 3);
  const auto rep = empirical_vs_theoretical_se(traj, delta.delta);
  CHECK(rep.t == 8);
  CHECK(rep.xx_diag_dev < 0.05);
  CHECK(rep.yy_diag_dev < 0.05);
  CHECK(rep.xy_max_dev < 0.05);
  CHECK(rep.xx_max_dev < 0.1);
  CHECK(rep.yy_max_dev < 0.05);
}

TEST_CASE("state evolution deviations shrink with n") {
  const double beta = 0.3;
  const auto field = FieldLaw::constant(0.5);
  const auto fp = solve_fixed_point(beta, semicircle(), field);
  const auto delta = theoretical_delta(fp, field, 5, 200000, 1);
  std::vector<double> mean_dev;
  for (std::size_t n : {250, 1000, 2000}) {
    double acc = 0.0;
    const int reps = 3;
    for (int r = 0; r < reps; ++r) {
      const auto inst = build_instance(n, beta, semicircle(), field, 100 + r);
      const auto rep = empirical_vs_theoretical_se(run_amp(inst, fp, 5, r), delta.delta);
      acc += rep.xx_max_dev + rep.yy_max_dev + rep.xy_max_dev;
    }
    mean_dev.push_back(acc / reps);
  }
  CHECK(mean_dev[1] < mean_dev[0]);
  CHECK(mean_dev[2] < mean_dev[1]);
}
