#include <cmath>
#include <cstdio>
#include <random>

#include "doctest.h"
#include "tapspin/ensemble.hpp"
#include "tapspin/errors.hpp"
#include "test_support.hpp"

using namespace tapspin;

namespace {

double orth_error(const Eigen::MatrixXd& o) {
  return (o.transpose() * o - Eigen::MatrixXd::Identity(o.rows(), o.cols()))
      .cwiseAbs()
      .maxCoeff();
}

Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(rng);
  return m;
}

}  // namespace

TEST_CASE("haar_so basics") {
  CHECK(haar_so(1, 3)(0, 0) == 1.0);
  for (std::size_t n : {2, 3, 7, 40, 128}) {
    const auto o = haar_so(n, 17 + n);
    CHECK(orth_error(o) < 1e-10);
    CHECK(std::abs(o.determinant() - 1.0) < 1e-8);
    for (Eigen::Index j = 0; j < o.cols(); ++j) CHECK(std::abs(o.col(j).norm() - 1.0) < 1e-12);
  }
  CHECK(haar_so(9, 5) == haar_so(9, 5));
  CHECK(haar_so(9, 5) != haar_so(9, 6));
}

TEST_CASE("haar_o reaches both components") {
  int negative = 0;
  for (std::uint64_t s = 0; s < 200; ++s) {
    const auto o = haar_o(5, s);
    CHECK(orth_error(o) < 1e-10);
    if (o.determinant() < 0) ++negative;
  }
  CHECK(negative > 60);
  CHECK(negative < 140);
}

TEST_CASE("SO(2) rotation angle is uniform") {
  std::vector<double> angles;
  for (std::uint64_t s = 0; s < 10000; ++s) {
    const auto o = haar_so(2, s);
    angles.push_back(std::atan2(o(1, 0), o(0, 0)) + M_PI);
  }
  const auto ks = testing::ks_one_sample(angles, [](double a) { return a / (2 * M_PI); });
  CHECK(ks.p_value > 0.01);
}

TEST_CASE("first-entry second moment is 1/n") {
  const std::size_t n = 5;
  std::vector<double> v;
  for (std::uint64_t s = 0; s < 10000; ++s) v.push_back(std::pow(haar_so(n, s)(0, 0), 2));
  const auto [m, se] = testing::mean_and_se(v);
  CHECK(std::abs(m - 1.0 / n) < 3 * se);
}

TEST_CASE("SO(n) and O(n) act identically in law on a 2-frame") {
  const std::size_t n = 6;
  std::mt19937_64 rng(99);
  const Eigen::MatrixXd a = gaussian_matrix(n, 2, rng);
  std::vector<double> so11, o11, so32, o32;
  for (std::uint64_t s = 0; s < 10000; ++s) {
    const Eigen::MatrixXd x = haar_so(n, s) * a;
    const Eigen::MatrixXd y = haar_o(n, 1000000 + s) * a;
    so11.push_back(x(0, 0));
    o11.push_back(y(0, 0));
    so32.push_back(x(2, 1));
    o32.push_back(y(2, 1));
  }
  CHECK(testing::ks_two_sample(so11, o11).p_value > 0.01);
  CHECK(testing::ks_two_sample(so32, o32).p_value > 0.01);
}

TEST_CASE("build_instance examples") {
  const auto tp = build_instance(4, 0.3, SpectralLaw::two_point(), FieldLaw::constant(0.0), 1);
  REQUIRE(tp.d_bar().size() == 4);
  CHECK(tp.d_bar()[0] == doctest::Approx(-0.3));
  CHECK(tp.d_bar()[1] == doctest::Approx(-0.3));
  CHECK(tp.d_bar()[2] == doctest::Approx(0.3));
  CHECK(tp.d_bar()[3] == doctest::Approx(0.3));

  const auto c = build_instance(3, 0.2, SpectralLaw::semicircle(), FieldLaw::constant(0.5), 1);
  CHECK(c.field() == Eigen::Vector3d(0.5, 0.5, 0.5));
  CHECK_FALSE(c.field_sampled());

  const auto sc = build_instance(100, 0.5, SpectralLaw::semicircle(), FieldLaw::constant(0.0), 2);
  const Eigen::VectorXd d = sc.d_bar() / 0.5;
  const double mean = d.mean();
  const double var = (d.array() - mean).square().mean();
  CHECK(std::abs(mean) < 1e-12);
  CHECK(var >= 0.9);
  CHECK(var <= 1.1);
  CHECK(orth_error(sc.rotation()) < 1e-10);
  CHECK(std::abs(sc.rotation().determinant() - 1.0) < 1e-8);
}

TEST_CASE("build_instance is pure and validates inputs") {
  const auto law = SpectralLaw::semicircle();
  const auto field = FieldLaw::gaussian(0.0, 1.0);
  const auto a = build_instance(20, 0.2, law, field, 8, FieldMode::sampled);
  const auto b = build_instance(20, 0.2, law, field, 8, FieldMode::sampled);
  CHECK(a.rotation() == b.rotation());
  CHECK(a.field() == b.field());
  CHECK(a.field_sampled());
  const auto q = build_instance(20, 0.2, law, field, 8);
  CHECK(q.field() != a.field());
  CHECK(q.field()[0] < q.field()[19]);
  CHECK_THROWS_AS(build_instance(0, 0.2, law, field, 1), DomainError);
  CHECK_THROWS_AS(build_instance(5, 0.0, law, field, 1), DomainError);
  CHECK_THROWS_AS(build_instance(5, 0.2, SpectralLaw::semicircle(1.0, 1.0), field, 1), DomainError);
}

TEST_CASE("apply_jbar") {
  const auto inst = build_instance(5, 0.4, SpectralLaw::semicircle(), FieldLaw::constant(0.1), 4);
  CHECK(apply_jbar(inst, Eigen::VectorXd::Zero(5)).norm() == 0.0);
  const ModelInstance diag(1.0, Eigen::Vector2d(1, 2), Eigen::Matrix2d::Identity(),
                           Eigen::Vector2d::Zero(), 0);
  CHECK(apply_jbar(diag, Eigen::Vector2d(1, 1)) == Eigen::Vector2d(1, 2));

  const Eigen::MatrixXd o = inst.rotation();
  const Eigen::MatrixXd explicit_j = o.transpose() * inst.d_bar().asDiagonal() * o;
  CHECK((inst.coupling_matrix() - explicit_j).cwiseAbs().maxCoeff() < 1e-14);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20; ++i) {
    const Eigen::VectorXd v = gaussian_matrix(5, 1, rng);
    CHECK(std::abs(v.dot(apply_jbar(inst, v)) - v.dot(explicit_j * v)) < 1e-10);
  }
  CHECK_THROWS_AS(apply_jbar(inst, Eigen::VectorXd::Zero(4)), DimensionError);
}

TEST_CASE("conditional sampler: rigidity and the constraint") {
  const Eigen::MatrixXd e1 = Eigen::Vector2d(1, 0);
  const auto r = conditional_haar_so(e1, e1, 3);
  CHECK((r.rotation - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() < 1e-12);

  std::mt19937_64 rng(5);
  double worst = 0.0, worst_orth = 0.0, worst_det = 0.0;
  for (std::uint64_t trial = 0; trial < 10000; ++trial) {
    const auto n = static_cast<Eigen::Index>(2 + trial % 7);
    const auto k = static_cast<Eigen::Index>(1 + (trial / 7) % (n - 1));
    const Eigen::MatrixXd b = gaussian_matrix(n, k, rng);
    const Eigen::MatrixXd a = haar_so(n, trial) * b;
    const auto c = conditional_haar_so(a, b, trial + 7);
    worst = std::max(worst, (c.rotation * b - a).cwiseAbs().maxCoeff());
    worst_orth = std::max(worst_orth, orth_error(c.rotation));
    worst_det = std::max(worst_det, std::abs(c.rotation.determinant() - 1.0));
  }
  CHECK(worst < 1e-10);
  CHECK(worst_orth < 1e-10);
  CHECK(worst_det < 1e-8);
}

TEST_CASE("conditional sampler: residual is Haar on SO(n - k)") {
  const std::size_t n = 6;
  std::mt19937_64 rng(21);
  const Eigen::MatrixXd b = gaussian_matrix(n, 2, rng);
  const Eigen::MatrixXd a = haar_so(n, 77) * b;
  std::vector<double> cond_sq, cond_4, ref_sq, ref_4, cond_11, ref_11;
  for (std::uint64_t s = 0; s < 10000; ++s) {
    const auto c = conditional_haar_so(a, b, s);
    const Eigen::MatrixXd proj = c.a_perp.transpose() * c.rotation * c.b_perp;
    CHECK((proj - c.residual).cwiseAbs().maxCoeff() < 1e-10);
    const double x = proj(0, 0);
    const double y = haar_so(4, 500000 + s)(0, 0);
    cond_sq.push_back(x * x);
    cond_4.push_back(std::pow(x, 4));
    ref_sq.push_back(y * y);
    ref_4.push_back(std::pow(y, 4));
    cond_11.push_back(x);
    ref_11.push_back(y);
  }
  const auto [m2, se2] = testing::mean_and_se(cond_sq);
  const auto [m4, se4] = testing::mean_and_se(cond_4);
  CHECK(std::abs(m2 - 0.25) < 3 * se2);
  CHECK(std::abs(m4 - 3.0 / 24.0) < 3 * se4);
  const auto [r2, rse2] = testing::mean_and_se(ref_sq);
  CHECK(std::abs(m2 - r2) < 3 * std::hypot(se2, rse2));
  CHECK(testing::ks_two_sample(cond_11, ref_11).p_value > 0.01);
}

TEST_CASE("conditional sampler: k = n - 1 is deterministic") {
  std::mt19937_64 rng(8);
  const Eigen::MatrixXd b = gaussian_matrix(5, 4, rng);
  const Eigen::MatrixXd a = haar_so(5, 12) * b;
  const auto x = conditional_haar_so(a, b, 1).rotation;
  const auto y = conditional_haar_so(a, b, 2).rotation;
  CHECK((x - y).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((x * b - a).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(std::abs(x.determinant() - 1.0) < 1e-10);
}

TEST_CASE("conditional sampler: invalid inputs") {
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd b = gaussian_matrix(4, 2, rng);
  CHECK_THROWS_AS(conditional_haar_so(2.0 * b, b, 1), DomainError);
  Eigen::MatrixXd rank1(4, 2);
  rank1.col(0) = b.col(0);
  rank1.col(1) = 2.0 * b.col(0);
  CHECK_THROWS_AS(conditional_haar_so(rank1, rank1, 1), DomainError);
  CHECK_THROWS_AS(conditional_haar_so(gaussian_matrix(4, 4, rng), gaussian_matrix(4, 4, rng), 1),
                  DomainError);
  CHECK_THROWS_AS(conditional_haar_so(b, gaussian_matrix(4, 1, rng), 1), DimensionError);
  // k = 0 falls back to an unconstrained draw.
  const auto free = conditional_haar_so(Eigen::MatrixXd(4, 0), Eigen::MatrixXd(4, 0), 9);
  CHECK(orth_error(free.rotation) < 1e-10);
}

TEST_CASE("instance JSON round trip is bit exact") {
  const auto inst = build_instance(12, 0.17, SpectralLaw::two_point(), FieldLaw::gaussian(0.2, 0.7),
                                   31, FieldMode::sampled);
  const auto back = instance_from_json(instance_to_json(inst));
  CHECK(back.n() == 12);
  CHECK(back.beta() == inst.beta());
  CHECK(back.seed() == inst.seed());
  CHECK(back.field_sampled());
  CHECK(back.d_bar() == inst.d_bar());
  CHECK(back.rotation() == inst.rotation());
  CHECK(back.field() == inst.field());

  const std::string path = "test_ensemble_instance.json";
  save_instance(inst, path);
  CHECK(load_instance(path).rotation() == inst.rotation());
  std::remove(path.c_str());
  CHECK_THROWS_AS(instance_from_json("{\"format\": \"other\"}"), DomainError);
  CHECK_THROWS_AS(load_instance("/nonexistent/dir/x.json"), IoError);
}
