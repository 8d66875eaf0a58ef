#include "tapspin/ensemble.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <random>
#include <sstream>

#include "tapspin/errors.hpp"
#include "tapspin/rng.hpp"

namespace tapspin {

namespace {

// Full Q of a Householder QR with the first k columns flipped so that R has
// a positive diagonal, together with det(Q).
struct SignedQ {
  Eigen::MatrixXd q;
  int det = 1;
};

SignedQ positive_diagonal_q(const Eigen::MatrixXd& x) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
  SignedQ out;
  out.q = qr.householderQ();
  // Each Householder factor with nonzero tau is a reflection.
  for (Eigen::Index i = 0; i < qr.hCoeffs().size(); ++i)
    if (qr.hCoeffs()[i] != 0.0) out.det = -out.det;
  const auto& r = qr.matrixQR();
  const double scale = std::max(1.0, x.cwiseAbs().maxCoeff());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    if (std::abs(r(j, j)) <= 1e-12 * scale)
      throw DomainError("QR: matrix is not of full column rank");
    if (r(j, j) < 0.0) {
      out.q.col(j) *= -1.0;
      out.det = -out.det;
    }
  }
  return out;
}

Eigen::MatrixXd gaussian_matrix(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto m = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd g(m, m);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < m; ++i) g(i, j) = normal(rng);
  return g;
}

bool is_standardized(const SpectralLaw& law) {
  return std::abs(law.mean()) < 1e-9 && std::abs(law.variance() - 1.0) < 1e-9;
}

}  // namespace

ModelInstance::ModelInstance(double beta, Eigen::VectorXd d_bar,
                             Eigen::MatrixXd rotation, Eigen::VectorXd field,
                             std::uint64_t seed, bool field_sampled)
    : beta_(beta),
      d_bar_(std::move(d_bar)),
      rotation_(std::move(rotation)),
      field_(std::move(field)),
      seed_(seed),
      field_sampled_(field_sampled) {
  const auto n = d_bar_.size();
  if (n < 1) throw DomainError("ModelInstance: n must be >= 1");
  if (rotation_.rows() != n || rotation_.cols() != n || field_.size() != n)
    throw DimensionError("ModelInstance: inconsistent dimensions");
  if (!(beta_ >= 0.0)) throw DomainError("ModelInstance: beta must be >= 0");
}

double ModelInstance::d_bar_op_norm() const {
  return d_bar_.cwiseAbs().maxCoeff();
}

Eigen::MatrixXd ModelInstance::coupling_matrix() const {
  if (n() > 4096)
    throw SizeGuardError("coupling_matrix: refusing to materialize n > 4096");
  return rotation_.transpose() * d_bar_.asDiagonal() * rotation_;
}

Eigen::MatrixXd haar_o(std::size_t n, std::uint64_t seed) {
  if (n < 1) throw DomainError("haar_o: n must be >= 1");
  return positive_diagonal_q(gaussian_matrix(n, seed)).q;
}

Eigen::MatrixXd haar_so(std::size_t n, std::uint64_t seed) {
  if (n < 1) throw DomainError("haar_so: n must be >= 1");
  auto signed_q = positive_diagonal_q(gaussian_matrix(n, seed));
  if (signed_q.det < 0) signed_q.q.col(signed_q.q.cols() - 1) *= -1.0;
  return std::move(signed_q.q);
}

ModelInstance build_instance(std::size_t n, double beta,
                             const SpectralLaw& law, const FieldLaw& field,
                             std::uint64_t seed, FieldMode mode) {
  if (n < 1) throw DomainError("build_instance: n must be >= 1");
  if (!(beta > 0.0) || !std::isfinite(beta))
    throw DomainError("build_instance: beta must be > 0");
  if (!is_standardized(law))
    throw DomainError("build_instance: spectral law must be standardized");
  const auto m = static_cast<Eigen::Index>(n);
  const double dn = static_cast<double>(n);
  Eigen::VectorXd d_bar(m), h(m);
  for (Eigen::Index i = 0; i < m; ++i)
    d_bar[i] = beta * law.quantile((static_cast<double>(i) + 0.5) / dn);
  if (mode == FieldMode::quantile) {
    for (Eigen::Index i = 0; i < m; ++i)
      h[i] = field.quantile((static_cast<double>(i) + 0.5) / dn);
  } else {
    Rng rng(derive_seed(seed, Stream::field_sample));
    for (Eigen::Index i = 0; i < m; ++i) h[i] = field.sample(rng);
  }
  return ModelInstance(beta, std::move(d_bar),
                       haar_so(n, derive_seed(seed, Stream::haar)),
                       std::move(h), seed, mode == FieldMode::sampled);
}

Eigen::VectorXd apply_jbar(const ModelInstance& instance,
                           const Eigen::VectorXd& v) {
  if (static_cast<std::size_t>(v.size()) != instance.n())
    throw DimensionError("apply_jbar: vector has wrong length");
  const Eigen::VectorXd s = instance.rotation() * v;
  return instance.rotation().transpose() *
         instance.d_bar().cwiseProduct(s);
}

Eigen::MatrixXd oriented_completion(const Eigen::MatrixXd& x) {
  if (x.cols() >= x.rows())
    throw DomainError("oriented_completion: need k < n");
  auto signed_q = positive_diagonal_q(x);
  if (signed_q.det < 0) signed_q.q.col(signed_q.q.cols() - 1) *= -1.0;
  return std::move(signed_q.q);
}

ConditionalHaar conditional_haar_so(const Eigen::MatrixXd& a,
                                    const Eigen::MatrixXd& b,
                                    std::uint64_t seed) {
  const auto n = a.rows();
  const auto k = a.cols();
  if (b.rows() != n || b.cols() != k)
    throw DimensionError("conditional_haar_so: A and B must have equal shape");
  if (k >= n) throw DomainError("conditional_haar_so: need k < n");

  ConditionalHaar out;
  if (k == 0) {
    out.rotation = haar_so(static_cast<std::size_t>(n), seed);
    out.a_perp = out.b_perp = Eigen::MatrixXd::Identity(n, n);
    out.residual = out.rotation;
    return out;
  }

  const Eigen::MatrixXd gram_a = a.transpose() * a;
  const Eigen::MatrixXd gram_b = b.transpose() * b;
  const double scale = std::max(1.0, gram_a.cwiseAbs().maxCoeff());
  if ((gram_a - gram_b).cwiseAbs().maxCoeff() > 1e-8 * scale)
    throw DomainError("conditional_haar_so: A^T A and B^T B differ; no "
                      "rotation maps B to A");

  const Eigen::MatrixXd va = oriented_completion(a);
  const Eigen::MatrixXd vb = oriented_completion(b);
  out.a_perp = va.rightCols(n - k);
  out.b_perp = vb.rightCols(n - k);
  out.residual = haar_so(static_cast<std::size_t>(n - k), seed);
  out.rotation = a * gram_a.ldlt().solve(b.transpose()) +
                 out.a_perp * out.residual * out.b_perp.transpose();
  return out;
}

std::string instance_to_json(const ModelInstance& instance) {
  const auto n = static_cast<Eigen::Index>(instance.n());
  nlohmann::json j;
  j["format"] = "tapspin.instance/1";
  j["n"] = instance.n();
  j["beta"] = instance.beta();
  j["seed"] = instance.seed();
  j["field_sampled"] = instance.field_sampled();
  j["d_bar"] = std::vector<double>(instance.d_bar().data(),
                                   instance.d_bar().data() + n);
  j["h"] = std::vector<double>(instance.field().data(),
                               instance.field().data() + n);
  std::vector<double> o;
  o.reserve(static_cast<std::size_t>(n * n));
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) o.push_back(instance.rotation()(r, c));
  j["O"] = std::move(o);
  return j.dump();
}

ModelInstance instance_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("instance: invalid JSON: ") + e.what());
  }
  if (j.value("format", std::string{}) != "tapspin.instance/1")
    throw DomainError("instance: unknown format tag");
  try {
    const auto n = j.at("n").get<std::size_t>();
    const auto d = j.at("d_bar").get<std::vector<double>>();
    const auto h = j.at("h").get<std::vector<double>>();
    const auto o = j.at("O").get<std::vector<double>>();
    if (d.size() != n || h.size() != n || o.size() != n * n)
      throw DimensionError("instance: array lengths do not match n");
    const auto m = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd rot(m, m);
    for (Eigen::Index r = 0; r < m; ++r)
      for (Eigen::Index c = 0; c < m; ++c)
        rot(r, c) = o[static_cast<std::size_t>(r * m + c)];
    return ModelInstance(j.at("beta").get<double>(),
                         Eigen::Map<const Eigen::VectorXd>(d.data(), m),
                         std::move(rot),
                         Eigen::Map<const Eigen::VectorXd>(h.data(), m),
                         j.at("seed").get<std::uint64_t>(),
                         j.value("field_sampled", false));
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("instance: malformed record: ") + e.what());
  }
}

void save_instance(const ModelInstance& instance, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("save_instance: cannot open " + path);
  out << instance_to_json(instance) << '\n';
  if (!out) throw IoError("save_instance: write failed for " + path);
}

ModelInstance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_instance: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return instance_from_json(buf.str());
}

}  // namespace tapspin
