#pragma once

// Disorder realizations J = O^T D O with O Haar on SO(n), plus the
// conditional Haar sampler on {O : O B = A}.

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <string>

#include "tapspin/field.hpp"
#include "tapspin/spectral.hpp"

namespace tapspin {

// One disorder realization of the rescaled model
//   P(sigma) ~ exp(1/2 sigma^T Jbar sigma + h^T sigma),  Jbar = O^T Dbar O.
// Jbar is held in factored form (O, dbar).
class ModelInstance {
 public:
  ModelInstance(double beta, Eigen::VectorXd d_bar, Eigen::MatrixXd rotation,
                Eigen::VectorXd field, std::uint64_t seed,
                bool field_sampled = false);

  std::size_t n() const { return static_cast<std::size_t>(d_bar_.size()); }
  double beta() const { return beta_; }
  const Eigen::VectorXd& d_bar() const { return d_bar_; }
  const Eigen::MatrixXd& rotation() const { return rotation_; }
  const Eigen::VectorXd& field() const { return field_; }
  std::uint64_t seed() const { return seed_; }
  bool field_sampled() const { return field_sampled_; }

  // ||Dbar||_op.
  double d_bar_op_norm() const;

  // Dense Jbar. Only for small n (enumeration, MCMC, test oracles).
  Eigen::MatrixXd coupling_matrix() const;

 private:
  double beta_;
  Eigen::VectorXd d_bar_;
  Eigen::MatrixXd rotation_;
  Eigen::VectorXd field_;
  std::uint64_t seed_;
  bool field_sampled_;
};

enum class FieldMode { quantile, sampled };

// Haar on O(n): QR of an iid Gaussian matrix with R's diagonal made positive.
Eigen::MatrixXd haar_o(std::size_t n, std::uint64_t seed);

// Haar on SO(n): haar_o, with the last column negated when det = -1.
Eigen::MatrixXd haar_so(std::size_t n, std::uint64_t seed);

// Eigenvalues from quantiles of `law` (which must be standardized) times
// beta, field from quantiles of `field` (or iid draws in sampled mode), and O
// from haar_so. A pure function of its arguments.
ModelInstance build_instance(std::size_t n, double beta,
                             const SpectralLaw& law, const FieldLaw& field,
                             std::uint64_t seed,
                             FieldMode mode = FieldMode::quantile);

// Jbar v = O^T (dbar * (O v)).
Eigen::VectorXd apply_jbar(const ModelInstance& instance,
                           const Eigen::VectorXd& v);

struct ConditionalHaar {
  Eigen::MatrixXd rotation;   // O, with O B = A
  Eigen::MatrixXd a_perp;     // V_{A-perp}, n x (n-k)
  Eigen::MatrixXd b_perp;     // V_{B-perp}, n x (n-k)
  Eigen::MatrixXd residual;   // O-tilde ~ Haar(SO(n-k))
};

// Sample O ~ Haar(SO(n)) conditioned on O B = A:
//   O = A (A^T A)^{-1} B^T + V_{A-perp} O-tilde V_{B-perp}^T,
// with each basis (V_X, V_{X-perp}) taken from a positive-diagonal QR and
// completed to determinant +1.
ConditionalHaar conditional_haar_so(const Eigen::MatrixXd& a,
                                    const Eigen::MatrixXd& b,
                                    std::uint64_t seed);

// Orthonormal basis (V_X, V_{X-perp}) of R^n with det +1, V_X from the
// positive-diagonal reduced QR of x (n x k, full column rank, k < n).
Eigen::MatrixXd oriented_completion(const Eigen::MatrixXd& x);

// JSON persistence of (n, beta, dbar, O row-major, h, seed).
void save_instance(const ModelInstance& instance, const std::string& path);
ModelInstance load_instance(const std::string& path);
std::string instance_to_json(const ModelInstance& instance);
ModelInstance instance_from_json(const std::string& text);

}  // namespace tapspin
