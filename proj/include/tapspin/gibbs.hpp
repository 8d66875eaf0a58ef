#pragma once

// Gibbs measure P(sigma) ~ exp(1/2 sigma^T Jbar sigma + h^T sigma) on
// {-1, +1}^n: exact enumeration, heat-bath sampling of replicas, and the
// partition functions restricted to bands around a center m.

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "tapspin/ensemble.hpp"

namespace tapspin {

inline constexpr std::size_t kMaxEnumerationN = 24;
inline constexpr std::size_t kMaxPairEnumerationN = 12;

struct GibbsExact {
  double log_z = 0.0;
  Eigen::VectorXd magnetization;
  std::optional<Eigen::MatrixXd> correlation;  // <sigma sigma^T>
};

// Exact enumeration in Gray-code order, O(n) work per state. The diagonal of
// Jbar is kept (it adds the constant tr(Jbar)/2 to every energy).
GibbsExact exact_gibbs(const ModelInstance& instance,
                       bool with_correlation = false, unsigned threads = 1);
GibbsExact exact_gibbs(const Eigen::MatrixXd& jbar, const Eigen::VectorXd& h,
                       bool with_correlation = false, unsigned threads = 1);

// N independent heat-bath chains. Chain c records a sample every `thin`
// sweeps during `sweeps` sweeps that follow `burn_in` sweeps.
class ReplicaSet {
 public:
  ReplicaSet(std::size_t n, std::size_t chains, std::size_t samples_per_chain);

  std::size_t n() const { return n_; }
  std::size_t chains() const { return chains_; }
  std::size_t samples_per_chain() const { return samples_; }

  std::int8_t* sample_data(std::size_t chain, std::size_t sample);
  const std::int8_t* sample_data(std::size_t chain, std::size_t sample) const;
  Eigen::VectorXd replica(std::size_t chain, std::size_t sample) const;
  // One replica per chain at a common sample index; defaults to the last.
  std::vector<Eigen::VectorXd> replicas_at(std::size_t sample) const;
  std::vector<Eigen::VectorXd> final_replicas() const;

  std::size_t sweeps = 0, burn_in = 0, thin = 1;
  std::uint64_t seed = 0;

 private:
  std::size_t n_, chains_, samples_;
  std::vector<std::int8_t> spins_;
};

ReplicaSet glauber_sample(const ModelInstance& instance, std::size_t sweeps,
                          std::size_t burn_in, std::size_t thin,
                          std::size_t chains, std::uint64_t seed);
ReplicaSet glauber_sample(const Eigen::MatrixXd& jbar,
                          const Eigen::VectorXd& h, std::size_t sweeps,
                          std::size_t burn_in, std::size_t thin,
                          std::size_t chains, std::uint64_t seed);

// Time-averaged single-site marginals over every recorded sample, with
// batch-means standard errors (batches are per chain, 20 per chain).
struct SiteMarginals {
  Eigen::VectorXd mean;
  Eigen::VectorXd std_error;
};
SiteMarginals mcmc_marginals(const ReplicaSet& replicas);

struct MagnetizationEstimate {
  Eigen::VectorXd average;              // (1/N) sum_i sigma^i
  std::optional<double> sq_distance;    // (1/n) |average - <sigma>|^2
};

MagnetizationEstimate estimate_magnetization(
    const std::vector<Eigen::VectorXd>& replicas,
    const std::optional<Eigen::VectorXd>& exact = std::nullopt);
MagnetizationEstimate estimate_magnetization(
    const ReplicaSet& replicas,
    const std::optional<Eigen::VectorXd>& exact = std::nullopt);

struct BandSpec {
  Eigen::VectorXd center;  // m in [-1, 1]^n
  double delta = 0.1;
  double eta = 0.4;
};

// |m^T (sigma - m) / n| < delta.
bool band_membership(const Eigen::VectorXd& sigma, const BandSpec& band);
// Both in the band and |<sigma - m, tau - m> / n| > eta.
bool pair_nonorthogonal(const Eigen::VectorXd& sigma,
                        const Eigen::VectorXd& tau, const BandSpec& band);
// Every replica in the band and |<sigma^i - m, sigma^j - m> / n| <= eta for
// all i != j.
bool b_n_membership(const std::vector<Eigen::VectorXd>& replicas,
                    const BandSpec& band);

// log of the sum of exp(H) over the band; n <= 24.
double restricted_logZ_band(const ModelInstance& instance,
                            const BandSpec& band, unsigned threads = 1);
double restricted_logZ_band(const Eigen::MatrixXd& jbar,
                            const Eigen::VectorXd& h, const BandSpec& band,
                            unsigned threads = 1);

// log of the sum of exp(H(sigma) + H(tau)) over non-orthogonal pairs in the
// band; exact enumeration of the 4^n pairs, n <= 12. -inf if empty.
double restricted_logZ_nonorth_pairs(const ModelInstance& instance,
                                     const BandSpec& band);
double restricted_logZ_nonorth_pairs(const Eigen::MatrixXd& jbar,
                                     const Eigen::VectorXd& h,
                                     const BandSpec& band);

struct SampledEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t trials = 0;
  std::size_t hits = 0;
};

// log(Z_c / Z_B^2) from pairs of independent replicas: the non-orthogonal
// pair frequency over the squared band frequency.
SampledEstimate estimate_log_nonorth_ratio(const ReplicaSet& replicas,
                                           const BandSpec& band);

// Z_c for n beyond the pair-enumeration guard: 2 log Z_B (exact, n <= 24)
// plus the sampled log ratio.
SampledEstimate restricted_logZ_nonorth_pairs_sampled(
    const ModelInstance& instance, const BandSpec& band,
    const ReplicaSet& replicas, unsigned threads = 1);

struct ReplicaGeometry {
  std::size_t sets = 0;               // replica sets (one per sample index)
  std::size_t replicas_per_set = 0;
  double band_fraction = 0.0;         // replicas inside Band(m, delta)
  double nonorth_pair_fraction = 0.0; // pairs i < j with |overlap| > eta
  double b_n_fraction = 0.0;          // sets inside B_N(m, delta, eta)
  double mean_distance = 0.0;         // mean of (1/n)|avg_i sigma^i - m|^2
  double max_distance = 0.0;
};

ReplicaGeometry replica_geometry_report(const ReplicaSet& replicas,
                                        const BandSpec& band);
ReplicaGeometry replica_geometry_report(
    const std::vector<std::vector<Eigen::VectorXd>>& sets,
    const BandSpec& band);

}  // namespace tapspin
