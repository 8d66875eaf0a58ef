#include "tapspin/gibbs.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>
#include <thread>

#include "tapspin/errors.hpp"
#include "tapspin/rng.hpp"

namespace tapspin {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_problem(const Eigen::MatrixXd& jbar, const Eigen::VectorXd& h) {
  if (jbar.rows() != jbar.cols() || jbar.rows() != h.size() || h.size() < 1)
    throw DimensionError("gibbs: coupling matrix and field disagree in size");
}

void guard_enumeration(std::size_t n, std::size_t limit, const char* what) {
  if (n > limit)
    throw SizeGuardError(std::string(what) + ": n = " + std::to_string(n) +
                         " exceeds the enumeration limit " +
                         std::to_string(limit));
}

// Spin b is -1 when bit b is set.
inline double spin_of(std::uint32_t bits, Eigen::Index b) {
  return (bits >> b) & 1u ? -1.0 : 1.0;
}

// Visits every state of {-1,1}^n in Gray-code order. The sequence is split
// into a fixed number of segments (independent of thread count); each
// segment recomputes its starting state exactly and then updates the field
// f = J sigma and the energy under single flips. Visitors of different
// segments are merged in segment order.
template <class Visitor>
Visitor enumerate_states(const Eigen::MatrixXd& jbar, const Eigen::VectorXd& h,
                         const Visitor& proto, unsigned threads) {
  const auto n = h.size();
  const std::uint64_t total = std::uint64_t{1} << n;
  const int seg_log = static_cast<int>(std::min<Eigen::Index>(n, 6));
  const std::uint64_t segments = std::uint64_t{1} << seg_log;
  const std::uint64_t length = total / segments;

  std::vector<Visitor> parts(segments, proto);
  auto run_segment = [&](std::uint64_t k) {
    Visitor& vis = parts[k];
    const std::uint64_t i0 = k * length;
    auto bits = static_cast<std::uint32_t>(i0 ^ (i0 >> 1));
    Eigen::VectorXd sigma(n);
    for (Eigen::Index b = 0; b < n; ++b) sigma[b] = spin_of(bits, b);
    Eigen::VectorXd f = jbar * sigma;
    double energy = 0.5 * sigma.dot(f) + h.dot(sigma);
    vis.visit(bits, sigma, energy);
    for (std::uint64_t i = i0 + 1; i < i0 + length; ++i) {
      const auto b = static_cast<Eigen::Index>(std::countr_zero(i));
      const double s = sigma[b];
      energy += -2.0 * s * f[b] + 2.0 * jbar(b, b) - 2.0 * h[b] * s;
      f.noalias() -= (2.0 * s) * jbar.col(b);
      sigma[b] = -s;
      bits ^= std::uint32_t{1} << b;
      vis.visit(bits, sigma, energy);
    }
  };

  const unsigned workers =
      std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(segments)));
  if (workers == 1) {
    for (std::uint64_t k = 0; k < segments; ++k) run_segment(k);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::uint64_t k = w; k < segments; k += workers) run_segment(k);
      });
    for (auto& t : pool) t.join();
  }
  Visitor out = std::move(parts[0]);
  for (std::uint64_t k = 1; k < segments; ++k) out.merge(parts[k]);
  return out;
}

// Streaming log-sum-exp with optional first and second moment sums.
struct GibbsAccumulator {
  double max = kNegInf;
  double sum = 0.0;
  Eigen::VectorXd first;
  Eigen::MatrixXd second;
  bool with_second = false;

  void rescale_to(double new_max) {
    if (max == kNegInf) {
      max = new_max;
      return;
    }
    const double c = std::exp(max - new_max);
    sum *= c;
    first *= c;
    if (with_second) second *= c;
    max = new_max;
  }

  void visit(std::uint32_t, const Eigen::VectorXd& sigma, double energy) {
    if (energy > max) rescale_to(energy);
    const double w = std::exp(energy - max);
    sum += w;
    first.noalias() += w * sigma;
    if (with_second) second.noalias() += w * sigma * sigma.transpose();
  }

  void merge(GibbsAccumulator& other) {
    if (other.max == kNegInf) return;
    if (other.max > max) rescale_to(other.max);
    const double c = std::exp(other.max - max);
    sum += c * other.sum;
    first += c * other.first;
    if (with_second) second += c * other.second;
  }

  double log_total() const {
    return sum > 0.0 ? max + std::log(sum) : kNegInf;
  }
};

// Log-sum-exp restricted to Band(m, delta).
struct BandAccumulator {
  const Eigen::VectorXd* center = nullptr;
  double m_sq = 0.0;
  double threshold = 0.0;  // n * delta
  GibbsAccumulator acc;

  void visit(std::uint32_t bits, const Eigen::VectorXd& sigma, double energy) {
    if (std::abs(center->dot(sigma) - m_sq) < threshold)
      acc.visit(bits, sigma, energy);
  }
  void merge(BandAccumulator& other) { acc.merge(other.acc); }
};

struct BandState {
  std::uint32_t bits;
  double energy;
  double m_dot;
};

struct BandCollector {
  const Eigen::VectorXd* center = nullptr;
  double m_sq = 0.0;
  double threshold = 0.0;
  std::vector<BandState> states;

  void visit(std::uint32_t bits, const Eigen::VectorXd& sigma, double energy) {
    const double md = center->dot(sigma);
    if (std::abs(md - m_sq) < threshold) states.push_back({bits, energy, md});
  }
  void merge(BandCollector& other) {
    states.insert(states.end(), other.states.begin(), other.states.end());
  }
};

void check_band(const BandSpec& band, Eigen::Index n) {
  if (band.center.size() != n)
    throw DimensionError("band: center has wrong length");
  if (!(band.delta > 0.0)) throw DomainError("band: delta must be > 0");
}

double overlap(const Eigen::VectorXd& sigma, const Eigen::VectorXd& tau,
               const Eigen::VectorXd& m) {
  return (sigma - m).dot(tau - m) / static_cast<double>(m.size());
}

void heat_bath_sweep(const Eigen::MatrixXd& jbar, const Eigen::VectorXd& h,
                     Eigen::VectorXd& sigma, Eigen::VectorXd& f, Rng& rng) {
  const auto n = sigma.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double local = f[i] - jbar(i, i) * sigma[i] + h[i];
    const double p_up = 1.0 / (1.0 + std::exp(-2.0 * local));
    const double next = uniform01(rng) < p_up ? 1.0 : -1.0;
    if (next != sigma[i]) {
      f.noalias() += (next - sigma[i]) * jbar.col(i);
      sigma[i] = next;
    }
  }
}

}  // namespace

GibbsExact exact_gibbs(const Eigen::MatrixXd& jbar, const Eigen::VectorXd& h,
                       bool with_correlation, unsigned threads) {
  check_problem(jbar, h);
  const auto n = h.size();
  guard_enumeration(static_cast<std::size_t>(n), kMaxEnumerationN,
                    "exact_gibbs");
  GibbsAccumulator proto;
  proto.first = Eigen::VectorXd::Zero(n);
  proto.with_second = with_correlation;
  if (with_correlation) proto.second = Eigen::MatrixXd::Zero(n, n);
  const auto acc = enumerate_states(jbar, h, proto, threads);

  GibbsExact out;
  out.log_z = acc.log_total();
  out.magnetization = acc.first / acc.sum;
  if (with_correlation) out.correlation = acc.second / acc.sum;
  return out;
}

GibbsExact exact_gibbs(const ModelInstance& instance, bool with_correlation,
                       unsigned threads) {
  guard_enumeration(instance.n(), kMaxEnumerationN, "exact_gibbs");
  return exact_gibbs(instance.coupling_matrix(), instance.field(),
                     with_correlation, threads);
}

ReplicaSet::ReplicaSet(std::size_t n, std::size_t chains,
                       std::size_t samples_per_chain)
    : n_(n),
      chains_(chains),
      samples_(samples_per_chain),
      spins_(n * chains * samples_per_chain, 1) {}

std::int8_t* ReplicaSet::sample_data(std::size_t chain, std::size_t sample) {
  return spins_.data() + (chain * samples_ + sample) * n_;
}

const std::int8_t* ReplicaSet::sample_data(std::size_t chain,
                                           std::size_t sample) const {
  return spins_.data() + (chain * samples_ + sample) * n_;
}

Eigen::VectorXd ReplicaSet::replica(std::size_t chain,
                                    std::size_t sample) const {
  if (chain >= chains_ || sample >= samples_)
    throw DomainError("ReplicaSet::replica: index out of range");
  const std::int8_t* p = sample_data(chain, sample);
  Eigen::VectorXd v(static_cast<Eigen::Index>(n_));
  for (std::size_t i = 0; i < n_; ++i) v[static_cast<Eigen::Index>(i)] = p[i];
  return v;
}

std::vector<Eigen::VectorXd> ReplicaSet::replicas_at(std::size_t sample) const {
  std::vector<Eigen::VectorXd> out;
  out.reserve(chains_);
  for (std::size_t c = 0; c < chains_; ++c) out.push_back(replica(c, sample));
  return out;
}

std::vector<Eigen::VectorXd> ReplicaSet::final_replicas() const {
  if (samples_ == 0) throw DomainError("ReplicaSet: no samples recorded");
  return replicas_at(samples_ - 1);
}

ReplicaSet glauber_sample(const Eigen::MatrixXd& jbar,
                          const Eigen::VectorXd& h, std::size_t sweeps,
                          std::size_t burn_in, std::size_t thin,
                          std::size_t chains, std::uint64_t seed) {
  check_problem(jbar, h);
  if (sweeps < 1 || thin < 1 || chains < 1)
    throw DomainError("glauber_sample: sweeps, thin and chains must be >= 1");
  const auto n = h.size();
  ReplicaSet out(static_cast<std::size_t>(n), chains, sweeps / thin);
  out.sweeps = sweeps;
  out.burn_in = burn_in;
  out.thin = thin;
  out.seed = seed;

  for (std::size_t c = 0; c < chains; ++c) {
    Rng rng(derive_seed(seed, c, Stream::mcmc));
    Eigen::VectorXd sigma(n);
    for (Eigen::Index i = 0; i < n; ++i)
      sigma[i] = uniform01(rng) < 0.5 ? -1.0 : 1.0;
    Eigen::VectorXd f = jbar * sigma;
    for (std::size_t s = 0; s < burn_in; ++s)
      heat_bath_sweep(jbar, h, sigma, f, rng);
    std::size_t recorded = 0;
    for (std::size_t s = 1; s <= sweeps; ++s) {
      heat_bath_sweep(jbar, h, sigma, f, rng);
      if (s % 256 == 0) f.noalias() = jbar * sigma;  // drop accumulated drift
      if (s % thin == 0 && recorded < out.samples_per_chain()) {
        std::int8_t* p = out.sample_data(c, recorded++);
        for (Eigen::Index i = 0; i < n; ++i)
          p[i] = static_cast<std::int8_t>(sigma[i]);
      }
    }
  }
  return out;
}

ReplicaSet glauber_sample(const ModelInstance& instance, std::size_t sweeps,
                          std::size_t burn_in, std::size_t thin,
                          std::size_t chains, std::uint64_t seed) {
  return glauber_sample(instance.coupling_matrix(), instance.field(), sweeps,
                        burn_in, thin, chains, seed);
}

SiteMarginals mcmc_marginals(const ReplicaSet& replicas) {
  const auto n = static_cast<Eigen::Index>(replicas.n());
  const std::size_t per_chain = replicas.samples_per_chain();
  if (per_chain == 0) throw DomainError("mcmc_marginals: no samples");
  const std::size_t batches_per_chain = std::min<std::size_t>(20, per_chain);
  const std::size_t batch_len = per_chain / batches_per_chain;

  std::vector<Eigen::VectorXd> batch_means;
  for (std::size_t c = 0; c < replicas.chains(); ++c)
    for (std::size_t b = 0; b < batches_per_chain; ++b) {
      Eigen::VectorXd acc = Eigen::VectorXd::Zero(n);
      for (std::size_t k = b * batch_len; k < (b + 1) * batch_len; ++k) {
        const std::int8_t* p = replicas.sample_data(c, k);
        for (Eigen::Index i = 0; i < n; ++i) acc[i] += p[i];
      }
      batch_means.push_back(acc / static_cast<double>(batch_len));
    }
  const double nb = static_cast<double>(batch_means.size());
  SiteMarginals out;
  out.mean = Eigen::VectorXd::Zero(n);
  for (const auto& b : batch_means) out.mean += b;
  out.mean /= nb;
  out.std_error = Eigen::VectorXd::Zero(n);
  if (batch_means.size() > 1) {
    for (const auto& b : batch_means)
      out.std_error += (b - out.mean).cwiseAbs2();
    out.std_error = (out.std_error / (nb - 1.0) / nb).cwiseSqrt();
  }
  return out;
}

MagnetizationEstimate estimate_magnetization(
    const std::vector<Eigen::VectorXd>& replicas,
    const std::optional<Eigen::VectorXd>& exact) {
  if (replicas.empty())
    throw DomainError("estimate_magnetization: no replicas");
  MagnetizationEstimate out;
  out.average = Eigen::VectorXd::Zero(replicas.front().size());
  for (const auto& r : replicas) out.average += r;
  out.average /= static_cast<double>(replicas.size());
  if (exact) {
    if (exact->size() != out.average.size())
      throw DimensionError("estimate_magnetization: exact has wrong length");
    out.sq_distance = (out.average - *exact).squaredNorm() /
                      static_cast<double>(out.average.size());
  }
  return out;
}

MagnetizationEstimate estimate_magnetization(
    const ReplicaSet& replicas, const std::optional<Eigen::VectorXd>& exact) {
  return estimate_magnetization(replicas.final_replicas(), exact);
}

bool band_membership(const Eigen::VectorXd& sigma, const BandSpec& band) {
  check_band(band, sigma.size());
  const double n = static_cast<double>(sigma.size());
  return std::abs(band.center.dot(sigma - band.center) / n) < band.delta;
}

bool pair_nonorthogonal(const Eigen::VectorXd& sigma,
                        const Eigen::VectorXd& tau, const BandSpec& band) {
  if (tau.size() != sigma.size())
    throw DimensionError("pair_nonorthogonal: length mismatch");
  return band_membership(sigma, band) && band_membership(tau, band) &&
         std::abs(overlap(sigma, tau, band.center)) > band.eta;
}

bool b_n_membership(const std::vector<Eigen::VectorXd>& replicas,
                    const BandSpec& band) {
  for (const auto& r : replicas)
    if (!band_membership(r, band)) return false;
  for (std::size_t i = 0; i < replicas.size(); ++i)
    for (std::size_t j = i + 1; j < replicas.size(); ++j)
      if (std::abs(overlap(replicas[i], replicas[j], band.center)) > band.eta)
        return false;
  return true;
}

double restricted_logZ_band(const Eigen::MatrixXd& jbar,
                            const Eigen::VectorXd& h, const BandSpec& band,
                            unsigned threads) {
  check_problem(jbar, h);
  check_band(band, h.size());
  guard_enumeration(static_cast<std::size_t>(h.size()), kMaxEnumerationN,
                    "restricted_logZ_band");
  BandAccumulator proto;
  proto.center = &band.center;
  proto.m_sq = band.center.squaredNorm();
  proto.threshold = static_cast<double>(h.size()) * band.delta;
  proto.acc.first = Eigen::VectorXd::Zero(h.size());
  return enumerate_states(jbar, h, proto, threads).acc.log_total();
}

double restricted_logZ_band(const ModelInstance& instance,
                            const BandSpec& band, unsigned threads) {
  guard_enumeration(instance.n(), kMaxEnumerationN, "restricted_logZ_band");
  return restricted_logZ_band(instance.coupling_matrix(), instance.field(),
                              band, threads);
}

double restricted_logZ_nonorth_pairs(const Eigen::MatrixXd& jbar,
                                     const Eigen::VectorXd& h,
                                     const BandSpec& band) {
  check_problem(jbar, h);
  check_band(band, h.size());
  guard_enumeration(static_cast<std::size_t>(h.size()), kMaxPairEnumerationN,
                    "restricted_logZ_nonorth_pairs");
  BandCollector proto;
  proto.center = &band.center;
  proto.m_sq = band.center.squaredNorm();
  proto.threshold = static_cast<double>(h.size()) * band.delta;
  const auto states = enumerate_states(jbar, h, proto, 1).states;
  if (states.empty()) return kNegInf;

  const double n = static_cast<double>(h.size());
  const double m_sq = proto.m_sq;
  const double cut = band.eta * n;
  double e_max = kNegInf;
  for (const auto& s : states) e_max = std::max(e_max, s.energy);
  // <sigma - m, tau - m> = sigma.tau - m.sigma - m.tau + |m|^2 with
  // sigma.tau = n - 2 popcount(bits xor).
  double sum = 0.0;
  for (const auto& a : states) {
    const double wa = std::exp(a.energy - e_max);
    double row = 0.0;
    for (const auto& b : states) {
      const double dot = n - 2.0 * std::popcount(a.bits ^ b.bits);
      const double ov = dot - a.m_dot - b.m_dot + m_sq;
      if (std::abs(ov) > cut) row += std::exp(b.energy - e_max);
    }
    sum += wa * row;
  }
  return sum > 0.0 ? 2.0 * e_max + std::log(sum) : kNegInf;
}

double restricted_logZ_nonorth_pairs(const ModelInstance& instance,
                                     const BandSpec& band) {
  guard_enumeration(instance.n(), kMaxPairEnumerationN,
                    "restricted_logZ_nonorth_pairs");
  return restricted_logZ_nonorth_pairs(instance.coupling_matrix(),
                                       instance.field(), band);
}

SampledEstimate estimate_log_nonorth_ratio(const ReplicaSet& replicas,
                                           const BandSpec& band) {
  check_band(band, static_cast<Eigen::Index>(replicas.n()));
  if (replicas.chains() < 2)
    throw DomainError("estimate_log_nonorth_ratio: need at least two chains");
  std::size_t singles = 0, in_band = 0, pairs = 0, hits = 0;
  for (std::size_t k = 0; k < replicas.samples_per_chain(); ++k) {
    const auto set = replicas.replicas_at(k);
    std::vector<char> inside(set.size());
    for (std::size_t i = 0; i < set.size(); ++i) {
      inside[i] = band_membership(set[i], band);
      ++singles;
      in_band += inside[i] ? 1 : 0;
    }
    for (std::size_t i = 0; i < set.size(); ++i)
      for (std::size_t j = 0; j < set.size(); ++j) {
        if (i == j) continue;
        ++pairs;
        if (inside[i] && inside[j] &&
            std::abs(overlap(set[i], set[j], band.center)) > band.eta)
          ++hits;
      }
  }
  SampledEstimate out;
  out.trials = pairs;
  out.hits = hits;
  const double fb = static_cast<double>(in_band) / static_cast<double>(singles);
  const double fc = static_cast<double>(hits) / static_cast<double>(pairs);
  if (hits == 0 || in_band == 0) {
    out.value = kNegInf;
    out.std_error = std::numeric_limits<double>::infinity();
    return out;
  }
  out.value = std::log(fc) - 2.0 * std::log(fb);
  const double se_c = std::sqrt((1.0 - fc) / (fc * static_cast<double>(pairs)));
  const double se_b =
      std::sqrt((1.0 - fb) / (fb * static_cast<double>(singles)));
  out.std_error = std::sqrt(se_c * se_c + 4.0 * se_b * se_b);
  return out;
}

SampledEstimate restricted_logZ_nonorth_pairs_sampled(
    const ModelInstance& instance, const BandSpec& band,
    const ReplicaSet& replicas, unsigned threads) {
  if (replicas.n() != instance.n())
    throw DimensionError("restricted_logZ_nonorth_pairs_sampled: replicas do "
                         "not match the instance");
  SampledEstimate est = estimate_log_nonorth_ratio(replicas, band);
  est.value += 2.0 * restricted_logZ_band(instance, band, threads);
  return est;
}

ReplicaGeometry replica_geometry_report(
    const std::vector<std::vector<Eigen::VectorXd>>& sets,
    const BandSpec& band) {
  ReplicaGeometry g;
  g.sets = sets.size();
  if (sets.empty()) return g;
  g.replicas_per_set = sets.front().size();
  std::size_t singles = 0, in_band = 0, pairs = 0, bad_pairs = 0, in_bn = 0;
  double dist_sum = 0.0;
  for (const auto& set : sets) {
    if (set.empty()) throw DomainError("replica_geometry_report: empty set");
    for (const auto& r : set) {
      ++singles;
      in_band += band_membership(r, band) ? 1 : 0;
    }
    for (std::size_t i = 0; i < set.size(); ++i)
      for (std::size_t j = i + 1; j < set.size(); ++j) {
        ++pairs;
        if (std::abs(overlap(set[i], set[j], band.center)) > band.eta)
          ++bad_pairs;
      }
    in_bn += b_n_membership(set, band) ? 1 : 0;
    const auto est = estimate_magnetization(set, band.center);
    dist_sum += *est.sq_distance;
    g.max_distance = std::max(g.max_distance, *est.sq_distance);
  }
  g.band_fraction = static_cast<double>(in_band) / static_cast<double>(singles);
  g.nonorth_pair_fraction =
      pairs ? static_cast<double>(bad_pairs) / static_cast<double>(pairs) : 0.0;
  g.b_n_fraction = static_cast<double>(in_bn) / static_cast<double>(sets.size());
  g.mean_distance = dist_sum / static_cast<double>(sets.size());
  return g;
}

ReplicaGeometry replica_geometry_report(const ReplicaSet& replicas,
                                        const BandSpec& band) {
  std::vector<std::vector<Eigen::VectorXd>> sets;
  for (std::size_t k = 0; k < replicas.samples_per_chain(); ++k)
    sets.push_back(replicas.replicas_at(k));
  return replica_geometry_report(sets, band);
}

}  // namespace tapspin
