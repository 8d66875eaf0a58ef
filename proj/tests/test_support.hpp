#pragma once

// Independent oracles for the unit and acceptance tests. Nothing here calls
// into the library's numerical routines.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

namespace tapspin::testing {

// Composite Simpson rule with `intervals` (even) subintervals.
inline double simpson(const std::function<double(double)>& f, double a,
                      double b, int intervals = 2000) {
  if (intervals % 2) ++intervals;
  const double h = (b - a) / intervals;
  double s = f(a) + f(b);
  for (int i = 1; i < intervals; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

// E[f(Z)], Z ~ N(0, 1), by Simpson on [-12, 12].
inline double normal_expectation(const std::function<double(double)>& f,
                                 int intervals = 4000) {
  const double c = 1.0 / std::sqrt(2.0 * M_PI);
  return simpson([&](double z) { return f(z) * c * std::exp(-0.5 * z * z); },
                 -12.0, 12.0, intervals);
}

// Smallest root of F(q) = q on [0, 1) found by scanning with `step` and
// refining the first sign change of F(q) - q by bisection.
inline double scan_fixed_point(const std::function<double(double)>& map,
                               double step = 1e-5) {
  double prev_q = 0.0;
  double prev = map(0.0) - 0.0;
  if (prev == 0.0) return 0.0;
  for (double q = step; q < 1.0; q += step) {
    const double cur = map(q) - q;
    if ((prev > 0) != (cur > 0)) {
      double lo = prev_q, hi = q;
      for (int i = 0; i < 100; ++i) {
        const double mid = 0.5 * (lo + hi);
        if ((map(mid) - mid > 0) == (prev > 0)) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      return 0.5 * (lo + hi);
    }
    prev_q = q;
    prev = cur;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

struct NaiveGibbs {
  double log_z;
  Eigen::VectorXd magnetization;
  std::vector<double> probabilities;  // state index bits: bit b set -> -1
};

// Direct 2^n sum with the energy recomputed from scratch for every state.
inline NaiveGibbs naive_gibbs(const Eigen::MatrixXd& j,
                              const Eigen::VectorXd& h) {
  const auto n = h.size();
  const std::uint64_t total = std::uint64_t{1} << n;
  std::vector<double> energy(total);
  double e_max = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd s(n);
  for (std::uint64_t k = 0; k < total; ++k) {
    for (Eigen::Index b = 0; b < n; ++b) s[b] = (k >> b) & 1 ? -1.0 : 1.0;
    energy[k] = 0.5 * s.dot(j * s) + h.dot(s);
    e_max = std::max(e_max, energy[k]);
  }
  NaiveGibbs out{0.0, Eigen::VectorXd::Zero(n), std::vector<double>(total)};
  double z = 0.0;
  for (std::uint64_t k = 0; k < total; ++k) {
    out.probabilities[k] = std::exp(energy[k] - e_max);
    z += out.probabilities[k];
  }
  for (std::uint64_t k = 0; k < total; ++k) {
    out.probabilities[k] /= z;
    for (Eigen::Index b = 0; b < n; ++b)
      out.magnetization[b] += out.probabilities[k] * ((k >> b) & 1 ? -1.0 : 1.0);
  }
  out.log_z = e_max + std::log(z);
  return out;
}

// Kolmogorov survival function Q(x) = 2 sum_k (-1)^{k-1} exp(-2 k^2 x^2).
inline double kolmogorov_q(double x) {
  if (x < 1e-3) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sum += (k % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct KsResult {
  double statistic;
  double p_value;
};

// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value
// (Stephens' small-sample correction of the argument).
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, k = 0;
  double d = 0.0;
  while (i < a.size() && k < b.size()) {
    const double x = std::min(a[i], b[k]);
    while (i < a.size() && a[i] <= x) ++i;
    while (k < b.size() && b[k] <= x) ++k;
    d = std::max(d, std::abs(i / na - k / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  return {d, kolmogorov_q((ne + 0.12 + 0.11 / ne) * d)};
}

}  // namespace tapspin::testing

namespace tapspin::testing {

// One-sample Kolmogorov-Smirnov test against a continuous CDF.
inline KsResult ks_one_sample(std::vector<double> x,
                              const std::function<double(double)>& cdf) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  const double sn = std::sqrt(n);
  return {d, kolmogorov_q((sn + 0.12 + 0.11 / sn) * d)};
}

// Mean and standard error of a sample.
inline std::pair<double, double> mean_and_se(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  s /= static_cast<double>(v.size() - 1);
  return {m, std::sqrt(s / static_cast<double>(v.size()))};
}

}  // namespace tapspin::testing
