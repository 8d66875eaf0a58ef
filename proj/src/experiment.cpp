#include "tapspin/experiment.hpp"

#include <fmt/format.h>
#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <thread>
#include <tuple>

#include "json.hpp"
#include "tapspin/amp.hpp"
#include "tapspin/errors.hpp"
#include "tapspin/fixed_point.hpp"
#include "tapspin/gibbs.hpp"
#include "tapspin/tap.hpp"

namespace tapspin {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void put_fixed_point(ResultRow& row, const FixedPoint& fp) {
  row.values["q_star"] = fp.q_star;
  row.values["sigma_star_sq"] = fp.sigma_star_sq;
  row.values["kappa_star"] = fp.kappa_star;
  row.values["delta_star"] = fp.delta_star;
  row.values["lambda_star"] = fp.lambda_star;
  row.values["a_star"] = fp.a_star;
  row.values["psi_rs"] = fp.psi_rs;
  row.values["fp_iterations"] = static_cast<double>(fp.iterations);
}

double sq_dist_per_site(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).squaredNorm() / static_cast<double>(a.size());
}

// Least-squares slope of log y against log x.
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double k = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (k * sxy - sx * sy) / (k * sxx - sx * sx);
}

void run_pipeline(const ExperimentConfig& c, ResultRow& row) {
  const SpectralLaw law = standardize(c.law);
  const FixedPoint fp = solve_fixed_point(row.beta, law, c.field);
  put_fixed_point(row, fp);
  if (c.kind == ExperimentKind::fixed_point) return;

  const std::size_t n = row.n;
  const auto inst = cell_instance(law, c.field, c.field_mode, n, row.beta, row.seed);
  auto stream = [&](Stream tag) {
    return cell_stream_seed(n, row.beta, row.seed, tag);
  };

  switch (c.kind) {
    case ExperimentKind::fixed_point:
      break;
    case ExperimentKind::amp: {
      const auto traj = run_amp(inst, fp, c.t_max, stream(Stream::amp_init));
      row.values["m_norm_sq"] = traj.m_norm_sq.back();
      row.values["y_diff_sq"] = traj.y_diff_sq.back();
      row.values["tap_residual"] = traj.tap_residual.back();
      row.series = traj.y_diff_sq;
      break;
    }
    case ExperimentKind::gibbs_exact: {
      const auto g = exact_gibbs(inst);
      row.values["log_z_per_site"] = g.log_z / static_cast<double>(n);
      row.values["free_energy_gap"] =
          g.log_z / static_cast<double>(n) - fp.psi_rs;
      row.values["m_norm_sq"] = g.magnetization.squaredNorm() / static_cast<double>(n);
      row.values["tap_residual"] = tap_residual(inst, fp, g.magnetization);
      break;
    }
    case ExperimentKind::gibbs_mcmc: {
      const auto reps = glauber_sample(inst, c.sweeps, c.burn_in, c.thin,
                                       c.chains, stream(Stream::mcmc));
      const auto marg = mcmc_marginals(reps);
      row.values["m_norm_sq"] = marg.mean.squaredNorm() / static_cast<double>(n);
      row.values["mcmc_max_se"] = marg.std_error.maxCoeff();
      row.values["tap_residual"] = tap_residual(inst, fp, marg.mean);
      if (n <= kMaxEnumerationN)
        row.values["mcmc_distance"] =
            sq_dist_per_site(marg.mean, exact_gibbs(inst).magnetization);
      break;
    }
    case ExperimentKind::tap_verify: {
      const auto g = exact_gibbs(inst);
      const auto traj = run_amp(inst, fp, c.t_max, stream(Stream::amp_init));
      row.series = magnetization_vs_amp(traj, g.magnetization);
      row.values["amp_distance"] = row.series.back();
      row.values["tap_residual"] = tap_residual(inst, fp, g.magnetization);
      row.values["log_z_per_site"] = g.log_z / static_cast<double>(n);
      break;
    }
    case ExperimentKind::concentration: {
      const auto exact = exact_gibbs(inst).magnetization;
      const std::size_t chains =
          *std::max_element(c.replica_counts.begin(), c.replica_counts.end());
      const auto reps = glauber_sample(inst, c.sweeps, c.burn_in, c.thin,
                                       chains, stream(Stream::mcmc));
      std::vector<double> counts;
      for (const auto big_n : c.replica_counts) {
        double acc = 0.0;
        for (std::size_t k = 0; k < reps.samples_per_chain(); ++k) {
          Eigen::VectorXd avg = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
          for (std::size_t ch = 0; ch < big_n; ++ch) avg += reps.replica(ch, k);
          acc += sq_dist_per_site(avg / static_cast<double>(big_n), exact);
        }
        row.series.push_back(acc / static_cast<double>(reps.samples_per_chain()));
        counts.push_back(static_cast<double>(big_n));
      }
      if (counts.size() >= 2)
        row.values["concentration_slope"] = log_log_slope(counts, row.series);
      break;
    }
    case ExperimentKind::band: {
      const auto traj = run_amp(inst, fp, c.t_max, stream(Stream::amp_init));
      BandSpec band{traj.final_magnetization(), c.band_delta, c.band_eta};
      const double dn = static_cast<double>(n);
      const double log_z = exact_gibbs(inst).log_z;
      const double log_zb = restricted_logZ_band(inst, band);
      row.values["log_z_per_site"] = log_z / dn;
      row.values["band_gap"] = (log_z - log_zb) / dn;
      const auto reps = glauber_sample(inst, c.sweeps, c.burn_in, c.thin,
                                       c.replicas, stream(Stream::mcmc));
      if (n <= kMaxPairEnumerationN) {
        row.values["nonorth_gap"] =
            (restricted_logZ_nonorth_pairs(inst, band) - 2.0 * log_zb) / dn;
      } else {
        const auto est = restricted_logZ_nonorth_pairs_sampled(inst, band, reps);
        row.values["nonorth_gap"] = (est.value - 2.0 * log_zb) / dn;
        row.values["nonorth_gap_se"] = est.std_error / dn;
      }
      const auto geo = replica_geometry_report(reps, band);
      row.values["band_fraction"] = geo.band_fraction;
      row.values["b_n_fraction"] = geo.b_n_fraction;
      row.values["replica_distance"] = geo.mean_distance;
      row.values["distance_bound"] =
          (1.0 - fp.q_star) / static_cast<double>(c.replicas) + 4.0 * c.band_delta;
      break;
    }
    case ExperimentKind::se_check: {
      const auto delta = theoretical_delta(fp, c.field, c.t_max, c.mc_samples,
                                           stream(Stream::state_evolution));
      const auto traj = run_amp(inst, fp, c.t_max, stream(Stream::amp_init));
      const auto rep = empirical_vs_theoretical_se(traj, delta.delta);
      row.values["xx_diag_dev"] = rep.xx_diag_dev;
      row.values["yy_diag_dev"] = rep.yy_diag_dev;
      row.values["xy_max_dev"] = rep.xy_max_dev;
      row.values["xx_max_dev"] = rep.xx_max_dev;
      row.values["yy_max_dev"] = rep.yy_max_dev;
      row.values["m_norm_sq"] = traj.m_norm_sq.back();
      row.values["m_norm_sq_dev"] = std::abs(traj.m_norm_sq.back() - fp.q_star);
      break;
    }
  }
}

std::string format_number(double v) {
  if (std::isnan(v)) return "";
  return fmt::format("{:.17g}", v);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << content;
  out.flush();
  if (!out) throw IoError("failed writing " + path);
}

}  // namespace

const std::vector<std::string>& result_value_columns() {
  static const std::vector<std::string> columns{
      "q_star",        "sigma_star_sq", "kappa_star",          "delta_star",
      "lambda_star",   "a_star",        "psi_rs",              "fp_iterations",
      "log_z_per_site", "free_energy_gap", "m_norm_sq",        "y_diff_sq",
      "tap_residual",  "amp_distance",  "mcmc_distance",       "mcmc_max_se",
      "xx_diag_dev",   "yy_diag_dev",   "xy_max_dev",          "xx_max_dev",
      "yy_max_dev",    "m_norm_sq_dev", "concentration_slope", "band_gap",
      "nonorth_gap",   "nonorth_gap_se", "band_fraction",      "b_n_fraction",
      "replica_distance", "distance_bound"};
  return columns;
}

std::vector<std::string> result_header() {
  std::vector<std::string> h{"schema_version", "kind", "n",     "beta",
                             "seed",           "status", "error"};
  const auto& v = result_value_columns();
  h.insert(h.end(), v.begin(), v.end());
  h.push_back("series");
  h.push_back("wall_time");
  return h;
}

ModelInstance cell_instance(const SpectralLaw& standardized_law,
                            const FieldLaw& field, FieldMode mode,
                            std::size_t n, double beta, std::uint64_t seed) {
  if (beta > 0.0) return build_instance(n, beta, standardized_law, field, seed, mode);
  if (beta < 0.0) throw DomainError("cell_instance: beta must be >= 0");
  const auto ref = build_instance(n, 1.0, standardized_law, field, seed, mode);
  return ModelInstance(0.0, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n)),
                       ref.rotation(), ref.field(), seed, ref.field_sampled());
}

std::uint64_t cell_stream_seed(std::size_t n, double beta, std::uint64_t seed,
                               Stream tag) {
  const auto key = fmt::format("n={};beta={:.17g}", n, beta);
  return derive_seed(seed, fnv1a(key), tag);
}

ResultRow run_cell(const ExperimentConfig& config, std::size_t n, double beta,
                   std::uint64_t seed) {
  ResultRow row;
  row.kind = config.kind;
  row.n = n;
  row.beta = beta;
  row.seed = seed;
  const auto start = std::chrono::steady_clock::now();
  try {
    run_pipeline(config, row);
  } catch (const std::exception& e) {
    row.ok = false;
    row.error = e.what();
  }
  row.wall_time = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - start)
                      .count();
  return row;
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& config) {
  using Cell = std::tuple<std::size_t, double, std::uint64_t>;
  std::vector<Cell> cells;
  if (config.kind == ExperimentKind::fixed_point) {
    for (double b : config.beta) cells.emplace_back(0, b, 0);
  } else {
    for (auto n : config.n)
      for (double b : config.beta)
        for (auto s : config.seeds) cells.emplace_back(n, b, s);
  }
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());

  std::vector<ResultRow> rows(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      const auto& [n, b, s] = cells[i];
      rows[i] = run_cell(config, n, b, s);
    }
  };
  const unsigned workers = std::max(
      1u, std::min<unsigned>(config.threads, static_cast<unsigned>(cells.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return rows;
}

int exit_code(const std::vector<ResultRow>& rows) {
  return std::all_of(rows.begin(), rows.end(),
                     [](const ResultRow& r) { return r.ok; })
             ? 0
             : 2;
}

std::vector<CellSummary> aggregate(const std::vector<ResultRow>& rows) {
  using Key = std::tuple<int, std::size_t, double>;
  std::map<Key, std::vector<const ResultRow*>> groups;
  for (const auto& r : rows)
    groups[{static_cast<int>(r.kind), r.n, r.beta}].push_back(&r);

  std::vector<CellSummary> out;
  for (const auto& [key, members] : groups) {
    CellSummary s;
    s.kind = static_cast<ExperimentKind>(std::get<0>(key));
    s.n = std::get<1>(key);
    s.beta = std::get<2>(key);
    for (const auto& col : result_value_columns()) {
      std::vector<double> v;
      for (const auto* r : members) {
        if (!r->ok) continue;
        auto it = r->values.find(col);
        if (it != r->values.end()) v.push_back(it->second);
      }
      if (v.empty()) continue;
      double mean = 0.0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      double var = 0.0;
      for (double x : v) var += (x - mean) * (x - mean);
      s.mean[col] = mean;
      s.sd[col] = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0;
    }
    for (const auto* r : members) (r->ok ? s.rows : s.failed)++;
    out.push_back(std::move(s));
  }
  return out;
}

std::string rows_to_csv(const std::vector<ResultRow>& rows) {
  std::string out;
  const auto header = result_header();
  for (std::size_t i = 0; i < header.size(); ++i)
    out += (i ? "," : "") + header[i];
  out += '\n';
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{},{}", kResultSchemaVersion,
                       to_string(r.kind), r.n, format_number(r.beta), r.seed,
                       r.ok ? "ok" : "error", csv_field(r.error));
    for (const auto& col : result_value_columns()) {
      auto it = r.values.find(col);
      out += ',';
      if (it != r.values.end()) out += format_number(it->second);
    }
    out += ',';
    for (std::size_t i = 0; i < r.series.size(); ++i)
      out += (i ? ";" : "") + format_number(r.series[i]);
    out += ',' + fmt::format("{:.6f}", r.wall_time) + '\n';
  }
  return out;
}

void emit_csv(const std::vector<ResultRow>& rows, const std::string& path) {
  write_file(path, rows_to_csv(rows));
}

std::string git_blob_sha1(std::string_view bytes) {
  const std::string prefix = fmt::format("blob {}", bytes.size());
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw Error("sha1: cannot allocate digest context");
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, prefix.data(), prefix.size() + 1) == 1 &&
                  EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, digest, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw Error("sha1: digest failed");
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::string summary_json(const std::vector<ResultRow>& rows,
                         const ExperimentConfig& config) {
  using nlohmann::json;
  const std::string config_text = config_to_json(config);
  json j;
  j["schema_version"] = kResultSchemaVersion;
  j["config"] = json::parse(config_text);
  j["input_hash"] = git_blob_sha1(config_text);
  j["rows"] = rows.size();
  j["failed"] = std::count_if(rows.begin(), rows.end(),
                              [](const ResultRow& r) { return !r.ok; });
  json cells = json::array();
  for (const auto& s : aggregate(rows)) {
    json cell;
    cell["kind"] = to_string(s.kind);
    cell["n"] = s.n;
    cell["beta"] = s.beta;
    cell["rows"] = s.rows;
    cell["failed"] = s.failed;
    cell["mean"] = s.mean;
    cell["sd"] = s.sd;
    cells.push_back(std::move(cell));
  }
  j["cells"] = std::move(cells);
  json errors = json::array();
  for (const auto& r : rows)
    if (!r.ok)
      errors.push_back({{"n", r.n}, {"beta", r.beta}, {"seed", r.seed},
                        {"error", r.error}});
  j["errors"] = std::move(errors);
  return j.dump(2) + "\n";
}

void emit_json_summary(const std::vector<ResultRow>& rows,
                       const ExperimentConfig& config,
                       const std::string& path) {
  write_file(path, summary_json(rows, config));
}

}  // namespace tapspin
