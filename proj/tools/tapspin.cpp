// Command-line front end. Exit codes: 0 success, 1 bad arguments or config,
// 2 a computation failed (for `experiment`: some cells failed).

#include <fmt/format.h>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "tapspin/amp.hpp"
#include "tapspin/config.hpp"
#include "tapspin/errors.hpp"
#include "tapspin/experiment.hpp"
#include "tapspin/fixed_point.hpp"
#include "tapspin/gibbs.hpp"
#include "tapspin/tap.hpp"

namespace {

using namespace tapspin;
using nlohmann::json;

struct Common {
  unsigned threads = 1;
  std::uint64_t seed = 1;
  std::string out;  // empty: stdout
  std::string save_instance;
  std::string load_instance;
};

struct ModelArgs {
  std::size_t n = 16;
  double beta = 0.15;
  std::string law = "semicircle";
  std::string field = "1";
  bool sampled_field = false;
};

void add_model_options(CLI::App* app, ModelArgs& m, bool with_n) {
  if (with_n) app->add_option("--n", m.n, "Number of spins")->check(CLI::PositiveNumber);
  app->add_option("--beta", m.beta, "Inverse temperature")->check(CLI::NonNegativeNumber);
  app->add_option("--law", m.law,
                  "Spectral law: semicircle, two_point, rom or a JSON object");
  app->add_option("--field", m.field,
                  "Field law: a number or a JSON object");
  if (with_n)
    app->add_flag("--sampled-field", m.sampled_field,
                  "Draw the field iid instead of from quantiles");
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text)) throw IoError("cannot write " + path);
}

FixedPoint model_fixed_point(const ModelArgs& m) {
  return solve_fixed_point(m.beta, standardize(parse_law_spec(m.law)),
                           parse_field_spec(m.field));
}

ModelInstance model_instance(const ModelArgs& m, const Common& c) {
  std::optional<ModelInstance> inst;
  if (!c.load_instance.empty()) {
    inst = load_instance(c.load_instance);
  } else {
    inst = cell_instance(standardize(parse_law_spec(m.law)),
                         parse_field_spec(m.field),
                         m.sampled_field ? FieldMode::sampled : FieldMode::quantile,
                         m.n, m.beta, c.seed);
  }
  if (!c.save_instance.empty()) save_instance(*inst, c.save_instance);
  return *inst;
}

// A loaded instance carries its own n, beta and seed.
ModelArgs effective(ModelArgs m, const ModelInstance& inst) {
  m.n = inst.n();
  m.beta = inst.beta();
  return m;
}

json fixed_point_json(const FixedPoint& fp) {
  return {{"beta", fp.beta},
          {"q_star", fp.q_star},
          {"sigma_star_sq", fp.sigma_star_sq},
          {"kappa_star", fp.kappa_star},
          {"delta_star", fp.delta_star},
          {"lambda_star", fp.lambda_star},
          {"a_star", fp.a_star},
          {"psi_rs", fp.psi_rs},
          {"converged", fp.converged},
          {"iterations", fp.iterations},
          {"lambda_margin", fp.lambda_margin},
          {"product_measure", fp.product_measure}};
}

std::string marginals_csv(const Eigen::VectorXd& mean,
                          const Eigen::VectorXd& se) {
  std::string out = "site,magnetization,std_error\n";
  for (Eigen::Index i = 0; i < mean.size(); ++i)
    out += fmt::format("{},{:.17g},{:.17g}\n", i, mean[i], se[i]);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tapspin: TAP equations, AMP and Gibbs sampling for "
               "orthogonally invariant spin glasses"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--threads", common.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", common.seed, "Disorder seed");
  app.add_option("--out", common.out, "Output path (default stdout)");
  app.add_option("--save-instance", common.save_instance,
                 "Write the generated instance as JSON");
  app.add_option("--load-instance", common.load_instance,
                 "Read the instance from JSON instead of generating it");

  ModelArgs model;

  auto* fp_cmd = app.add_subcommand("fixed-point", "Solve the replica-symmetric fixed point");
  add_model_options(fp_cmd, model, false);
  fp_cmd->add_flag("--json", "JSON output (the default; kept for scripts)");

  auto* amp_cmd = app.add_subcommand("amp-run", "Run AMP and emit per-step diagnostics as CSV");
  add_model_options(amp_cmd, model, true);
  std::size_t t_max = 50;
  amp_cmd->add_option("--t", t_max, "Iterations")->check(CLI::PositiveNumber);
  std::string amp_csv;
  amp_cmd->add_option("--csv", amp_csv, "CSV output path (default --out or stdout)");

  auto* exact_cmd = app.add_subcommand("gibbs-exact", "Exact Gibbs magnetization by enumeration");
  add_model_options(exact_cmd, model, true);
  bool exact_json = false;
  exact_cmd->add_flag("--json", exact_json, "JSON output with log Z instead of CSV");

  auto* mcmc_cmd = app.add_subcommand("gibbs-mcmc", "Heat-bath estimate of the magnetization");
  add_model_options(mcmc_cmd, model, true);
  std::size_t chains = 4, sweeps = 2000, burn_in = 500, thin = 1;
  mcmc_cmd->add_option("--chains", chains)->check(CLI::PositiveNumber);
  mcmc_cmd->add_option("--sweeps", sweeps)->check(CLI::PositiveNumber);
  mcmc_cmd->add_option("--burn-in", burn_in);
  mcmc_cmd->add_option("--thin", thin)->check(CLI::PositiveNumber);

  auto* tap_cmd = app.add_subcommand("tap-residual", "TAP residual of a magnetization estimate");
  add_model_options(tap_cmd, model, true);
  std::string m_source = "amp";
  tap_cmd->add_option("--m-source", m_source, "Magnetization source")
      ->check(CLI::IsMember({"amp", "exact", "mcmc", "solver"}));
  tap_cmd->add_option("--t", t_max, "AMP iterations")->check(CLI::PositiveNumber);
  tap_cmd->add_option("--chains", chains)->check(CLI::PositiveNumber);
  tap_cmd->add_option("--sweeps", sweeps)->check(CLI::PositiveNumber);

  auto* exp_cmd = app.add_subcommand("experiment", "Run a JSON-configured experiment");
  std::string config_path;
  exp_cmd->add_option("--config", config_path, "Config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*fp_cmd) {
      write_output(common.out, fixed_point_json(model_fixed_point(model)).dump(2) + "\n");
      return 0;
    }
    if (*amp_cmd) {
      const auto inst = model_instance(model, common);
      const auto m = effective(model, inst);
      const auto fp = model_fixed_point(m);
      const auto traj = run_amp(inst, fp, t_max,
                                cell_stream_seed(m.n, m.beta, inst.seed(), Stream::amp_init));
      std::string out = "t,y_diff_sq,m_norm_sq_over_n,tap_residual\n";
      for (std::size_t t = 0; t < traj.t_max; ++t)
        out += fmt::format("{},{:.17g},{:.17g},{:.17g}\n", t + 1, traj.y_diff_sq[t],
                           traj.m_norm_sq[t], traj.tap_residual[t]);
      write_output(amp_csv.empty() ? common.out : amp_csv, out);
      return 0;
    }
    if (*exact_cmd) {
      const auto inst = model_instance(model, common);
      const auto g = exact_gibbs(inst, false, common.threads);
      if (exact_json) {
        const auto fp = model_fixed_point(effective(model, inst));
        std::vector<double> mag(g.magnetization.data(),
                                g.magnetization.data() + g.magnetization.size());
        json j{{"n", inst.n()},
               {"beta", inst.beta()},
               {"seed", inst.seed()},
               {"log_z", g.log_z},
               {"log_z_per_site", g.log_z / static_cast<double>(inst.n())},
               {"psi_rs", fp.psi_rs},
               {"magnetization", mag}};
        write_output(common.out, j.dump(2) + "\n");
      } else {
        write_output(common.out,
                     marginals_csv(g.magnetization,
                                   Eigen::VectorXd::Zero(g.magnetization.size())));
      }
      return 0;
    }
    if (*mcmc_cmd) {
      const auto inst = model_instance(model, common);
      const auto reps = glauber_sample(
          inst, sweeps, burn_in, thin, chains,
          cell_stream_seed(inst.n(), inst.beta(), inst.seed(), Stream::mcmc));
      const auto marg = mcmc_marginals(reps);
      write_output(common.out, marginals_csv(marg.mean, marg.std_error));
      return 0;
    }
    if (*tap_cmd) {
      const auto inst = model_instance(model, common);
      const auto m = effective(model, inst);
      const auto fp = model_fixed_point(m);
      Eigen::VectorXd mag;
      MagnetizationSource source = MagnetizationSource::other;
      if (m_source == "amp") {
        mag = run_amp(inst, fp, t_max,
                      cell_stream_seed(m.n, m.beta, inst.seed(), Stream::amp_init))
                  .final_magnetization();
        source = MagnetizationSource::amp;
      } else if (m_source == "exact") {
        mag = exact_gibbs(inst, false, common.threads).magnetization;
        source = MagnetizationSource::exact;
      } else if (m_source == "mcmc") {
        mag = mcmc_marginals(glauber_sample(inst, sweeps, sweeps / 4, 1, chains,
                                            cell_stream_seed(m.n, m.beta, inst.seed(),
                                                             Stream::mcmc)))
                  .mean;
        source = MagnetizationSource::mcmc;
      } else {
        mag = solve_tap_damped(inst, fp, Eigen::VectorXd::Zero(
                                             static_cast<Eigen::Index>(inst.n())))
                  .m;
        source = MagnetizationSource::solver;
      }
      const auto rep = tap_report(inst, fp, mag, source);
      json j{{"residual", rep.residual},
             {"onsager_coefficient", rep.onsager_coefficient},
             {"source", to_string(rep.source)},
             {"t", t_max},
             {"beta", inst.beta()},
             {"n", inst.n()},
             {"seed", inst.seed()}};
      write_output(common.out, j.dump(2) + "\n");
      return 0;
    }
    if (*exp_cmd) {
      ExperimentConfig config;
      try {
        config = load_config(config_path);
      } catch (const Error& e) {
        std::cerr << "tapspin: " << e.what() << "\n";
        return 1;
      }
      if (!common.out.empty()) config.output = common.out;
      if (app.count("--threads")) config.threads = common.threads;
      const auto rows = run_experiment(config);
      emit_csv(rows, config.output + ".csv");
      emit_json_summary(rows, config, config.output + ".json");
      for (const auto& r : rows)
        if (!r.ok)
          std::cerr << fmt::format("tapspin: cell n={} beta={} seed={} failed: {}\n",
                                   r.n, r.beta, r.seed, r.error);
      return exit_code(rows);
    }
  } catch (const ConfigError& e) {
    std::cerr << "tapspin: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "tapspin: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
