#pragma once

// Experiment configuration. The on-disk format is a flat JSON object whose
// keys mirror the library parameters; see docs/config.md.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "tapspin/ensemble.hpp"
#include "tapspin/field.hpp"
#include "tapspin/spectral.hpp"

namespace tapspin {

enum class ExperimentKind {
  fixed_point,
  amp,
  gibbs_exact,
  gibbs_mcmc,
  tap_verify,
  concentration,
  band,
  se_check
};

const char* to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(const std::string& name);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::fixed_point;
  std::vector<std::size_t> n{16};
  std::vector<double> beta{0.15};
  SpectralLaw law = SpectralLaw::semicircle();  // standardized before use
  FieldLaw field = FieldLaw::constant(1.0);
  FieldMode field_mode = FieldMode::quantile;
  std::size_t t_max = 50;
  std::size_t replicas = 8;                                // N
  std::vector<std::size_t> replica_counts{4, 16, 64, 256};  // concentration
  std::size_t sweeps = 2000;
  std::size_t burn_in = 500;
  std::size_t thin = 1;
  std::size_t chains = 4;
  double band_delta = 0.2;
  double band_eta = 0.8;
  std::size_t mc_samples = 200000;  // state-evolution Monte Carlo
  std::vector<std::uint64_t> seeds{1};
  std::string output = "tapspin_results";  // writes <output>.csv/.json
  unsigned threads = 1;
};

// Throws ConfigError on unknown keys, wrong types, empty
// lists, repeated seeds or invalid laws.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

// Canonical JSON (sorted keys) of a config; parse_config round-trips it.
std::string config_to_json(const ExperimentConfig& config);

// Law specs: a name ("semicircle", "two_point", "rom") or a JSON object
// {"kind": ..., "atoms": [[x, w], ...]}.
SpectralLaw parse_law_spec(const std::string& spec);
// Field specs: a number (constant field) or a JSON object
// {"kind": "constant", "value": v} | {"kind": "gaussian", "mean": mu,
// "sd": s} | {"kind": "empirical", "atoms": [[x, w], ...]}.
FieldLaw parse_field_spec(const std::string& spec);

std::string law_spec_json(const SpectralLaw& law);
std::string field_spec_json(const FieldLaw& field);

}  // namespace tapspin
