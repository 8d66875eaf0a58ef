#pragma once

// Experiment runner: one pipeline per (n, beta, seed) cell, evaluated in
// parallel, with rows returned in cell-key order.

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "tapspin/config.hpp"
#include "tapspin/ensemble.hpp"
#include "tapspin/rng.hpp"

namespace tapspin {

inline constexpr int kResultSchemaVersion = 1;

struct ResultRow {
  ExperimentKind kind = ExperimentKind::fixed_point;
  std::size_t n = 0;  // 0 for fixed_point cells
  double beta = 0.0;
  std::uint64_t seed = 0;  // 0 for fixed_point cells
  bool ok = true;
  std::string error;
  std::map<std::string, double> values;  // keys from result_value_columns()
  std::vector<double> series;            // kind-dependent, see docs/csv.md
  double wall_time = 0.0;                // seconds
};

// Scalar columns in CSV order.
const std::vector<std::string>& result_value_columns();
// Full CSV header, starting with schema_version and ending with wall_time.
std::vector<std::string> result_header();

// Seed for a secondary stream of a cell. The instance itself is built from
// `seed` directly, so all cells sharing a seed share the rotation O.
std::uint64_t cell_stream_seed(std::size_t n, double beta, std::uint64_t seed,
                               Stream tag);

// The cell's disorder: build_instance for beta > 0; for beta = 0 the same
// rotation and field with Dbar = 0.
ModelInstance cell_instance(const SpectralLaw& standardized_law,
                            const FieldLaw& field, FieldMode mode,
                            std::size_t n, double beta, std::uint64_t seed);

// A single cell. Module errors are caught and reported in the row.
ResultRow run_cell(const ExperimentConfig& config, std::size_t n, double beta,
                   std::uint64_t seed);

// All cells of the config, sorted by (n, beta, seed).
std::vector<ResultRow> run_experiment(const ExperimentConfig& config);

// 0 when every row is ok, 2 otherwise.
int exit_code(const std::vector<ResultRow>& rows);

struct CellSummary {
  ExperimentKind kind = ExperimentKind::fixed_point;
  std::size_t n = 0;
  double beta = 0.0;
  std::size_t rows = 0;    // successful rows in the group
  std::size_t failed = 0;
  std::map<std::string, double> mean;
  std::map<std::string, double> sd;  // sample SD; 0 for a single row
};

// Mean and SD of every value column over the successful rows of each
// (kind, n, beta) group.
std::vector<CellSummary> aggregate(const std::vector<ResultRow>& rows);

std::string rows_to_csv(const std::vector<ResultRow>& rows);
void emit_csv(const std::vector<ResultRow>& rows, const std::string& path);

std::string summary_json(const std::vector<ResultRow>& rows,
                         const ExperimentConfig& config);
void emit_json_summary(const std::vector<ResultRow>& rows,
                       const ExperimentConfig& config,
                       const std::string& path);

// Git blob hash: SHA-1 of "blob <size>\0" followed by the bytes, in hex.
std::string git_blob_sha1(std::string_view bytes);

}  // namespace tapspin
