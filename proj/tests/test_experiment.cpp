#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "tapspin/errors.hpp"
#include "tapspin/experiment.hpp"

using namespace tapspin;

namespace {

// Drops the trailing wall_time field of every line.
std::string strip_wall_time(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + "\n";
  return out;
}

std::size_t count_lines(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("config parsing") {
  const auto c = parse_config(R"({
    "kind": "tap_verify", "n": [10, 12], "beta": 0.15,
    "law": {"kind": "empirical", "atoms": [[-1, 0.5], [1, 0.5]]},
    "field": {"kind": "gaussian", "mean": 0.1, "sd": 0.5},
    "field_mode": "sampled", "t_max": 30, "seeds": [3, 1, 2], "threads": 2,
    "output": "out/x"})");
  CHECK(c.kind == ExperimentKind::tap_verify);
  CHECK(c.n == std::vector<std::size_t>{10, 12});
  CHECK(c.beta == std::vector<double>{0.15});
  CHECK(c.law.kind() == SpectralKind::empirical);
  CHECK(c.field.kind() == FieldKind::gaussian);
  CHECK(c.field_mode == FieldMode::sampled);
  CHECK(c.t_max == 30);
  CHECK(c.threads == 2);

  const auto back = parse_config(config_to_json(c));
  CHECK(config_to_json(back) == config_to_json(c));

  CHECK(parse_config(R"({"law": "rom"})").law.kind() == SpectralKind::two_point);
  CHECK(parse_config(R"({"field": 0.25})").field.value() == 0.25);
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(parse_config("{"), ConfigError);
  CHECK_THROWS_AS(parse_config("[]"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"kind": "nope"})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"colour": 1})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"seeds": [1, 1]})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"n": []})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"beta": [-0.1]})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"t_max": 0})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"n": "ten"})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"law": {"kind": "empirical", "atoms": [[0, 0.4]]}})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"field": {"kind": "gaussian", "mean": 0}})"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
  CHECK_THROWS_AS(parse_law_spec("cauchy"), ConfigError);
  CHECK_THROWS_AS(parse_field_spec("one"), ConfigError);
}

TEST_CASE("fixed_point experiment with zero field") {
  ExperimentConfig c;
  c.kind = ExperimentKind::fixed_point;
  c.beta = {0.1};
  c.field = FieldLaw::constant(0.0);
  const auto rows = run_experiment(c);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].ok);
  CHECK(rows[0].values.at("q_star") == 0.0);
  CHECK(exit_code(rows) == 0);
}

TEST_CASE("tap_verify over 20 seeds, aggregates and determinism") {
  ExperimentConfig c;
  c.kind = ExperimentKind::tap_verify;
  c.n = {16};
  c.beta = {0.15};
  c.t_max = 20;
  c.seeds.clear();
  for (std::uint64_t s = 1; s <= 20; ++s) c.seeds.push_back(s);
  const auto rows = run_experiment(c);
  REQUIRE(rows.size() == 20);
  double mean = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].ok);
    CHECK(rows[i].seed == i + 1);
    CHECK(rows[i].series.size() == 20);
    CHECK(rows[i].values.count("tap_residual") == 1);
    CHECK(rows[i].values.at("amp_distance") == rows[i].series.back());
    mean += rows[i].values.at("amp_distance") / 20.0;
  }
  const auto summary = aggregate(rows);
  REQUIRE(summary.size() == 1);
  CHECK(summary[0].rows == 20);
  CHECK(std::abs(summary[0].mean.at("amp_distance") - mean) < 1e-12);

  c.threads = 3;
  const auto again = run_experiment(c);
  CHECK(strip_wall_time(rows_to_csv(rows)) == strip_wall_time(rows_to_csv(again)));
}

TEST_CASE("failing cells become error rows") {
  ExperimentConfig c;
  c.kind = ExperimentKind::amp;
  c.n = {8};
  c.beta = {0.15, 5.0};
  c.t_max = 5;
  c.seeds = {1, 2};
  const auto rows = run_experiment(c);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].ok);
  CHECK(rows[1].ok);
  CHECK_FALSE(rows[2].ok);
  CHECK(rows[2].error.find("beta") != std::string::npos);
  CHECK(exit_code(rows) == 2);
  const auto csv = rows_to_csv(rows);
  CHECK(csv.find(",error,") != std::string::npos);

  c.kind = ExperimentKind::gibbs_exact;
  c.n = {30};
  c.beta = {0.1};
  c.seeds = {1};
  const auto guarded = run_experiment(c);
  CHECK_FALSE(guarded[0].ok);
}

TEST_CASE("CSV shape") {
  const auto header_only = rows_to_csv({});
  CHECK(count_lines(header_only) == 1);
  CHECK(header_only.rfind("schema_version,kind,n,beta,seed,status,error,", 0) == 0);

  ResultRow row;
  row.values["q_star"] = 0.25;
  row.error = "bad, \"quoted\"";
  row.ok = false;
  row.series = {1.0, 0.5};
  const auto one = rows_to_csv({row});
  CHECK(count_lines(one) == 2);
  CHECK(one.find("\"bad, \"\"quoted\"\"\"") != std::string::npos);
  CHECK(one.find(",1;0.5,") != std::string::npos);

  const std::size_t columns = result_header().size();
  const std::string second = one.substr(one.find('\n') + 1);
  CHECK(static_cast<std::size_t>(std::count(header_only.begin(), header_only.end(), ',')) ==
        columns - 1);
  CHECK(second.find("0.25") != std::string::npos);
}

TEST_CASE("emission to files and the input hash") {
  CHECK(git_blob_sha1("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  CHECK(git_blob_sha1("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");

  ExperimentConfig c;
  c.kind = ExperimentKind::gibbs_exact;
  c.n = {8};
  c.beta = {0.1, 0.2};
  c.seeds = {4, 5, 6};
  const auto rows = run_experiment(c);
  emit_csv(rows, "test_experiment_out.csv");
  emit_json_summary(rows, c, "test_experiment_out.json");
  CHECK(read_file("test_experiment_out.csv") == rows_to_csv(rows));
  const auto j = nlohmann::json::parse(read_file("test_experiment_out.json"));
  CHECK(j["input_hash"] == git_blob_sha1(config_to_json(c)));
  CHECK(j["cells"].size() == 2);
  CHECK(j["cells"][0]["rows"] == 3);
  CHECK(j["config"]["kind"] == "gibbs_exact");
  std::remove("test_experiment_out.csv");
  std::remove("test_experiment_out.json");
  CHECK_THROWS_AS(emit_csv(rows, "/nonexistent/dir/out.csv"), IoError);
}

TEST_CASE("remaining kinds run") {
  ExperimentConfig c;
  c.n = {10};
  c.beta = {0.15};
  c.t_max = 8;
  c.sweeps = 300;
  c.burn_in = 50;
  c.mc_samples = 2000;
  c.replica_counts = {2, 4, 8};
  for (auto kind : {ExperimentKind::amp, ExperimentKind::gibbs_mcmc, ExperimentKind::concentration,
                    ExperimentKind::band, ExperimentKind::se_check}) {
    c.kind = kind;
    const auto rows = run_experiment(c);
    REQUIRE(rows.size() == 1);
    CHECK_MESSAGE(rows[0].ok, to_string(kind), ": ", rows[0].error);
  }
  c.kind = ExperimentKind::concentration;
  const auto conc = run_experiment(c);
  CHECK(conc[0].series.size() == 3);
  CHECK(conc[0].values.at("concentration_slope") < 0);
}
