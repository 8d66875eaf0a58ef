#include "tapspin/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "tapspin/errors.hpp"

namespace tapspin {

namespace {

using nlohmann::json;

constexpr std::pair<ExperimentKind, const char*> kKindNames[] = {
    {ExperimentKind::fixed_point, "fixed_point"},
    {ExperimentKind::amp, "amp"},
    {ExperimentKind::gibbs_exact, "gibbs_exact"},
    {ExperimentKind::gibbs_mcmc, "gibbs_mcmc"},
    {ExperimentKind::tap_verify, "tap_verify"},
    {ExperimentKind::concentration, "concentration"},
    {ExperimentKind::band, "band"},
    {ExperimentKind::se_check, "se_check"},
};

std::vector<Atom> parse_atoms(const json& j, const char* what) {
  if (!j.is_array() || j.empty())
    throw ConfigError(std::string(what) + ": atoms must be a non-empty array");
  std::vector<Atom> atoms;
  for (const auto& a : j) {
    if (!a.is_array() || a.size() != 2 || !a[0].is_number() ||
        !a[1].is_number())
      throw ConfigError(std::string(what) + ": each atom is [location, weight]");
    atoms.push_back({a[0].get<double>(), a[1].get<double>()});
  }
  return atoms;
}

json atoms_json(const std::vector<Atom>& atoms) {
  json out = json::array();
  for (const auto& a : atoms) out.push_back({a.location, a.weight});
  return out;
}

SpectralLaw law_from_json(const json& j) {
  if (j.is_string()) return parse_law_spec(j.get<std::string>());
  if (!j.is_object() || !j.contains("kind"))
    throw ConfigError("law: expected a name or an object with \"kind\"");
  const auto kind = j.at("kind").get<std::string>();
  for (const auto& [key, _] : j.items())
    if (key != "kind" && key != "atoms")
      throw ConfigError("law: unknown key \"" + key + "\"");
  if (kind == "empirical") {
    if (!j.contains("atoms")) throw ConfigError("law: empirical needs atoms");
    return SpectralLaw::empirical(parse_atoms(j.at("atoms"), "law"));
  }
  if (j.contains("atoms"))
    throw ConfigError("law: atoms are only accepted for empirical laws");
  return parse_law_spec(kind);
}

FieldLaw field_from_json(const json& j) {
  if (j.is_number()) return FieldLaw::constant(j.get<double>());
  if (!j.is_object() || !j.contains("kind"))
    throw ConfigError("field: expected a number or an object with \"kind\"");
  const auto kind = j.at("kind").get<std::string>();
  auto number = [&](const char* key) {
    if (!j.contains(key) || !j.at(key).is_number())
      throw ConfigError(std::string("field: ") + kind + " needs numeric \"" +
                        key + "\"");
    return j.at(key).get<double>();
  };
  std::set<std::string> allowed{"kind"};
  FieldLaw out = FieldLaw::constant(0.0);
  if (kind == "constant") {
    out = FieldLaw::constant(number("value"));
    allowed.insert("value");
  } else if (kind == "gaussian") {
    out = FieldLaw::gaussian(number("mean"), number("sd"));
    allowed.insert({"mean", "sd"});
  } else if (kind == "empirical") {
    if (!j.contains("atoms")) throw ConfigError("field: empirical needs atoms");
    out = FieldLaw::empirical(parse_atoms(j.at("atoms"), "field"));
    allowed.insert("atoms");
  } else {
    throw ConfigError("field: unknown kind \"" + kind + "\"");
  }
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key))
      throw ConfigError("field: unknown key \"" + key + "\"");
  return out;
}

json law_to_json(const SpectralLaw& law) {
  switch (law.kind()) {
    case SpectralKind::semicircle:
      return {{"kind", "semicircle"}};
    case SpectralKind::two_point:
      return {{"kind", "two_point"}};
    case SpectralKind::empirical:
      return {{"kind", "empirical"}, {"atoms", atoms_json(law.atoms())}};
  }
  return {};
}

json field_to_json(const FieldLaw& field) {
  switch (field.kind()) {
    case FieldKind::constant:
      return {{"kind", "constant"}, {"value", field.value()}};
    case FieldKind::gaussian:
      return {{"kind", "gaussian"}, {"mean", field.mean()}, {"sd", field.sd()}};
    case FieldKind::empirical:
      return {{"kind", "empirical"}, {"atoms", atoms_json(field.atoms())}};
  }
  return {};
}

template <class T>
std::vector<T> non_empty_list(const json& j, const char* key) {
  std::vector<T> out;
  if (j.is_array()) {
    out = j.get<std::vector<T>>();
  } else {
    out.push_back(j.get<T>());
  }
  if (out.empty())
    throw ConfigError(std::string(key) + ": list must be non-empty");
  return out;
}

std::size_t positive_size(const json& j, const char* key) {
  if (!j.is_number_integer() || j.get<long long>() < 1)
    throw ConfigError(std::string(key) + ": expected a positive integer");
  return j.get<std::size_t>();
}

void validate(const ExperimentConfig& c) {
  std::set<std::uint64_t> distinct(c.seeds.begin(), c.seeds.end());
  if (distinct.size() != c.seeds.size())
    throw ConfigError("seeds: values must be distinct");
  for (auto n : c.n)
    if (n < 1) throw ConfigError("n: entries must be >= 1");
  for (auto b : c.beta)
    if (!(b >= 0.0)) throw ConfigError("beta: entries must be >= 0");
  for (auto r : c.replica_counts)
    if (r < 1) throw ConfigError("replica_counts: entries must be >= 1");
  if (!(c.band_delta > 0.0)) throw ConfigError("band_delta: must be > 0");
  if (!(c.band_eta > 0.0)) throw ConfigError("band_eta: must be > 0");
  if (c.output.empty()) throw ConfigError("output: must be non-empty");
  if (c.threads < 1) throw ConfigError("threads: must be >= 1");
}

}  // namespace

const char* to_string(ExperimentKind kind) {
  for (const auto& [k, name] : kKindNames)
    if (k == kind) return name;
  return "unknown";
}

ExperimentKind parse_experiment_kind(const std::string& name) {
  for (const auto& [k, kname] : kKindNames)
    if (name == kname) return k;
  throw ConfigError("kind: unknown experiment kind \"" + name + "\"");
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");

  ExperimentConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "kind") {
        c.kind = parse_experiment_kind(v.get<std::string>());
      } else if (key == "n") {
        c.n = non_empty_list<std::size_t>(v, "n");
      } else if (key == "beta") {
        c.beta = non_empty_list<double>(v, "beta");
      } else if (key == "law") {
        c.law = law_from_json(v);
      } else if (key == "field") {
        c.field = field_from_json(v);
      } else if (key == "field_mode") {
        const auto mode = v.get<std::string>();
        if (mode == "quantile") {
          c.field_mode = FieldMode::quantile;
        } else if (mode == "sampled") {
          c.field_mode = FieldMode::sampled;
        } else {
          throw ConfigError("field_mode: expected quantile or sampled");
        }
      } else if (key == "t_max") {
        c.t_max = positive_size(v, "t_max");
      } else if (key == "replicas") {
        c.replicas = positive_size(v, "replicas");
      } else if (key == "replica_counts") {
        c.replica_counts = non_empty_list<std::size_t>(v, "replica_counts");
      } else if (key == "sweeps") {
        c.sweeps = positive_size(v, "sweeps");
      } else if (key == "burn_in") {
        c.burn_in = v.get<std::size_t>();
      } else if (key == "thin") {
        c.thin = positive_size(v, "thin");
      } else if (key == "chains") {
        c.chains = positive_size(v, "chains");
      } else if (key == "band_delta") {
        c.band_delta = v.get<double>();
      } else if (key == "band_eta") {
        c.band_eta = v.get<double>();
      } else if (key == "mc_samples") {
        c.mc_samples = positive_size(v, "mc_samples");
      } else if (key == "seeds") {
        c.seeds = non_empty_list<std::uint64_t>(v, "seeds");
      } else if (key == "output") {
        c.output = v.get<std::string>();
      } else if (key == "threads") {
        c.threads = static_cast<unsigned>(positive_size(v, "threads"));
      } else {
        throw ConfigError("config: unknown key \"" + key + "\"");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: wrong value type: ") + e.what());
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["kind"] = to_string(c.kind);
  j["n"] = c.n;
  j["beta"] = c.beta;
  j["law"] = law_to_json(c.law);
  j["field"] = field_to_json(c.field);
  j["field_mode"] = c.field_mode == FieldMode::quantile ? "quantile" : "sampled";
  j["t_max"] = c.t_max;
  j["replicas"] = c.replicas;
  j["replica_counts"] = c.replica_counts;
  j["sweeps"] = c.sweeps;
  j["burn_in"] = c.burn_in;
  j["thin"] = c.thin;
  j["chains"] = c.chains;
  j["band_delta"] = c.band_delta;
  j["band_eta"] = c.band_eta;
  j["mc_samples"] = c.mc_samples;
  j["seeds"] = c.seeds;
  j["output"] = c.output;
  j["threads"] = c.threads;
  return j.dump();
}

SpectralLaw parse_law_spec(const std::string& spec) {
  auto first = std::find_if_not(spec.begin(), spec.end(),
                                [](unsigned char ch) { return std::isspace(ch); });
  if (first != spec.end() && *first == '{') {
    json j;
    try {
      j = json::parse(spec);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("law: invalid JSON: ") + e.what());
    }
    return law_from_json(j);
  }
  if (spec == "semicircle") return SpectralLaw::semicircle();
  if (spec == "two_point" || spec == "rom") return SpectralLaw::two_point();
  throw ConfigError("law: unknown law \"" + spec +
                    "\" (semicircle, two_point, rom or a JSON object)");
}

FieldLaw parse_field_spec(const std::string& spec) {
  json j;
  try {
    j = json::parse(spec);
  } catch (const json::parse_error&) {
    throw ConfigError("field: expected a number or a JSON object, got \"" +
                      spec + "\"");
  }
  return field_from_json(j);
}

std::string law_spec_json(const SpectralLaw& law) {
  return law_to_json(law).dump();
}

std::string field_spec_json(const FieldLaw& field) {
  return field_to_json(field).dump();
}

}  // namespace tapspin
