#ifndef SVEIS_IO_HPP
#define SVEIS_IO_HPP

// JSON configuration, JSON reports, and CSV output.
//
// Config document:
//   {
//     "params":     { "Pi", "alpha", "beta_bar", "m", "omega", "gamma", "xi",
//                     "sigma", "eta", "k", "theta", "delta" },        all required
//     "sim":        { "horizon" (required), "dt", "n_paths", "seed",
//                     "record_stride", "z_hold", "scheme",
//                     "init": { "S", "V", "E", "I", "z" } },
//     "experiment": { "kind", "write_paths", "fit_fraction", "bins",
//                     "tv_threshold", "epsilon_persist", "pass_fraction" }
//   }
// Unknown keys are rejected at every level.

#include "sveis/analysis.hpp"
#include "sveis/errors.hpp"
#include "sveis/model.hpp"
#include "sveis/ode.hpp"
#include "sveis/sde.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace sveis
{

using Json = nlohmann::ordered_json;

inline constexpr std::string_view kToolVersion = "0.1.0";

/// Failure to read or write a file; the message carries the path.
class IoError : public Error
{
 public:
  using Error::Error;
};

struct ExperimentConfig
{
  std::optional<std::string> kind{};  // thresholds | simulate | persistence | extinction | dfe
  std::optional<std::size_t> write_paths{};  // cap on trajectory CSVs; all paths when absent
  double fit_fraction{0.5};
  std::size_t bins{20};
  double tv_threshold{0.05};
  std::optional<double> epsilon_persist{};  // 1e-4 * Pi/m when absent
  double pass_fraction{0.95};

  bool operator==(const ExperimentConfig&) const = default;
};

struct Config
{
  SimConfig sim;
  ExperimentConfig experiment;

  bool operator==(const Config&) const = default;
};

/// Initial state used when the config omits one: 10% of the disease-free
/// susceptibles split evenly between E and I, vaccinated at their DFE level.
inline State default_init(const ModelParams& p)
{
  const State d = dfe(p);
  return {0.9 * d.S, d.V, 0.05 * d.S, 0.05 * d.S, 0.0};
}

/// Smallest stride keeping at most 10^4 stored nodes.
inline std::size_t default_record_stride(double horizon, double dt)
{
  const std::size_t steps = detail::step_count(horizon, dt);
  return std::max<std::size_t>(1, (steps + 9997) / 9998);
}

namespace detail
{

inline const std::set<std::string_view> kExperimentKinds{"thresholds", "simulate", "persistence", "extinction",
                                                         "dfe"};

inline void reject_unknown(const Json& obj, const std::string& path, std::initializer_list<std::string_view> allowed)
{
  if (!obj.is_object()) throw SchemaError(path.empty() ? "/" : path, "expected an object");
  for (const auto& item : obj.items()) {
    bool known = false;
    for (auto a : allowed) known = known || a == item.key();
    if (!known) throw SchemaError(path + "/" + item.key(), "unknown key");
  }
}

inline double read_number(const Json& obj, const std::string& path, std::string_view key)
{
  const std::string field = path + "/" + std::string(key);
  const auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(field, "required field missing");
  if (!it->is_number()) throw SchemaError(field, "expected a number");
  const double v = it->get<double>();
  if (!std::isfinite(v)) throw SchemaError(field, "expected a finite number");
  return v;
}

inline std::uint64_t read_unsigned(const Json& obj, const std::string& path, std::string_view key)
{
  const std::string field = path + "/" + std::string(key);
  const Json& v = obj.at(key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) throw SchemaError(field, "expected a nonnegative integer");
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d >= 0.0 && d == std::floor(d) && d < 0x1.0p64) return static_cast<std::uint64_t>(d);
  }
  throw SchemaError(field, "expected a nonnegative integer");
}

inline std::string read_string(const Json& obj, const std::string& path, std::string_view key)
{
  const Json& v = obj.at(key);
  if (!v.is_string()) throw SchemaError(path + "/" + std::string(key), "expected a string");
  return v.get<std::string>();
}

inline bool has(const Json& obj, std::string_view key) { return obj.find(key) != obj.end(); }

}  // namespace detail

inline Json to_json(const State& s)
{
  return Json{{"S", s.S}, {"V", s.V}, {"E", s.E}, {"I", s.I}, {"z", s.z}};
}

inline Json to_json(const ModelParams& p)
{
  Json j = Json::object();
  for (const auto& [name, field] : kParamFields) j[std::string(name)] = p.*field;
  return j;
}

inline Json to_json(const Config& c)
{
  Json sim{{"horizon", c.sim.horizon},
           {"dt", c.sim.dt},
           {"n_paths", c.sim.n_paths},
           {"seed", c.sim.master_seed},
           {"record_stride", c.sim.record_stride},
           {"z_hold", to_string(c.sim.z_hold)},
           {"scheme", to_string(c.sim.scheme)},
           {"init", to_json(c.sim.init)}};
  Json exp = Json::object();
  if (c.experiment.kind) exp["kind"] = *c.experiment.kind;
  if (c.experiment.write_paths) exp["write_paths"] = *c.experiment.write_paths;
  exp["fit_fraction"] = c.experiment.fit_fraction;
  exp["bins"] = c.experiment.bins;
  exp["tv_threshold"] = c.experiment.tv_threshold;
  if (c.experiment.epsilon_persist) exp["epsilon_persist"] = *c.experiment.epsilon_persist;
  exp["pass_fraction"] = c.experiment.pass_fraction;
  return Json{{"params", to_json(c.sim.params)}, {"sim", sim}, {"experiment", exp}};
}

/// Parses and validates a config document, filling defaults for omitted optional
/// fields. Throws SchemaError, NonPositiveParameter, or InvalidConfig.
inline Config parse_config(const Json& doc)
{
  using namespace detail;
  reject_unknown(doc, "", {"params", "sim", "experiment"});
  if (!has(doc, "params")) throw SchemaError("/params", "required section missing");
  if (!has(doc, "sim")) throw SchemaError("/sim", "required section missing");

  Config c;
  const Json& params = doc.at("params");
  {
    std::vector<std::string_view> names;
    for (const auto& f : kParamFields) names.push_back(f.first);
    if (!params.is_object()) throw SchemaError("/params", "expected an object");
    for (const auto& item : params.items()) {
      if (std::find(names.begin(), names.end(), item.key()) == names.end())
        throw SchemaError("/params/" + item.key(), "unknown key");
    }
    for (const auto& [name, field] : kParamFields) c.sim.params.*field = read_number(params, "/params", name);
  }
  validate_params(c.sim.params);

  const Json& sim = doc.at("sim");
  reject_unknown(sim, "/sim", {"horizon", "dt", "n_paths", "seed", "record_stride", "z_hold", "scheme", "init"});
  c.sim.horizon = read_number(sim, "/sim", "horizon");
  if (!(c.sim.horizon > 0.0)) throw SchemaError("/sim/horizon", "must be positive");
  c.sim.dt = has(sim, "dt") ? read_number(sim, "/sim", "dt") : default_dt(c.sim.params);
  if (!(c.sim.dt > 0.0)) throw SchemaError("/sim/dt", "must be positive");
  c.sim.n_paths = has(sim, "n_paths") ? read_unsigned(sim, "/sim", "n_paths") : 1000;
  if (c.sim.n_paths < 1) throw SchemaError("/sim/n_paths", "must be at least 1");
  c.sim.master_seed = has(sim, "seed") ? read_unsigned(sim, "/sim", "seed") : 0;
  c.sim.record_stride = has(sim, "record_stride") ? read_unsigned(sim, "/sim", "record_stride")
                                                  : default_record_stride(c.sim.horizon, c.sim.dt);
  if (c.sim.record_stride < 1) throw SchemaError("/sim/record_stride", "must be at least 1");
  if (has(sim, "z_hold")) {
    const std::string v = read_string(sim, "/sim", "z_hold");
    if (v == "midpoint")
      c.sim.z_hold = ZHold::Midpoint;
    else if (v == "left-point")
      c.sim.z_hold = ZHold::LeftPoint;
    else
      throw SchemaError("/sim/z_hold", "expected \"midpoint\" or \"left-point\"");
  }
  if (has(sim, "scheme")) {
    const std::string v = read_string(sim, "/sim", "scheme");
    if (v == "splitting")
      c.sim.scheme = Scheme::Splitting;
    else if (v == "euler-maruyama")
      c.sim.scheme = Scheme::EulerMaruyama;
    else
      throw SchemaError("/sim/scheme", "expected \"splitting\" or \"euler-maruyama\"");
  }
  if (has(sim, "init")) {
    const Json& init = sim.at("init");
    reject_unknown(init, "/sim/init", {"S", "V", "E", "I", "z"});
    c.sim.init = {read_number(init, "/sim/init", "S"), read_number(init, "/sim/init", "V"),
                  read_number(init, "/sim/init", "E"), read_number(init, "/sim/init", "I"),
                  read_number(init, "/sim/init", "z")};
  }
  else {
    c.sim.init = default_init(c.sim.params);
  }

  if (has(doc, "experiment")) {
    const Json& exp = doc.at("experiment");
    reject_unknown(exp, "/experiment",
                   {"kind", "write_paths", "fit_fraction", "bins", "tv_threshold", "epsilon_persist", "pass_fraction"});
    if (has(exp, "kind")) {
      c.experiment.kind = read_string(exp, "/experiment", "kind");
      if (!kExperimentKinds.contains(*c.experiment.kind)) throw SchemaError("/experiment/kind", "unknown experiment");
    }
    if (has(exp, "write_paths")) c.experiment.write_paths = read_unsigned(exp, "/experiment", "write_paths");
    if (has(exp, "fit_fraction")) c.experiment.fit_fraction = read_number(exp, "/experiment", "fit_fraction");
    if (!(c.experiment.fit_fraction > 0.0 && c.experiment.fit_fraction <= 1.0))
      throw SchemaError("/experiment/fit_fraction", "must lie in (0, 1]");
    if (has(exp, "bins")) c.experiment.bins = read_unsigned(exp, "/experiment", "bins");
    if (c.experiment.bins < 2) throw SchemaError("/experiment/bins", "must be at least 2");
    if (has(exp, "tv_threshold")) c.experiment.tv_threshold = read_number(exp, "/experiment", "tv_threshold");
    if (has(exp, "epsilon_persist"))
      c.experiment.epsilon_persist = read_number(exp, "/experiment", "epsilon_persist");
    if (has(exp, "pass_fraction")) c.experiment.pass_fraction = read_number(exp, "/experiment", "pass_fraction");
    if (!(c.experiment.pass_fraction > 0.0 && c.experiment.pass_fraction <= 1.0))
      throw SchemaError("/experiment/pass_fraction", "must lie in (0, 1]");
  }

  validate_config(c.sim);
  return c;
}

inline Config parse_config_text(std::string_view text)
{
  Json doc;
  try {
    doc = Json::parse(text);
  }
  catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("/", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(doc);
}

inline std::string read_text_file(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline Config parse_config_file(const std::filesystem::path& path)
{
  std::string text;
  try {
    text = read_text_file(path);
  }
  catch (const IoError& e) {
    throw SchemaError("/", e.what());
  }
  return parse_config_text(text);
}

inline void write_text_file(const std::filesystem::path& path, std::string_view content)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

/// 17 significant digits, enough to round-trip any double.
inline std::string format_number(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Trajectory as CSV with header t,S,V,E,I,z,beta,N,Ve.
inline std::string trajectory_csv(const Trajectory& traj)
{
  const ModelParams& p = traj.meta.params;
  std::string out = "t,S,V,E,I,z,beta,N,Ve\n";
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const State& s = traj.states[i];
    const double row[] = {traj.times[i], s.S, s.V, s.E, s.I, s.z, p.beta_bar * std::exp(s.z), s.total(),
                          extinction_functional(s, p)};
    for (std::size_t c = 0; c < std::size(row); ++c) {
      if (c) out += ',';
      out += format_number(row[c]);
    }
    out += '\n';
  }
  return out;
}

inline std::string histogram_csv(const Histogram& h)
{
  std::string out = "bin_left,bin_right,mass\n";
  for (std::size_t j = 0; j < h.bins(); ++j)
    out += format_number(h.edges[j]) + ',' + format_number(h.edges[j + 1]) + ',' + format_number(h.masses[j]) + '\n';
  return out;
}

inline Json to_json(const ThresholdReport& r)
{
  return Json{{"r0", r.r0},   {"r0_s", r.r0_s},          {"r0_e", r.r0_e},
              {"s0", r.s0},   {"dfe", to_json(r.dfe)},   {"regime", to_string(r.regime)}};
}

inline Json to_json(const Histogram& h)
{
  return Json{{"edges", h.edges}, {"masses", h.masses}, {"n_samples", h.n_samples}, {"burn_in", h.burn_in}};
}

inline Json to_json(const ExtinctionReport& r)
{
  return Json{{"slope", r.slope},         {"slope_se", r.slope_se}, {"bound", r.bound},
              {"margin", r.margin},       {"pass", r.pass},         {"fit_window", {r.fit_start, r.fit_end}},
              {"nodes", r.nodes},         {"truncated", r.truncated}};
}

inline Json to_json(const PersistenceVerdict& v)
{
  return Json{{"pass", v.pass},
              {"r0_s", v.r0_s},
              {"histograms_stable", v.histograms_stable},
              {"tv_distance", v.tv_distance},
              {"tv_threshold", v.tv_threshold},
              {"persistent", v.persistent},
              {"epsilon_persist", v.epsilon_persist},
              {"fraction_persistent", v.fraction_persistent},
              {"pass_fraction", v.pass_fraction},
              {"mean_time_average_I", v.mean_time_average_i},
              {"paths", v.paths},
              {"early_window", to_json(v.early)},
              {"late_window", to_json(v.late)},
              {"warnings", v.warnings}};
}

inline Json to_json(const ExtinctionVerdict& v)
{
  Json reports = Json::array();
  for (const auto& r : v.reports) reports.push_back(to_json(r));
  return Json{{"pass", v.pass},
              {"r0_e", v.r0_e},
              {"bound", v.bound},
              {"fraction_within_bound", v.fraction_within_bound},
              {"pass_fraction", v.pass_fraction},
              {"paths", v.paths},
              {"extinct_paths", v.extinct_paths},
              {"mean_slope", v.mean_slope},
              {"reports", reports},
              {"warnings", v.warnings}};
}

/// Record of one CLI run. `wall_clock_seconds` is the only field that varies
/// between otherwise identical runs.
struct RunManifest
{
  Config config;
  ThresholdReport thresholds;
  std::vector<std::string> artifacts;  // file names relative to the output directory
  std::vector<PathFailure> failures;
  std::string tool_version{kToolVersion};
  double wall_clock_seconds{0.0};

  bool operator==(const RunManifest& o) const
  {
    if (failures.size() != o.failures.size()) return false;
    for (std::size_t i = 0; i < failures.size(); ++i)
      if (failures[i].index != o.failures[i].index || failures[i].message != o.failures[i].message) return false;
    return config == o.config && thresholds == o.thresholds && artifacts == o.artifacts
           && tool_version == o.tool_version && wall_clock_seconds == o.wall_clock_seconds;
  }
};

inline Json to_json(const RunManifest& m)
{
  Json failures = Json::array();
  for (const auto& f : m.failures) failures.push_back(Json{{"index", f.index}, {"message", f.message}});
  return Json{{"tool_version", m.tool_version}, {"config", to_json(m.config)},
              {"thresholds", to_json(m.thresholds)}, {"artifacts", m.artifacts},
              {"failures", failures},           {"wall_clock_seconds", m.wall_clock_seconds}};
}

inline State state_from_json(const Json& j)
{
  return {j.at("S").get<double>(), j.at("V").get<double>(), j.at("E").get<double>(), j.at("I").get<double>(),
          j.at("z").get<double>()};
}

inline Regime regime_from_string(std::string_view s)
{
  for (Regime r : {Regime::PersistencePredicted, Regime::ExtinctionPredicted, Regime::Indeterminate})
    if (to_string(r) == s) return r;
  throw SchemaError("/thresholds/regime", "unknown regime");
}

inline RunManifest manifest_from_json(const Json& j)
{
  RunManifest m;
  m.tool_version = j.at("tool_version").get<std::string>();
  m.config = parse_config(j.at("config"));
  const Json& t = j.at("thresholds");
  m.thresholds = {t.at("r0").get<double>(),   t.at("r0_s").get<double>(),     t.at("r0_e").get<double>(),
                  t.at("s0").get<double>(),   state_from_json(t.at("dfe")),
                  regime_from_string(t.at("regime").get<std::string>())};
  m.artifacts = j.at("artifacts").get<std::vector<std::string>>();
  for (const auto& f : j.at("failures"))
    m.failures.push_back({f.at("index").get<std::uint64_t>(), f.at("message").get<std::string>()});
  m.wall_clock_seconds = j.at("wall_clock_seconds").get<double>();
  return m;
}

/// Two-space indented JSON with a trailing newline. Doubles use the shortest
/// representation that round-trips exactly.
inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace sveis

#endif  // SVEIS_IO_HPP
