#ifndef SVEIS_CLI_HPP
#define SVEIS_CLI_HPP

// Subcommands of the `sveis` tool, kept in the library so tests can drive them
// without spawning a process.
//
// Exit codes: 0 success / verdict pass, 1 verdict fail, 2 config error,
// 3 simulation error, 4 I/O error.

#include "sveis/analysis.hpp"
#include "sveis/io.hpp"
#include "sveis/model.hpp"
#include "sveis/sde.hpp"

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>

namespace sveis::cli
{

enum ExitCode : int
{
  kOk = 0,
  kVerdictFail = 1,
  kConfigError = 2,
  kSimulationError = 3,
  kIoError = 4,
};

struct Options
{
  std::filesystem::path config;
  std::filesystem::path out{"."};
  std::optional<std::uint64_t> seed{};
  std::optional<unsigned> threads{};
};

/// --threads, else SVEIS_THREADS, else 0 (hardware concurrency).
inline unsigned thread_count(const Options& opt)
{
  if (opt.threads) return *opt.threads;
  if (const char* env = std::getenv("SVEIS_THREADS")) {
    char* end = nullptr;
    const unsigned long value = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0') return static_cast<unsigned>(value);
  }
  return 0;
}

namespace detail
{

class Clock
{
 public:
  double seconds() const
  {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_{std::chrono::steady_clock::now()};
};

inline Config load(const Options& opt)
{
  Config c = parse_config_file(opt.config);
  if (opt.seed) c.sim.master_seed = *opt.seed;
  return c;
}

inline void prepare_out(const std::filesystem::path& dir)
{
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

inline std::string path_file_name(std::uint64_t index)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "path_%06llu.csv", static_cast<unsigned long long>(index));
  return buf;
}

inline void write_manifest(const Options& opt, RunManifest& m, const Clock& clock)
{
  m.artifacts.push_back("manifest.json");
  m.wall_clock_seconds = clock.seconds();
  write_text_file(opt.out / "manifest.json", dump(to_json(m)));
}

inline RunManifest start_manifest(const Config& c, const Ensemble* ens)
{
  RunManifest m;
  m.config = c;
  m.thresholds = thresholds(c.sim.params);
  if (ens) m.failures = ens->failures;
  return m;
}

}  // namespace detail

inline int cmd_thresholds(const Options& opt, std::ostream& out)
{
  const Config c = detail::load(opt);
  out << dump(to_json(thresholds(c.sim.params)));
  return kOk;
}

inline int cmd_dfe(const Options& opt, std::ostream& out)
{
  const Config c = detail::load(opt);
  out << dump(to_json(dfe(c.sim.params)));
  return kOk;
}

/// One CSV per path (capped by experiment.write_paths) plus manifest.json.
inline int cmd_simulate(const Options& opt, std::ostream& out)
{
  detail::Clock clock;
  Config c = detail::load(opt);
  SimConfig sim = c.sim;
  if (c.experiment.write_paths) sim.n_paths = std::min<std::size_t>(sim.n_paths, *c.experiment.write_paths);
  if (sim.n_paths == 0) throw SchemaError("/experiment/write_paths", "must be at least 1");
  detail::prepare_out(opt.out);

  const Ensemble ens = simulate_ensemble(sim, thread_count(opt));
  RunManifest m = detail::start_manifest(c, &ens);
  for (std::size_t i = 0; i < ens.size(); ++i) {
    if (ens.trajectories[i].size() == 0) continue;
    const std::string name = detail::path_file_name(i);
    write_text_file(opt.out / name, trajectory_csv(ens.trajectories[i]));
    m.artifacts.push_back(name);
  }
  detail::write_manifest(opt, m, clock);
  out << "wrote " << m.artifacts.size() << " files to " << opt.out.string() << "\n";
  return ens.ok() ? kOk : kSimulationError;
}

inline int cmd_persistence(const Options& opt, std::ostream& out)
{
  detail::Clock clock;
  const Config c = detail::load(opt);
  detail::prepare_out(opt.out);
  const Ensemble ens = simulate_ensemble(c.sim, thread_count(opt));
  RunManifest m = detail::start_manifest(c, &ens);
  if (!ens.ok()) {
    detail::write_manifest(opt, m, clock);
    return kSimulationError;
  }
  PersistenceOptions po;
  po.bins = c.experiment.bins;
  po.tv_threshold = c.experiment.tv_threshold;
  po.epsilon_persist = c.experiment.epsilon_persist;
  po.pass_fraction = c.experiment.pass_fraction;
  const PersistenceVerdict v = persistence_verdict(ens, c.sim.params, po);

  Json report = to_json(v);
  report["thresholds"] = to_json(m.thresholds);
  write_text_file(opt.out / "persistence.json", dump(report));
  write_text_file(opt.out / "histogram.csv", histogram_csv(v.late));
  m.artifacts = {"persistence.json", "histogram.csv"};
  detail::write_manifest(opt, m, clock);
  out << "persistence " << (v.pass ? "PASS" : "FAIL") << "  tv=" << v.tv_distance
      << "  fraction_persistent=" << v.fraction_persistent << "\n";
  return v.pass ? kOk : kVerdictFail;
}

inline int cmd_extinction(const Options& opt, std::ostream& out)
{
  detail::Clock clock;
  const Config c = detail::load(opt);
  detail::prepare_out(opt.out);
  const Ensemble ens = simulate_ensemble(c.sim, thread_count(opt));
  RunManifest m = detail::start_manifest(c, &ens);
  if (!ens.ok()) {
    detail::write_manifest(opt, m, clock);
    return kSimulationError;
  }
  ExtinctionOptions eo;
  eo.fit_fraction = c.experiment.fit_fraction;
  eo.pass_fraction = c.experiment.pass_fraction;
  eo.bins = c.experiment.bins;
  const ExtinctionVerdict v = extinction_verdict(ens, c.sim.params, eo);

  Json report = to_json(v);
  report["thresholds"] = to_json(m.thresholds);
  write_text_file(opt.out / "extinction.json", dump(report));
  m.artifacts = {"extinction.json"};
  if (v.slopes) {
    write_text_file(opt.out / "histogram.csv", histogram_csv(*v.slopes));
    m.artifacts.push_back("histogram.csv");
  }
  detail::write_manifest(opt, m, clock);
  out << "extinction " << (v.pass ? "PASS" : "FAIL") << "  fraction_within_bound=" << v.fraction_within_bound
      << "  bound=" << v.bound << "\n";
  return v.pass ? kOk : kVerdictFail;
}

/// Dispatches a subcommand and maps exceptions onto exit codes.
inline int run(std::string_view command, const Options& opt, std::ostream& out, std::ostream& err)
{
  try {
    if (command == "thresholds") return cmd_thresholds(opt, out);
    if (command == "dfe") return cmd_dfe(opt, out);
    if (command == "simulate") return cmd_simulate(opt, out);
    if (command == "persistence") return cmd_persistence(opt, out);
    if (command == "extinction") return cmd_extinction(opt, out);
    err << "unknown command: " << command << "\n";
    return kConfigError;
  }
  catch (const SchemaError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  }
  catch (const NonPositiveParameter& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  }
  catch (const InvalidConfig& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  }
  catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kIoError;
  }
  catch (const std::exception& e) {
    err << "simulation error: " << e.what() << "\n";
    return kSimulationError;
  }
}

}  // namespace sveis::cli

#endif  // SVEIS_CLI_HPP
