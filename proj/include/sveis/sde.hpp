#ifndef SVEIS_SDE_HPP
#define SVEIS_SDE_HPP

// Stochastic SVEIS paths and reproducible ensembles.
//
// The default scheme splits each step into an exact OU transition for z and an
// RK4 step of the compartments with z frozen. A full-truncation Euler-Maruyama
// scheme on all five coordinates is kept for cross-validation only.

#include "sveis/errors.hpp"
#include "sveis/model.hpp"
#include "sveis/ode.hpp"
#include "sveis/ou.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace sveis
{

enum class Scheme
{
  Splitting,
  EulerMaruyama,
};

/// Value of z used for the compartment sub-step.
enum class ZHold
{
  LeftPoint,  // z at the start of the step
  Midpoint,   // conditional mean of z at the step midpoint, z e^{-theta dt/2}
};

inline std::string_view to_string(Scheme s)
{
  return s == Scheme::Splitting ? "splitting" : "euler-maruyama";
}

inline std::string_view to_string(ZHold h) { return h == ZHold::Midpoint ? "midpoint" : "left-point"; }

struct SimConfig
{
  ModelParams params{};
  State init{};
  double horizon{1.0};
  double dt{0.01};
  std::size_t n_paths{1};
  std::uint64_t master_seed{0};
  std::size_t record_stride{1};
  ZHold z_hold{ZHold::Midpoint};
  Scheme scheme{Scheme::Splitting};

  bool operator==(const SimConfig&) const = default;
};

/// Throws NonPositiveParameter or InvalidConfig.
inline const SimConfig& validate_config(const SimConfig& cfg)
{
  validate_params(cfg.params);
  detail::require_step_inputs(cfg.horizon, cfg.dt);
  if (cfg.n_paths < 1) throw InvalidConfig("n_paths must be at least 1");
  if (cfg.record_stride < 1) throw InvalidConfig("record_stride must be at least 1");
  if (!std::isfinite(cfg.init.z)) throw InvalidConfig("initial z must be finite");
  detail::require_in_gamma(cfg.init, cfg.params);
  return cfg;
}

namespace detail
{

/// RK4 over h; on a negative undershoot retries once as two steps of h/2.
inline State compartment_step(const State& s, double h, const ModelParams& p, double z_frozen)
{
  try {
    return rk4_step(s, h, p, z_frozen);
  }
  catch (const StepProducedNegative&) {
    return rk4_step(rk4_step(s, 0.5 * h, p, z_frozen), 0.5 * h, p, z_frozen);
  }
}

inline State positive_part(State s)
{
  s.S = std::max(s.S, 0.0);
  s.V = std::max(s.V, 0.0);
  s.E = std::max(s.E, 0.0);
  s.I = std::max(s.I, 0.0);
  return s;
}

inline void run_splitting(const SimConfig& cfg, RngStream& rng, Recorder& rec, std::size_t steps)
{
  const ModelParams& p = cfg.params;
  const OuParams ou = p.ou();
  const OuTransition regular(cfg.dt, ou);
  const double regular_half = std::exp(-0.5 * p.theta * cfg.dt);

  State s = cfg.init;
  double t = 0.0;
  for (std::size_t n = 1; n <= steps; ++n) {
    const double next = grid_time(n, steps, cfg.dt, cfg.horizon);
    const double h = next - t;
    const bool is_regular = h == cfg.dt;
    const double z_next = is_regular ? regular.advance(s.z, rng) : ou_step_exact(s.z, h, ou, rng);
    double z_frozen = s.z;
    if (cfg.z_hold == ZHold::Midpoint) z_frozen *= is_regular ? regular_half : std::exp(-0.5 * p.theta * h);
    s = compartment_step(s, h, p, z_frozen);
    s.z = z_next;
    t = next;
    rec.advance(n, t, s);
  }
}

/// Full-truncation Euler-Maruyama: the raw iterate may go negative, drift and
/// recorded states use its positive part.
inline void run_euler_maruyama(const SimConfig& cfg, RngStream& rng, Recorder& rec, std::size_t steps)
{
  const ModelParams& p = cfg.params;
  State raw = cfg.init;
  double t = 0.0;
  for (std::size_t n = 1; n <= steps; ++n) {
    const double next = grid_time(n, steps, cfg.dt, cfg.horizon);
    const double h = next - t;
    const State observed = positive_part(raw);
    const State f = drift(observed, p);
    const double draw = rng.normal();
    const double z_next = raw.z + h * f.z + p.delta * std::sqrt(h) * draw;
    raw = raw + h * f;
    raw.z = z_next;
    t = next;
    rec.advance(n, t, positive_part(raw));
  }
}

}  // namespace detail

/// Simulates path `path_index`, driven by RngStream(master_seed, path_index).
inline Trajectory simulate_path(const SimConfig& cfg, std::uint64_t path_index)
{
  validate_config(cfg);
  Trajectory traj;
  traj.meta = {cfg.params, std::string(to_string(cfg.scheme)), cfg.dt, cfg.master_seed, path_index};

  const std::size_t steps = detail::step_count(cfg.horizon, cfg.dt);
  detail::Recorder rec(traj, cfg.record_stride, steps);
  rec.start(0.0, cfg.init);

  RngStream rng(cfg.master_seed, path_index);
  if (cfg.scheme == Scheme::Splitting)
    detail::run_splitting(cfg, rng, rec, steps);
  else
    detail::run_euler_maruyama(cfg, rng, rec, steps);
  return traj;
}

struct PathFailure
{
  std::uint64_t index;
  std::string message;
};

/// Trajectory i was produced by RngStream(config.master_seed, i). Failed paths
/// leave an empty trajectory in their slot and an entry in `failures`.
struct Ensemble
{
  SimConfig config;
  std::vector<Trajectory> trajectories;
  std::vector<PathFailure> failures;

  bool ok() const { return failures.empty(); }
  std::size_t size() const { return trajectories.size(); }
};

/// Worker count from an explicit request, else hardware concurrency.
inline unsigned resolve_workers(unsigned requested)
{
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs all paths on `workers` threads (0 = hardware concurrency). The result
/// does not depend on the worker count or on scheduling.
inline Ensemble simulate_ensemble(const SimConfig& cfg, unsigned workers = 0)
{
  validate_config(cfg);
  Ensemble ens;
  ens.config = cfg;
  ens.trajectories.resize(cfg.n_paths);
  std::vector<std::optional<std::string>> errors(cfg.n_paths);

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next.fetch_add(1); i < cfg.n_paths; i = next.fetch_add(1)) {
      try {
        ens.trajectories[i] = simulate_path(cfg, i);
      }
      catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };

  const unsigned count = std::min<std::size_t>(resolve_workers(workers), cfg.n_paths);
  if (count <= 1) {
    work();
  }
  else {
    std::vector<std::jthread> pool;
    pool.reserve(count);
    for (unsigned w = 0; w < count; ++w) pool.emplace_back(work);
  }

  for (std::size_t i = 0; i < cfg.n_paths; ++i)
    if (errors[i]) ens.failures.push_back({i, *errors[i]});
  return ens;
}

struct GammaReport
{
  double max_total_excess{-std::numeric_limits<double>::infinity()};  // max N - Pi/m
  double max_susceptible_excess{-std::numeric_limits<double>::infinity()};  // max S - S0
  double min_compartment{std::numeric_limits<double>::infinity()};
  bool pass{true};
};

/// Checks every recorded node against Gamma, all margins scaled by tol * Pi/m.
inline GammaReport check_gamma(const Trajectory& traj, const ModelParams& p, double tol)
{
  GammaReport r;
  const double cap = p.carrying();
  const double s0 = dfe(p).S;
  for (const State& s : traj.states) {
    r.max_total_excess = std::max(r.max_total_excess, s.total() - cap);
    r.max_susceptible_excess = std::max(r.max_susceptible_excess, s.S - s0);
    r.min_compartment = std::min({r.min_compartment, s.S, s.V, s.E, s.I});
  }
  const double slack = tol * cap;
  r.pass = r.max_total_excess <= slack && r.max_susceptible_excess <= slack && r.min_compartment >= -slack;
  return r;
}

}  // namespace sveis

#endif  // SVEIS_SDE_HPP
