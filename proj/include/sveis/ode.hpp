#ifndef SVEIS_ODE_HPP
#define SVEIS_ODE_HPP

// Fixed-step RK4 for the four compartments with the transmission rate frozen.
// Serves both as the deterministic solver and as the compartment propagator
// inside the stochastic splitting step.

#include "sveis/errors.hpp"
#include "sveis/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sveis
{

struct TrajectoryMeta
{
  ModelParams params{};
  std::string scheme{"rk4"};
  double dt{0.0};
  std::optional<std::uint64_t> seed{};  // empty for deterministic runs
  std::uint64_t path_index{0};
};

/// Recorded states on an increasing time grid.
///
/// `integrals[i]` holds the running integral of (S, V, E, I, z) from times[0]
/// to times[i], accumulated with the trapezoid rule at every internal step, so
/// time averages stay at full resolution when storage is thinned.
struct Trajectory
{
  std::vector<double> times;
  std::vector<State> states;
  std::vector<State> integrals;
  TrajectoryMeta meta;

  std::size_t size() const { return times.size(); }
  double start() const { return times.front(); }
  double horizon() const { return times.back(); }
  const State& back() const { return states.back(); }
};

/// Step size 0.01 times the shortest mean residence time of any compartment.
inline double default_dt(const ModelParams& p)
{
  const double fastest = std::max({p.m, p.m + p.alpha, p.m + p.omega, p.exposed_exit(), p.infectious_exit()});
  return 0.01 / fastest;
}

/// Tolerance for negative undershoot: 1e-12 * Pi/m.
inline double negativity_tolerance(const ModelParams& p) { return 1e-12 * p.carrying(); }

namespace detail
{

/// Throws when a compartment is below -tol; rounds tiny undershoots up to 0.
inline void enforce_nonnegative(State& s, const ModelParams& p)
{
  const double tol = negativity_tolerance(p);
  auto check = [tol](double& v, const char* name) {
    if (v < -tol || std::isnan(v)) throw StepProducedNegative(name, v);
    if (v < 0.0) v = 0.0;
  };
  check(s.S, "S");
  check(s.V, "V");
  check(s.E, "E");
  check(s.I, "I");
}

/// Number of steps covering [0, T] with step dt, the last one possibly shortened.
inline std::size_t step_count(double horizon, double dt)
{
  const double ratio = horizon / dt;
  const double whole = std::round(ratio);
  if (std::abs(ratio - whole) <= 1e-9 * std::max(1.0, ratio)) return static_cast<std::size_t>(whole);
  return static_cast<std::size_t>(std::ceil(ratio));
}

/// Time of node n on the uniform grid, clipped to the horizon.
inline double grid_time(std::size_t n, std::size_t steps, double dt, double horizon)
{
  return n == steps ? horizon : static_cast<double>(n) * dt;
}

/// Stores every `stride`-th node plus the last one, and keeps running integrals.
class Recorder
{
 public:
  Recorder(Trajectory& out, std::size_t stride, std::size_t steps)
      : out_(out), stride_(std::max<std::size_t>(stride, 1)), steps_(steps)
  {
    const std::size_t nodes = steps / stride_ + 2;
    out_.times.reserve(nodes);
    out_.states.reserve(nodes);
    out_.integrals.reserve(nodes);
  }

  void start(double t, const State& s)
  {
    prev_t_ = t;
    prev_ = s;
    running_ = State{};
    push(t, s);
  }

  void advance(std::size_t n, double t, const State& s)
  {
    running_ += (0.5 * (t - prev_t_)) * (prev_ + s);
    prev_t_ = t;
    prev_ = s;
    if (n % stride_ == 0 || n == steps_) push(t, s);
  }

 private:
  void push(double t, const State& s)
  {
    out_.times.push_back(t);
    out_.states.push_back(s);
    out_.integrals.push_back(running_);
  }

  Trajectory& out_;
  std::size_t stride_;
  std::size_t steps_;
  double prev_t_{0.0};
  State prev_{};
  State running_{};
};

inline void require_step_inputs(double horizon, double dt)
{
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw InvalidConfig("horizon must be positive");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidConfig("dt must be positive");
}

inline void require_in_gamma(const State& init, const ModelParams& p)
{
  if (!in_gamma(init, p, 1e-12)) throw InvalidConfig("initial state lies outside the invariant region");
}

}  // namespace detail

/// One classical RK4 step of (S, V, E, I) with beta = beta_bar e^{z_frozen}; z is
/// carried over unchanged.
inline State rk4_step(const State& s, double dt, const ModelParams& p, double z_frozen)
{
  const double beta = p.beta_bar * std::exp(z_frozen);
  const double half = 0.5 * dt;
  const State k1 = compartment_drift(s, p, beta);
  const State k2 = compartment_drift(s + half * k1, p, beta);
  const State k3 = compartment_drift(s + half * k2, p, beta);
  const State k4 = compartment_drift(s + dt * k3, p, beta);
  State out = s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  out.z = s.z;
  detail::enforce_nonnegative(out, p);
  return out;
}

/// Integrates the deterministic model on [0, T] with beta = beta_bar e^{init.z}.
inline Trajectory integrate_deterministic(const ModelParams& raw, const State& init, double horizon,
                                          double dt, std::size_t record_stride = 1)
{
  const ModelParams p = validate_params(raw);
  detail::require_step_inputs(horizon, dt);
  detail::require_in_gamma(init, p);

  Trajectory traj;
  traj.meta = {p, "rk4", dt, std::nullopt, 0};
  const std::size_t steps = detail::step_count(horizon, dt);
  detail::Recorder rec(traj, record_stride, steps);

  State s = init;
  rec.start(0.0, s);
  double t = 0.0;
  for (std::size_t n = 1; n <= steps; ++n) {
    const double next = detail::grid_time(n, steps, dt, horizon);
    s = rk4_step(s, next - t, p, init.z);
    t = next;
    rec.advance(n, t, s);
  }
  return traj;
}

}  // namespace sveis

#endif  // SVEIS_ODE_HPP
