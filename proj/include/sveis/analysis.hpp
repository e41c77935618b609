#ifndef SVEIS_ANALYSIS_HPP
#define SVEIS_ANALYSIS_HPP

// Ensemble diagnostics: time averages, pooled histograms, and the persistence
// and extinction verdicts built from them.

#include "sveis/errors.hpp"
#include "sveis/model.hpp"
#include "sveis/ode.hpp"
#include "sveis/sde.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sveis
{

enum class Component
{
  S,
  V,
  E,
  I,
  Z,
  N,     // S + V + E + I
  Beta,  // beta_bar e^z
};

inline std::string_view to_string(Component c)
{
  switch (c) {
    case Component::S: return "S";
    case Component::V: return "V";
    case Component::E: return "E";
    case Component::I: return "I";
    case Component::Z: return "z";
    case Component::N: return "N";
    case Component::Beta: return "beta";
  }
  return "?";
}

inline std::optional<Component> parse_component(std::string_view name)
{
  for (Component c : {Component::S, Component::V, Component::E, Component::I, Component::Z, Component::N,
                      Component::Beta})
    if (to_string(c) == name) return c;
  return std::nullopt;
}

inline double select(const State& s, Component c, const ModelParams& p)
{
  switch (c) {
    case Component::S: return s.S;
    case Component::V: return s.V;
    case Component::E: return s.E;
    case Component::I: return s.I;
    case Component::Z: return s.z;
    case Component::N: return s.total();
    case Component::Beta: return p.beta_bar * std::exp(s.z);
  }
  return 0.0;
}

/// V_e = w1/(m+sigma+xi) E + w2/(m+gamma+eta) I.
inline double extinction_functional(const State& s, const ModelParams& p)
{
  const ExtinctionWeights w = extinction_weights(p);
  return w.w1 / p.exposed_exit() * s.E + w.w2 / p.infectious_exit() * s.I;
}

/// Smallest V_e treated as representable; below it the disease counts as extinct.
inline constexpr double kVeUnderflow = 1e-300;

struct ExtinctionReport
{
  double slope{};      // least-squares slope of ln V_e against t
  double slope_se{};   // its standard error
  double bound{};      // min{m+sigma+xi, m+gamma+eta} (R0^e - 1)
  double margin{};     // bound - slope
  bool pass{};         // slope <= bound + 2 se
  double fit_start{};
  double fit_end{};
  std::size_t nodes{};
  bool truncated{};    // fit stopped early at V_e underflow
};

/// Decay-rate bound of ln V_e implied by the extinction threshold.
inline double extinction_rate_bound(const ModelParams& p)
{
  return std::min(p.exposed_exit(), p.infectious_exit()) * (r0_e(p) - 1.0);
}

namespace detail
{

struct LineFit
{
  double slope;
  double se;
};

inline LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y)
{
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double slope = sxy / sxx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - my - slope * (x[i] - mx);
    ssr += r * r;
  }
  return {slope, std::sqrt(ssr / (n - 2.0) / sxx)};
}

}  // namespace detail

/// Fits ln V_e(t) over the trailing `fit_fraction` of the trajectory and compares
/// the slope with the theoretical decay bound, allowing two standard errors.
inline ExtinctionReport extinction_rate_estimate(const Trajectory& traj, const ModelParams& p,
                                                 double fit_fraction = 0.5)
{
  if (!(fit_fraction > 0.0 && fit_fraction <= 1.0)) throw InvalidConfig("fit_fraction must lie in (0, 1]");
  if (traj.size() < 2) throw EmptyFitWindow();

  ExtinctionReport r;
  r.bound = extinction_rate_bound(p);
  r.fit_start = traj.horizon() - fit_fraction * (traj.horizon() - traj.start());

  std::vector<double> x, y;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (traj.times[i] < r.fit_start) continue;
    const double ve = extinction_functional(traj.states[i], p);
    if (!(ve >= kVeUnderflow)) {
      r.truncated = true;
      break;
    }
    x.push_back(traj.times[i]);
    y.push_back(std::log(ve));
  }
  if (x.size() < 10) throw EmptyFitWindow();

  const detail::LineFit fit = detail::least_squares(x, y);
  r.slope = fit.slope;
  r.slope_se = fit.se;
  r.margin = r.bound - r.slope;
  r.pass = r.slope <= r.bound + 2.0 * r.slope_se;
  r.fit_end = x.back();
  r.nodes = x.size();
  return r;
}

/// Trapezoidal average of f over [burn_in, T] on the recorded nodes, with the
/// value at burn_in linearly interpolated. Normalized by the summed weights, so a
/// constant series averages to itself.
inline double time_average(const Trajectory& traj, const std::function<double(const State&)>& f,
                           double burn_in)
{
  if (traj.size() < 2 || !(burn_in < traj.horizon())) throw EmptyFitWindow();
  const auto first = std::upper_bound(traj.times.begin(), traj.times.end(), burn_in);
  std::size_t k = static_cast<std::size_t>(first - traj.times.begin());

  double t_prev, v_prev;
  if (k == 0) {
    t_prev = traj.times[0];
    v_prev = f(traj.states[0]);
    k = 1;
  }
  else {
    const double t0 = traj.times[k - 1];
    const double t1 = traj.times[k];
    const double w = (burn_in - t0) / (t1 - t0);
    t_prev = burn_in;
    v_prev = (1.0 - w) * f(traj.states[k - 1]) + w * f(traj.states[k]);
  }

  double weighted = 0.0, weights = 0.0;
  for (; k < traj.size(); ++k) {
    const double h = traj.times[k] - t_prev;
    const double v = f(traj.states[k]);
    weighted += h * (v_prev + v);
    weights += 2.0 * h;
    t_prev = traj.times[k];
    v_prev = v;
  }
  return weighted / weights;
}

/// Time average of a component over [burn_in, T]. Components that are linear in
/// the state use the running integrals, which carry full step resolution.
inline double time_average(const Trajectory& traj, Component c, double burn_in)
{
  const ModelParams& p = traj.meta.params;
  if (c == Component::Beta || traj.integrals.size() != traj.size())
    return time_average(traj, [&](const State& s) { return select(s, c, p); }, burn_in);
  if (traj.size() < 2 || !(burn_in < traj.horizon())) throw EmptyFitWindow();

  double lower_t = traj.start();
  double lower = 0.0;
  if (burn_in > traj.start()) {
    const auto it = std::upper_bound(traj.times.begin(), traj.times.end(), burn_in);
    const std::size_t k = static_cast<std::size_t>(it - traj.times.begin());
    const double t0 = traj.times[k - 1];
    const double w = (burn_in - t0) / (traj.times[k] - t0);
    const double x0 = select(traj.states[k - 1], c, p);
    const double xb = (1.0 - w) * x0 + w * select(traj.states[k], c, p);
    lower = select(traj.integrals[k - 1], c, p) + 0.5 * (burn_in - t0) * (x0 + xb);
    lower_t = burn_in;
  }
  const double upper = select(traj.integrals.back(), c, p);
  return (upper - lower) / (traj.horizon() - lower_t);
}

struct Histogram
{
  std::vector<double> edges;
  std::vector<double> masses;
  std::size_t n_samples{0};
  double burn_in{0.0};

  std::size_t bins() const { return masses.size(); }
};

/// Uniform edges covering [lo, hi] padded by 1% of the range. A range narrower
/// than `min_span` is degenerate: one bin wide enough for all of it is centered
/// on the data, so every sample falls in the same bin.
inline std::vector<double> make_edges(double lo, double hi, std::size_t bins, double min_span = 0.0)
{
  if (bins < 2) throw InvalidConfig("histogram needs at least 2 bins");
  std::vector<double> edges(bins + 1);
  const double span = hi - lo;
  const double floor = std::max(min_span, 1e-9 * std::max({1.0, std::abs(lo), std::abs(hi)}));
  if (span >= floor) {
    const double a = lo - 0.01 * span;
    const double width = 1.02 * span / static_cast<double>(bins);
    for (std::size_t j = 0; j <= bins; ++j) edges[j] = a + width * static_cast<double>(j);
    edges[bins] = hi + 0.01 * span;
  }
  else {
    const double width = 1.02 * floor;
    const double center_left = lo - 0.5 * (width - span);
    const auto mid = static_cast<double>(bins / 2);
    for (std::size_t j = 0; j <= bins; ++j) edges[j] = center_left + (static_cast<double>(j) - mid) * width;
  }
  return edges;
}

/// Normalized histogram of `samples` on fixed uniform `edges`; samples outside
/// are clamped into the end bins.
inline Histogram histogram(const std::vector<double>& samples, std::vector<double> edges, double burn_in = 0.0)
{
  if (samples.empty()) throw EmptyFitWindow("no samples to histogram");
  Histogram h;
  const std::size_t bins = edges.size() - 1;
  std::vector<std::size_t> counts(bins, 0);
  const double lo = edges.front();
  const double width = (edges.back() - lo) / static_cast<double>(bins);
  for (double x : samples) {
    const double pos = std::floor((x - lo) / width);
    const auto idx = static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(bins - 1)));
    ++counts[idx];
  }
  h.masses.resize(bins);
  for (std::size_t j = 0; j < bins; ++j)
    h.masses[j] = static_cast<double>(counts[j]) / static_cast<double>(samples.size());
  h.edges = std::move(edges);
  h.n_samples = samples.size();
  h.burn_in = burn_in;
  return h;
}

/// Recorded values of a component with t in [t0, t1), pooled over all successful paths
/// in path order. The last node of each path is included when t1 equals its horizon.
inline std::vector<double> pooled_samples(const Ensemble& ens, Component c, double t0, double t1)
{
  std::vector<double> out;
  const ModelParams& p = ens.config.params;
  for (const Trajectory& traj : ens.trajectories) {
    for (std::size_t i = 0; i < traj.size(); ++i) {
      const double t = traj.times[i];
      if (t >= t0 && (t < t1 || (t == t1 && t1 == traj.horizon()))) out.push_back(select(traj.states[i], c, p));
    }
  }
  return out;
}

/// Pooled post-burn-in histogram of a component across all paths.
inline Histogram stationary_histogram(const Ensemble& ens, Component c, double burn_in, std::size_t bins)
{
  if (!(burn_in < ens.config.horizon)) throw EmptyFitWindow();
  const std::vector<double> samples = pooled_samples(ens, c, burn_in, ens.config.horizon);
  if (samples.empty()) throw EmptyFitWindow();
  const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
  return histogram(samples, make_edges(*lo, *hi, bins), burn_in);
}

/// Total-variation distance 1/2 sum |a_i - b_i|. When edges differ, b is re-binned
/// onto a's edges assuming uniform mass within each of b's bins; mass of b falling
/// outside a's range counts fully toward the distance.
inline double histogram_distance(const Histogram& a, const Histogram& b)
{
  std::vector<double> rebinned;
  double outside = 0.0;
  if (a.edges == b.edges) {
    rebinned = b.masses;
  }
  else {
    rebinned.assign(a.bins(), 0.0);
    double placed = 0.0;
    for (std::size_t j = 0; j < b.bins(); ++j) {
      const double l = b.edges[j], r = b.edges[j + 1];
      double inside = 0.0;
      for (std::size_t i = 0; i < a.bins(); ++i) {
        const double overlap = std::min(r, a.edges[i + 1]) - std::max(l, a.edges[i]);
        if (overlap > 0.0) {
          const double share = b.masses[j] * overlap / (r - l);
          rebinned[i] += share;
          inside += share;
        }
      }
      placed += inside;
      outside += std::max(b.masses[j] - inside, 0.0);
    }
    if (placed <= 0.0) throw IncompatibleBinning();
  }
  double sum = outside;
  for (std::size_t i = 0; i < a.bins(); ++i) sum += std::abs(a.masses[i] - rebinned[i]);
  return std::clamp(0.5 * sum, 0.0, 1.0);
}

struct PersistenceOptions
{
  std::size_t bins{20};
  double tv_threshold{0.05};
  std::optional<double> epsilon_persist{};  // default 1e-4 * Pi/m
  double pass_fraction{0.95};
};

struct PersistenceVerdict
{
  bool pass{};
  bool histograms_stable{};
  bool persistent{};
  double tv_distance{};
  double tv_threshold{};
  double epsilon_persist{};
  double fraction_persistent{};
  double pass_fraction{};
  double mean_time_average_i{};
  Histogram early;  // I over [T/2, 3T/4)
  Histogram late;   // I over [3T/4, T]
  std::size_t paths{};
  double r0_s{};
  std::vector<std::string> warnings;
};

/// Stationarity evidence for I: the pooled I-histograms over [T/2, 3T/4) and
/// [3T/4, T] agree within the TV threshold, and the time-averaged I over [T/2, T]
/// exceeds epsilon_persist on at least pass_fraction of the paths.
inline PersistenceVerdict persistence_verdict(const Ensemble& ens, const ModelParams& p,
                                              const PersistenceOptions& opt = {})
{
  PersistenceVerdict v;
  v.r0_s = r0_s(p);
  if (!(v.r0_s > 1.0)) v.warnings.push_back("r0_s <= 1: persistence is not predicted for these parameters");
  v.tv_threshold = opt.tv_threshold;
  v.pass_fraction = opt.pass_fraction;
  v.epsilon_persist = opt.epsilon_persist.value_or(1e-4 * p.carrying());

  const double horizon = ens.config.horizon;
  const double half = 0.5 * horizon;
  const double three_quarter = 0.75 * horizon;
  const std::vector<double> early = pooled_samples(ens, Component::I, half, three_quarter);
  const std::vector<double> late = pooled_samples(ens, Component::I, three_quarter, horizon);
  if (early.empty() || late.empty()) throw EmptyFitWindow("persistence windows hold no recorded nodes");

  const auto [elo, ehi] = std::minmax_element(early.begin(), early.end());
  const auto [llo, lhi] = std::minmax_element(late.begin(), late.end());
  const auto edges = make_edges(std::min(*elo, *llo), std::max(*ehi, *lhi), opt.bins, v.epsilon_persist);
  v.early = histogram(early, edges, half);
  v.late = histogram(late, edges, three_quarter);
  v.tv_distance = histogram_distance(v.early, v.late);
  v.histograms_stable = v.tv_distance < opt.tv_threshold;

  std::size_t above = 0;
  double sum = 0.0;
  for (const Trajectory& traj : ens.trajectories) {
    if (traj.size() < 2) continue;
    const double avg = time_average(traj, Component::I, half);
    sum += avg;
    if (avg > v.epsilon_persist) ++above;
    ++v.paths;
  }
  if (v.paths == 0) throw EmptyFitWindow("no successful paths");
  v.fraction_persistent = static_cast<double>(above) / static_cast<double>(v.paths);
  v.mean_time_average_i = sum / static_cast<double>(v.paths);
  v.persistent = v.fraction_persistent >= opt.pass_fraction;
  v.pass = v.histograms_stable && v.persistent;
  return v;
}

struct ExtinctionOptions
{
  double fit_fraction{0.5};
  double pass_fraction{0.95};
  std::size_t bins{20};
};

struct ExtinctionVerdict
{
  bool pass{};
  double bound{};
  double r0_e{};
  double fraction_within_bound{};
  double pass_fraction{};
  std::size_t paths{};
  std::size_t extinct_paths{};  // V_e underflowed before a fit was possible
  double mean_slope{};
  std::vector<ExtinctionReport> reports;  // one per fitted path, in path order
  std::optional<Histogram> slopes;        // histogram of fitted slopes
  std::vector<std::string> warnings;
};

/// Fraction of paths whose ln V_e slope respects the decay bound (two standard
/// errors of slack). Paths where V_e underflows count as satisfying it.
inline ExtinctionVerdict extinction_verdict(const Ensemble& ens, const ModelParams& p,
                                            const ExtinctionOptions& opt = {})
{
  ExtinctionVerdict v;
  v.r0_e = r0_e(p);
  v.bound = extinction_rate_bound(p);
  v.pass_fraction = opt.pass_fraction;
  if (!(v.r0_e < 1.0)) v.warnings.push_back("r0_e >= 1: extinction is not predicted for these parameters");

  std::size_t ok = 0;
  double slope_sum = 0.0;
  std::vector<double> slopes;
  for (const Trajectory& traj : ens.trajectories) {
    if (traj.size() < 2) continue;
    ++v.paths;
    try {
      ExtinctionReport r = extinction_rate_estimate(traj, p, opt.fit_fraction);
      if (r.pass) ++ok;
      slope_sum += r.slope;
      slopes.push_back(r.slope);
      v.reports.push_back(r);
    }
    catch (const EmptyFitWindow&) {
      if (extinction_functional(traj.back(), p) < kVeUnderflow) {
        ++v.extinct_paths;
        ++ok;
      }
      else {
        v.warnings.push_back("path " + std::to_string(traj.meta.path_index)
                             + ": too few recorded nodes in the fit window");
      }
    }
  }
  if (v.paths == 0) throw EmptyFitWindow("no successful paths");
  v.fraction_within_bound = static_cast<double>(ok) / static_cast<double>(v.paths);
  if (!slopes.empty()) {
    v.mean_slope = slope_sum / static_cast<double>(slopes.size());
    const auto [lo, hi] = std::minmax_element(slopes.begin(), slopes.end());
    v.slopes = histogram(slopes, make_edges(*lo, *hi, opt.bins));
  }
  v.pass = v.fraction_within_bound >= opt.pass_fraction;
  return v;
}

}  // namespace sveis

#endif  // SVEIS_ANALYSIS_HPP
