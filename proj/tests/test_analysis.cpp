#include "sveis/analysis.hpp"

#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

namespace
{

using namespace sveis;
using sveis::testing::chi_square_pvalue;
using sveis::testing::example_params;
using sveis::testing::normal_cdf;

constexpr double kVeUnitE = 1.290994448735805592;  // w1 / (m + sigma + xi) for the example

// Distinct exit rates so the deterministic decay rate sits strictly inside the bound.
ModelParams unequal_exits(double beta_bar)
{
  ModelParams p = example_params(beta_bar);
  p.xi = 0.3;
  return p;
}

State near_dfe(const ModelParams& p)
{
  const State d = dfe(p);
  return {0.9 * d.S, d.V, 0.05 * d.S, 0.05 * d.S, 0.0};
}

Trajectory synthetic(const std::vector<double>& times, const std::function<State(double)>& at)
{
  Trajectory traj;
  traj.meta.params = example_params();
  for (double t : times) {
    traj.times.push_back(t);
    traj.states.push_back(at(t));
  }
  return traj;
}

std::vector<double> uniform_grid(double horizon, std::size_t n)
{
  std::vector<double> t(n + 1);
  for (std::size_t i = 0; i <= n; ++i) t[i] = horizon * static_cast<double>(i) / static_cast<double>(n);
  return t;
}

SimConfig ensemble_config(const ModelParams& p, double horizon, std::size_t paths, std::uint64_t seed)
{
  SimConfig cfg;
  cfg.params = p;
  cfg.init = near_dfe(p);
  cfg.horizon = horizon;
  cfg.dt = default_dt(p);
  cfg.n_paths = paths;
  cfg.master_seed = seed;
  return cfg;
}

TEST(ExtinctionFunctional, ExampleValues)
{
  const ModelParams p = example_params();
  EXPECT_NEAR(extinction_functional({0.0, 0.0, 1.0, 0.0, 0.0}, p), kVeUnitE, 1e-15);
  EXPECT_NEAR(extinction_functional({0.0, 0.0, 0.0, 1.0, 0.0}, p), 1.0 / 0.3, 1e-15);
  EXPECT_EQ(extinction_functional(dfe(p), p), 0.0);
}

TEST(ExtinctionFunctional, LinearAndPositive)
{
  const ModelParams p = unequal_exits(0.2);
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int i = 0; i < 100; ++i) {
    const State a{u(gen), u(gen), u(gen), u(gen), u(gen)};
    const State b{u(gen), u(gen), u(gen), u(gen), u(gen)};
    const double lhs = extinction_functional(a + 2.0 * b, p);
    const double rhs = extinction_functional(a, p) + 2.0 * extinction_functional(b, p);
    EXPECT_NEAR(lhs, rhs, 1e-13 * rhs);
    EXPECT_GT(extinction_functional(a, p), 0.0);
  }
}

TEST(ExtinctionRate, RecoversSyntheticExponential)
{
  const Trajectory traj = synthetic(uniform_grid(100.0, 1000), [](double t) {
    return State{1.0, 1.0, 0.0, 0.3 * std::exp(-0.2 * t), 0.0};
  });
  const ExtinctionReport r = extinction_rate_estimate(traj, traj.meta.params);
  EXPECT_NEAR(r.slope, -0.2, 1e-9);
  EXPECT_LT(r.slope_se, 1e-9);
  EXPECT_EQ(r.fit_start, 50.0);
  EXPECT_EQ(r.fit_end, 100.0);
  EXPECT_EQ(r.nodes, 501u);
  EXPECT_FALSE(r.truncated);
}

TEST(ExtinctionRate, StopsAtUnderflow)
{
  const Trajectory traj = synthetic(uniform_grid(100.0, 1000), [](double t) {
    return State{1.0, 1.0, 0.0, t < 80.0 ? std::exp(-0.5 * t) : 0.0, 0.0};
  });
  const ExtinctionReport r = extinction_rate_estimate(traj, traj.meta.params);
  EXPECT_TRUE(r.truncated);
  EXPECT_NEAR(r.slope, -0.5, 1e-9);
  EXPECT_LT(r.fit_end, 80.0);
}

TEST(ExtinctionRate, DiseaseFreeHasNoFitWindow)
{
  const ModelParams p = example_params();
  const Trajectory traj = integrate_deterministic(p, dfe(p), 50.0, 0.1);
  EXPECT_THROW(extinction_rate_estimate(traj, p), EmptyFitWindow);
  EXPECT_THROW(extinction_rate_estimate(traj, p, 0.0), InvalidConfig);
}

TEST(ExtinctionRate, DeterministicDecayIsDominantEigenvalue)
{
  const ModelParams p = unequal_exits(0.1);
  ASSERT_LT(r0_e(p), 1.0);
  const Trajectory traj = integrate_deterministic(p, near_dfe(p), 600.0, default_dt(p));
  const ExtinctionReport r = extinction_rate_estimate(traj, p);
  const double lambda = sveis::testing::dfe_dominant_eigenvalue(p, dfe(p).S);
  EXPECT_NEAR(r.slope / lambda, 1.0, 1e-3);
  EXPECT_LT(r.slope, r.bound);
  EXPECT_TRUE(r.pass);
}

TEST(TimeAverage, ConstantIsExactOnIrregularGrids)
{
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.001, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> times{0.0};
    for (int i = 0; i < 200; ++i) times.push_back(times.back() + u(gen));
    const Trajectory traj = synthetic(times, [](double) { return State{}; });
    const double burn_in = u(gen) * times.back();
    EXPECT_EQ(time_average(traj, [](const State&) { return 1.0; }, burn_in), 1.0);
  }
}

TEST(TimeAverage, LinearFunctionOverWindow)
{
  const Trajectory traj = synthetic(uniform_grid(10.0, 7), [](double t) { return State{t, 0, 0, 0, 0}; });
  EXPECT_NEAR(time_average(traj, [](const State& s) { return s.S; }, 3.3), (10.0 + 3.3) / 2.0, 1e-12);
  EXPECT_THROW(time_average(traj, [](const State& s) { return s.S; }, 10.0), EmptyFitWindow);
}

TEST(TimeAverage, RunningIntegralsAgreeWithTrapezoid)
{
  SimConfig cfg = ensemble_config(example_params(0.3, 1.0, 1.0), 40.0, 1, 9);
  const Trajectory fine = simulate_path(cfg, 0);
  for (Component c : {Component::S, Component::I, Component::Z, Component::N}) {
    const double direct = time_average(fine, [&](const State& s) { return select(s, c, cfg.params); }, 13.7);
    EXPECT_NEAR(time_average(fine, c, 13.7), direct, 1e-10) << to_string(c);
  }
}

TEST(TimeAverage, OuComponentAveragesToZero)
{
  SimConfig cfg = ensemble_config(example_params(0.3, 1.0, 1.0), 2000.0, 1, 21);
  cfg.record_stride = 50;
  const Trajectory traj = simulate_path(cfg, 0);
  // Standard error of the time average is delta / (theta sqrt(T)) ~ 0.022.
  EXPECT_LT(std::abs(time_average(traj, Component::Z, 0.0)), 0.1);
}

TEST(Components, NamesRoundTrip)
{
  for (Component c : {Component::S, Component::V, Component::E, Component::I, Component::Z, Component::N,
                      Component::Beta})
    EXPECT_EQ(parse_component(to_string(c)), c);
  EXPECT_FALSE(parse_component("R").has_value());
}

TEST(Histogram, MassesSumToOne)
{
  std::mt19937_64 gen(1);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> x(1000);
  for (double& v : x) v = n(gen);
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  const Histogram h = histogram(x, make_edges(*lo, *hi, 20));
  double total = 0.0;
  for (double m : h.masses) total += m;
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_EQ(h.bins(), 20u);
  EXPECT_EQ(h.n_samples, 1000u);
  EXPECT_LT(h.edges.front(), *lo);
  EXPECT_GT(h.edges.back(), *hi);
}

TEST(Histogram, DegenerateRangeUsesOneBin)
{
  const std::vector<double> x(50, 2.5);
  const Histogram h = histogram(x, make_edges(2.5, 2.5, 20, 1e-4));
  EXPECT_EQ(h.bins(), 20u);
  EXPECT_EQ(h.masses[10], 1.0);
  EXPECT_THROW(make_edges(0.0, 1.0, 1), InvalidConfig);
  EXPECT_THROW(histogram({}, make_edges(0.0, 1.0, 4)), EmptyFitWindow);
}

TEST(Histogram, TerminalOuStateMatchesStationaryLaw)
{
  const ModelParams p = example_params(0.3, 1.0, 0.8);
  SimConfig cfg = ensemble_config(p, 15.0, 5000, 31);
  cfg.record_stride = 1u << 30;
  const Ensemble ens = simulate_ensemble(cfg);
  const std::vector<double> z = pooled_samples(ens, Component::Z, cfg.horizon, cfg.horizon);
  ASSERT_EQ(z.size(), 5000u);
  const auto [lo, hi] = std::minmax_element(z.begin(), z.end());
  const Histogram h = histogram(z, make_edges(*lo, *hi, 20));

  const double sd = std::sqrt(ou_stationary_variance(p.ou()));
  std::vector<double> counts, probs;
  for (std::size_t j = 0; j < h.bins(); ++j) {
    counts.push_back(h.masses[j] * 5000.0);
    const double left = j == 0 ? -INFINITY : h.edges[j];
    const double right = j + 1 == h.bins() ? INFINITY : h.edges[j + 1];
    probs.push_back(normal_cdf(right, 0.0, sd) - normal_cdf(left, 0.0, sd));
  }
  EXPECT_GT(chi_square_pvalue(counts, probs, 5000), 0.01);
}

TEST(HistogramDistance, MetricProperties)
{
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto edges = make_edges(0.0, 1.0, 10);
  auto random_hist = [&] {
    std::vector<double> x(200);
    for (double& v : x) v = u(gen) * u(gen);
    return histogram(x, edges);
  };
  for (int trial = 0; trial < 50; ++trial) {
    const Histogram a = random_hist(), b = random_hist(), c = random_hist();
    EXPECT_EQ(histogram_distance(a, a), 0.0);
    EXPECT_NEAR(histogram_distance(a, b), histogram_distance(b, a), 1e-15);
    EXPECT_LE(histogram_distance(a, c), histogram_distance(a, b) + histogram_distance(b, c) + 1e-15);
    EXPECT_GE(histogram_distance(a, b), 0.0);
    EXPECT_LE(histogram_distance(a, b), 1.0);
  }
}

TEST(HistogramDistance, DisjointSupportsAreMaximal)
{
  const auto edges = make_edges(0.0, 1.0, 10);
  const Histogram a = histogram({0.05, 0.06}, edges);
  const Histogram b = histogram({0.95}, edges);
  EXPECT_DOUBLE_EQ(histogram_distance(a, b), 1.0);
}

TEST(HistogramDistance, RebinsOntoFirstEdges)
{
  const Histogram a = histogram({0.25, 0.75}, {0.0, 0.5, 1.0});
  const Histogram fine = histogram({0.1, 0.3, 0.6, 0.9}, {0.0, 0.25, 0.5, 0.75, 1.0});
  EXPECT_NEAR(histogram_distance(a, fine), 0.0, 1e-15);
  const Histogram shifted = histogram({1.5}, {1.0, 2.0, 3.0});
  EXPECT_THROW(histogram_distance(a, shifted), IncompatibleBinning);
  const Histogram half_out = histogram({0.5, 1.5}, {0.0, 1.0, 2.0});
  EXPECT_NEAR(histogram_distance(a, half_out), 0.5, 1e-15);
}

TEST(HistogramDistance, SameLawLargeSamplesAreClose)
{
  std::mt19937_64 gen(8);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> x(100000), y(100000);
  for (double& v : x) v = n(gen);
  for (double& v : y) v = n(gen);
  const auto edges = make_edges(-4.0, 4.0, 50);
  EXPECT_LT(histogram_distance(histogram(x, edges), histogram(y, edges)), 0.05);
}

TEST(PersistenceVerdict, SupercriticalNoisePersists)
{
  ModelParams p = example_params(0.1, 1.0, 1.0);
  p.beta_bar = 5.0 / r0_s(p) * p.beta_bar;
  ASSERT_NEAR(r0_s(p), 5.0, 1e-12);
  const SimConfig cfg = ensemble_config(p, 400.0, 60, 41);
  const PersistenceVerdict v = persistence_verdict(simulate_ensemble(cfg), p);
  EXPECT_TRUE(v.histograms_stable) << v.tv_distance;
  EXPECT_EQ(v.fraction_persistent, 1.0);
  EXPECT_TRUE(v.pass);
  EXPECT_TRUE(v.warnings.empty());
  EXPECT_EQ(v.paths, 60u);
}

TEST(PersistenceVerdict, SubcriticalDoesNotPersist)
{
  const ModelParams p = example_params(0.1, 1.0, 0.5);
  const SimConfig cfg = ensemble_config(p, 400.0, 20, 43);
  const PersistenceVerdict v = persistence_verdict(simulate_ensemble(cfg), p);
  EXPECT_FALSE(v.persistent);
  EXPECT_FALSE(v.pass);
  EXPECT_EQ(v.warnings.size(), 1u);
}

TEST(PersistenceVerdict, DeterministicEndemicStatePasses)
{
  const ModelParams p = example_params(0.5, 1.0, 0.0);
  const SimConfig cfg = ensemble_config(p, 600.0, 3, 47);
  const PersistenceVerdict v = persistence_verdict(simulate_ensemble(cfg), p);
  EXPECT_EQ(v.tv_distance, 0.0);
  EXPECT_TRUE(v.pass);
}

TEST(ExtinctionVerdict, SubcriticalPathsRespectBound)
{
  const ModelParams p = [] {
    ModelParams q = unequal_exits(0.1);
    q.delta = 0.3;
    return q;
  }();
  ASSERT_LT(r0_e(p), 1.0);
  const SimConfig cfg = ensemble_config(p, 400.0, 40, 53);
  const ExtinctionVerdict v = extinction_verdict(simulate_ensemble(cfg), p);
  EXPECT_TRUE(v.pass) << v.fraction_within_bound;
  EXPECT_EQ(v.reports.size(), 40u);
  ASSERT_TRUE(v.slopes.has_value());
  EXPECT_LT(v.mean_slope, 0.0);
  EXPECT_TRUE(v.warnings.empty());
}

TEST(ExtinctionVerdict, UnderflowedPathCountsAsExtinct)
{
  Ensemble ens;
  ens.config.params = example_params();
  ens.config.horizon = 10.0;
  ens.trajectories.push_back(synthetic(uniform_grid(10.0, 100), [](double) { return State{6.0, 3.0, 0.0, 0.0, 0.0}; }));
  const ExtinctionVerdict v = extinction_verdict(ens, ens.config.params);
  EXPECT_EQ(v.extinct_paths, 1u);
  EXPECT_TRUE(v.pass);
  EXPECT_FALSE(v.slopes.has_value());
}

}  // namespace
