#ifndef SVEIS_TESTS_ORACLES_HPP
#define SVEIS_TESTS_ORACLES_HPP

// Test-only reference computations. Nothing here calls into the library's
// numerical routines, so the checks built on it stay independent.

#include "sveis/model.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/multiprecision/cpp_dec_float.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

namespace sveis::testing
{

using Big = boost::multiprecision::cpp_dec_float_50;

/// Parameters shared by most worked examples: Pi = 1, every rate 0.1, k = 0.5.
inline ModelParams example_params(double beta_bar = 0.1, double theta = 1.0, double delta = 0.0)
{
  ModelParams p;
  p.Pi = 1.0;
  p.alpha = p.m = p.omega = p.gamma = p.xi = p.sigma = p.eta = 0.1;
  p.beta_bar = beta_bar;
  p.k = 0.5;
  p.theta = theta;
  p.delta = delta;
  return p;
}

/// Log-uniform draws for every rate; delta uniform on [0, 2].
inline ModelParams random_params(std::mt19937_64& gen)
{
  auto logu = [&](double lo, double hi) {
    std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
    return std::exp(u(gen));
  };
  ModelParams p;
  p.Pi = logu(0.1, 100.0);
  p.alpha = logu(0.01, 2.0);
  p.beta_bar = logu(1e-3, 2.0);
  p.m = logu(0.01, 1.0);
  p.omega = logu(0.01, 2.0);
  p.gamma = logu(0.01, 2.0);
  p.xi = logu(0.01, 2.0);
  p.sigma = logu(0.01, 2.0);
  p.eta = logu(0.01, 2.0);
  p.k = logu(0.01, 5.0);
  p.theta = logu(0.05, 5.0);
  p.delta = std::uniform_real_distribution<double>(0.0, 2.0)(gen);
  return p;
}

inline double normal_cdf(double x, double mean = 0.0, double sd = 1.0)
{
  return 0.5 * std::erfc(-(x - mean) / (sd * std::numbers::sqrt2));
}

/// Kolmogorov-Smirnov statistic of `samples` against a continuous CDF.
inline double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf)
{
  std::sort(samples.begin(), samples.end());
  const auto n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

/// Asymptotic p-value of the one-sample KS test (Stephens' small-sample correction).
inline double ks_pvalue(double d, std::size_t n)
{
  const double rn = std::sqrt(static_cast<double>(n));
  const double lambda = (rn + 0.12 + 0.11 / rn) * d;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 ? 2.0 : -2.0) * term;
    if (term < 1e-18) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

inline double ks_normal_pvalue(const std::vector<double>& samples, double mean, double sd)
{
  return ks_pvalue(ks_statistic(samples, [&](double x) { return normal_cdf(x, mean, sd); }), samples.size());
}

/// Pearson chi-square p-value of observed counts against expected probabilities;
/// bins with expected count below 5 are merged into their neighbour.
inline double chi_square_pvalue(const std::vector<double>& observed_counts, const std::vector<double>& probabilities,
                                std::size_t n)
{
  std::vector<double> obs, expct;
  double o_acc = 0.0, e_acc = 0.0;
  for (std::size_t i = 0; i < observed_counts.size(); ++i) {
    o_acc += observed_counts[i];
    e_acc += probabilities[i] * static_cast<double>(n);
    if (e_acc >= 5.0) {
      obs.push_back(o_acc);
      expct.push_back(e_acc);
      o_acc = e_acc = 0.0;
    }
  }
  if (!obs.empty()) {
    obs.back() += o_acc;
    expct.back() += e_acc;
  }
  double stat = 0.0;
  for (std::size_t i = 0; i < obs.size(); ++i) stat += (obs[i] - expct[i]) * (obs[i] - expct[i]) / expct[i];
  boost::math::chi_squared dist(static_cast<double>(obs.size() - 1));
  return boost::math::cdf(boost::math::complement(dist, stat));
}

/// Dominant eigenvalue of the (E, I) Jacobian at the DFE,
/// [[-(m+sigma+xi), beta_bar S0], [sigma, -(m+gamma+eta)]], from the characteristic polynomial.
inline double dfe_dominant_eigenvalue(const ModelParams& p, double s0)
{
  const double a11 = -(p.m + p.sigma + p.xi);
  const double a12 = p.beta_bar * s0;
  const double a21 = p.sigma;
  const double a22 = -(p.m + p.gamma + p.eta);
  const double tr = a11 + a22;
  const double det = a11 * a22 - a12 * a21;
  return 0.5 * (tr + std::sqrt(tr * tr - 4.0 * det));
}

/// Disease-free S0 from the 2x2 equilibrium system by Cramer's rule:
/// (alpha + m) S - omega V = Pi,  -alpha S + (m + omega) V = 0.
inline std::pair<Big, Big> dfe_by_linear_solve(const ModelParams& p)
{
  const Big a11 = Big(p.alpha) + Big(p.m), a12 = -Big(p.omega);
  const Big a21 = -Big(p.alpha), a22 = Big(p.m) + Big(p.omega);
  const Big det = a11 * a22 - a12 * a21;
  return {Big(p.Pi) * a22 / det, -a21 * Big(p.Pi) / det};
}

}  // namespace sveis::testing

#endif  // SVEIS_TESTS_ORACLES_HPP
