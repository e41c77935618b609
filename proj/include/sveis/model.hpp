#ifndef SVEIS_MODEL_HPP
#define SVEIS_MODEL_HPP

// SVEIS compartments with saturated incidence and a Black-Karasinski
// transmission rate beta = beta_bar * e^z.

#include "sveis/errors.hpp"
#include "sveis/ou.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <string_view>
#include <utility>

namespace sveis
{

struct ModelParams
{
  double Pi{1.0};        // recruitment
  double alpha{0.1};     // vaccination
  double beta_bar{0.1};  // long-run mean transmission
  double m{0.1};         // natural death
  double omega{0.1};     // immunity waning
  double gamma{0.1};     // recovery of infectious
  double xi{0.1};        // recovery of exposed
  double sigma{0.1};     // latency progression
  double eta{0.1};       // disease-induced death
  double k{0.5};         // incidence saturation
  double theta{1.0};     // OU reversion speed
  double delta{0.0};     // OU volatility

  bool operator==(const ModelParams&) const = default;

  OuParams ou() const { return {theta, delta}; }

  /// Total outflow rate from E and I respectively.
  double exposed_exit() const { return m + sigma + xi; }
  double infectious_exit() const { return m + gamma + eta; }
  /// Upper bound of the total population in Gamma.
  double carrying() const { return Pi / m; }
};

/// Field names in validation order; also the config keys.
inline constexpr std::array<std::pair<std::string_view, double ModelParams::*>, 12> kParamFields{{
    {"Pi", &ModelParams::Pi},
    {"alpha", &ModelParams::alpha},
    {"beta_bar", &ModelParams::beta_bar},
    {"m", &ModelParams::m},
    {"omega", &ModelParams::omega},
    {"gamma", &ModelParams::gamma},
    {"xi", &ModelParams::xi},
    {"sigma", &ModelParams::sigma},
    {"eta", &ModelParams::eta},
    {"k", &ModelParams::k},
    {"theta", &ModelParams::theta},
    {"delta", &ModelParams::delta},
}};

/// A point (S, V, E, I, z). Also used for drift vectors and running integrals.
struct State
{
  double S{0.0};
  double V{0.0};
  double E{0.0};
  double I{0.0};
  double z{0.0};

  bool operator==(const State&) const = default;

  double total() const { return S + V + E + I; }

  State& operator+=(const State& o)
  {
    S += o.S;
    V += o.V;
    E += o.E;
    I += o.I;
    z += o.z;
    return *this;
  }
  friend State operator+(State a, const State& b) { return a += b; }
  friend State operator*(double c, State a)
  {
    a.S *= c;
    a.V *= c;
    a.E *= c;
    a.I *= c;
    a.z *= c;
    return a;
  }
};

/// Returns `p` unchanged, or throws NonPositiveParameter naming the first bad field.
inline ModelParams validate_params(const ModelParams& p)
{
  for (const auto& [name, field] : kParamFields) {
    const double v = p.*field;
    const bool ok = name == "delta" ? (v >= 0.0 && std::isfinite(v)) : (v > 0.0 && std::isfinite(v));
    if (!ok) throw NonPositiveParameter(std::string(name));
  }
  return p;
}

/// Compartment drift at a fixed transmission coefficient; the z slot is 0.
inline State compartment_drift(const State& s, const ModelParams& p, double beta)
{
  const double incidence = beta * s.S * s.I / (1.0 + p.k * s.I);
  return {p.Pi - p.alpha * s.S - incidence - p.m * s.S + p.omega * s.V,
          p.alpha * s.S + p.gamma * s.I + p.xi * s.E - (p.m + p.omega) * s.V,
          incidence - p.exposed_exit() * s.E,
          p.sigma * s.E - p.infectious_exit() * s.I,
          0.0};
}

/// Full drift of the five-dimensional system, z-component -theta z.
inline State drift(const State& s, const ModelParams& p)
{
  State d = compartment_drift(s, p, p.beta_bar * std::exp(s.z));
  d.z = -p.theta * s.z;
  return d;
}

/// Disease-free equilibrium (S0, V0, 0, 0, 0).
inline State dfe(const ModelParams& p)
{
  const double s0 = p.Pi * (p.m + p.omega) / (p.m * (p.m + p.alpha + p.omega));
  return {s0, p.alpha * s0 / (p.m + p.omega), 0.0, 0.0, 0.0};
}

/// Basic reproduction number at transmission coefficient `beta`.
inline double r0(const ModelParams& p, double beta)
{
  return p.sigma * beta * p.Pi * (p.m + p.omega)
         / (p.m * (p.m + p.alpha + p.omega) * p.infectious_exit() * p.exposed_exit());
}

inline double r0(const ModelParams& p) { return r0(p, p.beta_bar); }

/// Stochastic persistence threshold: R0 at beta_bar times e^{delta^2 / (16 theta)}.
inline double r0_s(const ModelParams& p)
{
  return p.beta_bar * p.Pi * p.sigma * (p.m + p.omega) * std::exp(p.delta * p.delta / (16.0 * p.theta))
         / (p.m * (p.m + p.alpha + p.omega) * p.infectious_exit() * p.exposed_exit());
}

/// Stochastic extinction threshold.
inline double r0_e(const ModelParams& p)
{
  const double base = r0(p);
  if (!(base > 0.0)) throw DegenerateR0();
  const double root = std::sqrt(base);
  const double slowest = std::min(p.exposed_exit(), p.infectious_exit());
  return root
         + p.sigma * dfe(p).S * p.beta_bar * abs_expm1_bound(p.ou())
               / (root * p.exposed_exit() * slowest);
}

/// Next-generation style matrix [[0, beta_bar S0/(m+sigma+xi)], [sigma/(m+gamma+eta), 0]].
inline std::array<std::array<double, 2>, 2> extinction_matrix(const ModelParams& p)
{
  return {{{0.0, p.beta_bar * dfe(p).S / p.exposed_exit()}, {p.sigma / p.infectious_exit(), 0.0}}};
}

struct ExtinctionWeights
{
  double w1;
  double w2;
};

/// Left eigenvector of extinction_matrix for eigenvalue sqrt(R0), normalized with w2 = 1.
inline ExtinctionWeights extinction_weights(const ModelParams& p)
{
  const double base = r0(p);
  if (!(base > 0.0)) throw DegenerateR0();
  return {p.sigma / (p.infectious_exit() * std::sqrt(base)), 1.0};
}

enum class Regime
{
  PersistencePredicted,
  ExtinctionPredicted,
  Indeterminate,
};

inline std::string_view to_string(Regime r)
{
  switch (r) {
    case Regime::PersistencePredicted: return "PersistencePredicted";
    case Regime::ExtinctionPredicted: return "ExtinctionPredicted";
    case Regime::Indeterminate: return "Indeterminate";
  }
  return "Indeterminate";
}

struct ThresholdReport
{
  double r0{};
  double r0_s{};
  double r0_e{};
  double s0{};
  State dfe{};
  Regime regime{Regime::Indeterminate};

  bool operator==(const ThresholdReport&) const = default;
};

/// The two sufficient conditions cannot hold together (r0_e < 1 forces r0_s < 1),
/// so the order of the checks below does not matter for valid inputs.
inline Regime classify(double r0_s_value, double r0_e_value)
{
  if (r0_e_value < 1.0) return Regime::ExtinctionPredicted;
  if (r0_s_value > 1.0) return Regime::PersistencePredicted;
  return Regime::Indeterminate;
}

inline ThresholdReport thresholds(const ModelParams& raw)
{
  const ModelParams p = validate_params(raw);
  ThresholdReport out;
  out.r0 = r0(p);
  out.r0_s = r0_s(p);
  out.r0_e = r0_e(p);
  out.dfe = dfe(p);
  out.s0 = out.dfe.S;
  out.regime = classify(out.r0_s, out.r0_e);
  return out;
}

/// Membership in Gamma = {compartments >= 0, N <= Pi/m, S <= S0}, with relative slack.
inline bool in_gamma(const State& s, const ModelParams& p, double rel_tol = 0.0)
{
  const double cap = p.carrying();
  const double s0 = dfe(p).S;
  const double floor = -rel_tol * cap;
  return s.S >= floor && s.V >= floor && s.E >= floor && s.I >= floor
         && s.total() <= cap * (1.0 + rel_tol) && s.S <= s0 * (1.0 + rel_tol);
}

}  // namespace sveis

#endif  // SVEIS_MODEL_HPP
