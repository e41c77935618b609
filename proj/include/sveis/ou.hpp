#ifndef SVEIS_OU_HPP
#define SVEIS_OU_HPP

// Ornstein-Uhlenbeck process dz = -theta z dt + delta dB driving the
// log-deviation of the transmission rate from its long-run mean.

#include "sveis/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>

namespace sveis
{

struct OuParams
{
  double theta{1.0};  // reversion speed
  double delta{0.0};  // volatility
};

/// Seeded source of standard-normal draws.
///
/// The engine is std::mt19937_64 seeded through std::seed_seq with the four
/// 32-bit halves of (master_seed, stream_index); both algorithms are fixed by
/// the C++ standard. Uniforms take the top 53 bits of each output, and normals
/// come from the basic Box-Muller transform, consuming two uniforms per pair
/// and returning the cosine branch first, then the cached sine branch.
class RngStream
{
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_index)
  {
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                      static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(stream_index),
                      static_cast<std::uint32_t>(stream_index >> 32)};
    engine_.seed(seq);
  }

  /// Uniform on (0, 1].
  double uniform()
  {
    return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
  }

  double normal()
  {
    if (cached_) {
      double out = *cached_;
      cached_.reset();
      return out;
    }
    const double radius = std::sqrt(-2.0 * std::log(uniform()));
    const double angle = 2.0 * std::numbers::pi * uniform();
    cached_ = radius * std::sin(angle);
    return radius * std::cos(angle);
  }

 private:
  std::mt19937_64 engine_;
  std::optional<double> cached_;
};

/// Mean of z(t + dt) given z(t) = z.
inline double ou_transition_mean(double z, double dt, const OuParams& p)
{
  return z * std::exp(-p.theta * dt);
}

/// Variance of z(t + dt) given z(t); delta^2 (1 - e^{-2 theta dt}) / (2 theta).
inline double ou_transition_variance(double dt, const OuParams& p)
{
  return p.delta * p.delta * -std::expm1(-2.0 * p.theta * dt) / (2.0 * p.theta);
}

/// Exact transition kernel over a fixed step, with the decay factor and
/// standard deviation computed once.
class OuTransition
{
 public:
  OuTransition(double dt, const OuParams& p)
      : decay_(std::exp(-p.theta * dt)), sd_(std::sqrt(ou_transition_variance(dt, p)))
  {
  }

  /// One normal draw per call, even when delta = 0, so the draw sequence of a
  /// stream does not depend on delta.
  double advance(double z, RngStream& rng) const { return z * decay_ + sd_ * rng.normal(); }

  double decay() const { return decay_; }
  double sd() const { return sd_; }

 private:
  double decay_;
  double sd_;
};

/// Exact transition z(t) -> z(t + dt); no discretization error.
inline double ou_step_exact(double z, double dt, const OuParams& p, RngStream& rng)
{
  return OuTransition(dt, p).advance(z, rng);
}

inline double ou_stationary_variance(const OuParams& p)
{
  return p.delta * p.delta / (2.0 * p.theta);
}

/// One draw from N(0, delta^2 / (2 theta)).
inline double ou_stationary_sample(const OuParams& p, RngStream& rng)
{
  if (p.delta == 0.0) throw DegenerateStationary();
  return std::sqrt(ou_stationary_variance(p)) * rng.normal();
}

/// sqrt(theta) / (delta sqrt(pi)) * exp(-theta z^2 / delta^2)
inline double ou_stationary_density(double z, const OuParams& p)
{
  if (p.delta == 0.0) throw DegenerateStationary();
  return std::sqrt(p.theta) / (p.delta * std::sqrt(std::numbers::pi))
         * std::exp(-p.theta * z * z / (p.delta * p.delta));
}

/// Stationary moment E[e^{a z}] = e^{a^2 delta^2 / (4 theta)}.
inline double ou_exp_moment(double a, const OuParams& p)
{
  return std::exp(a * a * p.delta * p.delta / (4.0 * p.theta));
}

/// sqrt(E[(e^z - 1)^2]) under the stationary law, which bounds E|e^z - 1|.
inline double abs_expm1_bound(const OuParams& p)
{
  const double v = p.delta * p.delta / p.theta;
  // e^v - 2e^{v/4} + 1 = expm1(v) - 2 expm1(v/4); keeps precision for small v.
  const double radicand = std::expm1(v) - 2.0 * std::expm1(v / 4.0);
  return std::sqrt(std::max(radicand, 0.0));
}

}  // namespace sveis

#endif  // SVEIS_OU_HPP
