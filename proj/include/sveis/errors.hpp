#ifndef SVEIS_ERRORS_HPP
#define SVEIS_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace sveis
{

/// Base of every error raised by the library.
class Error : public std::runtime_error
{
 public:
  using std::runtime_error::runtime_error;
};

/// A rate constant that must be strictly positive (or, for delta, nonnegative) is not.
class NonPositiveParameter : public Error
{
 public:
  explicit NonPositiveParameter(std::string name)
      : Error("parameter '" + name + "' must be positive"), name_(std::move(name))
  {
  }

  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

/// R0 vanishes, so quantities that divide by sqrt(R0) are undefined.
class DegenerateR0 : public Error
{
 public:
  DegenerateR0() : Error("reproduction number is zero") {}
};

/// delta = 0: the OU stationary law is a point mass at 0 and has no density.
class DegenerateStationary : public Error
{
 public:
  DegenerateStationary() : Error("OU stationary law is degenerate (delta = 0)") {}
};

/// An RK4 step left a compartment below -1e-12 * Pi/m.
class StepProducedNegative : public Error
{
 public:
  StepProducedNegative(std::string component, double value)
      : Error("step produced negative " + component + " = " + std::to_string(value)),
        component_(std::move(component)),
        value_(value)
  {
  }

  const std::string& component() const noexcept { return component_; }
  double value() const noexcept { return value_; }

 private:
  std::string component_;
  double value_;
};

/// Fewer usable nodes than an estimator needs.
class EmptyFitWindow : public Error
{
 public:
  using Error::Error;
  EmptyFitWindow() : Error("fit window contains too few usable nodes") {}
};

/// Two histograms cannot be put on common bins.
class IncompatibleBinning : public Error
{
 public:
  IncompatibleBinning() : Error("histograms have disjoint supports") {}
};

/// Malformed configuration document; `path()` is a JSON-pointer-like field path.
class SchemaError : public Error
{
 public:
  SchemaError(std::string path, const std::string& what)
      : Error(path + ": " + what), path_(std::move(path))
  {
  }

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Invalid simulation settings (horizon, step, counts, initial state outside Gamma).
class InvalidConfig : public Error
{
 public:
  using Error::Error;
};

}  // namespace sveis

#endif  // SVEIS_ERRORS_HPP
