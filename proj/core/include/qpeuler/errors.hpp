#pragma once

#include <stdexcept>
#include <string>

namespace qpeuler {

/// Invalid configuration or argument (CLI exit code 2).
class ConfigError : public std::invalid_argument {
public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// A mode with |Lambda_m| below the resonance guard carries a nonzero
/// coefficient; small denominators would corrupt the result.
class ResonanceError : public std::runtime_error {
public:
  explicit ResonanceError(const std::string& what) : std::runtime_error(what) {}
};

/// Integration left the represented regime: nonfinite coefficients or
/// Jacobian-margin loss (CLI exit code 3).
class SolverAbort : public std::runtime_error {
public:
  explicit SolverAbort(const std::string& what) : std::runtime_error(what) {}
};

/// A configured tolerance was breached during a run (CLI exit code 4).
class ToleranceBreach : public std::runtime_error {
public:
  explicit ToleranceBreach(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace qpeuler
