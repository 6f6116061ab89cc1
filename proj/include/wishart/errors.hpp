#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wishart {

enum class Errc {
  NotPsd,
  NonFinite,
  NegativeTime,
  EigenFailure,
  OutsideDomain,
  SingularSolve,
  InvalidDegree,
  InvalidAlpha,
  ResidualNegative,
  UnsupportedParams,
  IncompatibleDims,
  ExistenceViolated,
  NeedsDegreeAtLeastD,
  InsufficientSignal,
  ConfigError,
};

std::string_view to_string(Errc code) noexcept;

/// Exception carrying a machine-readable error code. Every failure raised by
/// the library goes through this type so callers (the CLI in particular) can
/// map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace wishart
