#include "wishart/errors.hpp"

namespace wishart {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::NotPsd: return "NotPSD";
    case Errc::NonFinite: return "NonFinite";
    case Errc::NegativeTime: return "NegativeTime";
    case Errc::EigenFailure: return "EigenFailure";
    case Errc::OutsideDomain: return "OutsideDomain";
    case Errc::SingularSolve: return "SingularSolve";
    case Errc::InvalidDegree: return "InvalidDegree";
    case Errc::InvalidAlpha: return "InvalidAlpha";
    case Errc::ResidualNegative: return "ResidualNegative";
    case Errc::UnsupportedParams: return "UnsupportedParams";
    case Errc::IncompatibleDims: return "IncompatibleDims";
    case Errc::ExistenceViolated: return "ExistenceViolated";
    case Errc::NeedsDegreeAtLeastD: return "NeedsDegreeAtLeastD";
    case Errc::InsufficientSignal: return "InsufficientSignal";
    case Errc::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace wishart
