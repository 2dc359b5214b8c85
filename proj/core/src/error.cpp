#include "shrinkglht/error.hpp"

namespace shrinkglht {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::PoleProximity: return "PoleProximity";
    case ErrorKind::DegenerateDenominator: return "DegenerateDenominator";
    case ErrorKind::ContourViolation: return "ContourViolation";
    case ErrorKind::NonRealResult: return "NonRealResult";
    case ErrorKind::SingularSpectrum: return "SingularSpectrum";
    case ErrorKind::RootMultiplicity: return "RootMultiplicity";
    case ErrorKind::UnsupportedStandardization: return "UnsupportedStandardization";
    case ErrorKind::RankDeficientDesign: return "RankDeficientDesign";
    case ErrorKind::RankDeficientConstraints: return "RankDeficientConstraints";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::NonPositiveVariance: return "NonPositiveVariance";
    case ErrorKind::SingularT: return "SingularT";
    case ErrorKind::ZeroSpectrum: return "ZeroSpectrum";
    case ErrorKind::SingularD: return "SingularD";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

bool is_numerical(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::PoleProximity:
    case ErrorKind::DegenerateDenominator:
    case ErrorKind::ContourViolation:
    case ErrorKind::NonRealResult:
    case ErrorKind::SingularSpectrum:
    case ErrorKind::RootMultiplicity:
    case ErrorKind::UnsupportedStandardization:
    case ErrorKind::DomainError:
    case ErrorKind::NonPositiveVariance:
    case ErrorKind::SingularT:
    case ErrorKind::ZeroSpectrum:
    case ErrorKind::SingularD:
      return true;
    default:
      return false;
  }
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace shrinkglht
