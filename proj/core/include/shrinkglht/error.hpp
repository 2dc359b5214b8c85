#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace shrinkglht {

enum class ErrorKind {
  InvalidArgument,
  PoleProximity,
  DegenerateDenominator,
  ContourViolation,
  NonRealResult,
  SingularSpectrum,
  RootMultiplicity,
  UnsupportedStandardization,
  RankDeficientDesign,
  RankDeficientConstraints,
  DomainError,
  NonPositiveVariance,
  SingularT,
  ZeroSpectrum,
  SingularD,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorKind kind);

/// True for failures that come from the numerics rather than from malformed
/// input; the CLI maps these to exit code 3.
bool is_numerical(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

}  // namespace shrinkglht
