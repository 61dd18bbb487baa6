#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace geostate {

enum class ErrorCode {
  // expression language
  SyntaxError,
  UnknownFunction,
  UnboundIdentifier,
  DomainError,
  // linear algebra
  SingularFrame,
  SpanMismatch,
  DegenerateCovectors,
  RankDeficient,
  // geometry
  ImmersionFailure,
  InconsistentImplicitForm,
  MissingImplicitForm,
  NoIntersectionFound,
  UserChartRequired,
  NotOnBothCores,
  ChartInversionFailure,
  NonAffineCore,
  MissingExpression,
  // integration
  UnboundedDomain,
  NonCompactIntersection,
  QuadratureNotConverged,
  // degrees and transversality
  DegreeMismatch,
  TransversalityFailure,
  // oracle
  NonConvergent,
  // scene files
  SceneError,
};

std::string_view to_string(ErrorCode code);

/// Error class used for CLI exit codes: parse=2, geometry=3, degree=4,
/// quadrature=5, transversality=6, anything else=1.
int exit_code(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Parse failure with the byte offset of the offending token.
class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t offset, const std::string& message)
      : Error(ErrorCode::SyntaxError, "offset " + std::to_string(offset) + ": " + message),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace geostate
