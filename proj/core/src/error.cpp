#include "geostate/error.hpp"

namespace geostate {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::UnknownFunction: return "UnknownFunction";
    case ErrorCode::UnboundIdentifier: return "UnboundIdentifier";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::SingularFrame: return "SingularFrame";
    case ErrorCode::SpanMismatch: return "SpanMismatch";
    case ErrorCode::DegenerateCovectors: return "DegenerateCovectors";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::ImmersionFailure: return "ImmersionFailure";
    case ErrorCode::InconsistentImplicitForm: return "InconsistentImplicitForm";
    case ErrorCode::MissingImplicitForm: return "MissingImplicitForm";
    case ErrorCode::NoIntersectionFound: return "NoIntersectionFound";
    case ErrorCode::UserChartRequired: return "UserChartRequired";
    case ErrorCode::NotOnBothCores: return "NotOnBothCores";
    case ErrorCode::ChartInversionFailure: return "ChartInversionFailure";
    case ErrorCode::NonAffineCore: return "NonAffineCore";
    case ErrorCode::MissingExpression: return "MissingExpression";
    case ErrorCode::UnboundedDomain: return "UnboundedDomain";
    case ErrorCode::NonCompactIntersection: return "NonCompactIntersection";
    case ErrorCode::QuadratureNotConverged: return "QuadratureNotConverged";
    case ErrorCode::DegreeMismatch: return "DegreeMismatch";
    case ErrorCode::TransversalityFailure: return "TransversalityFailure";
    case ErrorCode::NonConvergent: return "NonConvergent";
    case ErrorCode::SceneError: return "SceneError";
  }
  return "UnknownError";
}

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::SyntaxError:
    case ErrorCode::UnknownFunction:
    case ErrorCode::UnboundIdentifier:
    case ErrorCode::DomainError:
    case ErrorCode::SceneError:
      return 2;
    case ErrorCode::SingularFrame:
    case ErrorCode::SpanMismatch:
    case ErrorCode::DegenerateCovectors:
    case ErrorCode::RankDeficient:
    case ErrorCode::ImmersionFailure:
    case ErrorCode::InconsistentImplicitForm:
    case ErrorCode::MissingImplicitForm:
    case ErrorCode::NoIntersectionFound:
    case ErrorCode::UserChartRequired:
    case ErrorCode::NotOnBothCores:
    case ErrorCode::ChartInversionFailure:
    case ErrorCode::NonAffineCore:
    case ErrorCode::MissingExpression:
    case ErrorCode::UnboundedDomain:
    case ErrorCode::NonCompactIntersection:
      return 3;
    case ErrorCode::DegreeMismatch:
      return 4;
    case ErrorCode::QuadratureNotConverged:
      return 5;
    case ErrorCode::TransversalityFailure:
      return 6;
    case ErrorCode::NonConvergent:
      return 1;
  }
  return 1;
}

}  // namespace geostate
