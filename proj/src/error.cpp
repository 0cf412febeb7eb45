#include "buckrom/error.hpp"

namespace buckrom {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kInvalidGeometry: return "invalid_geometry";
    case ErrorCode::kInadmissibleState: return "inadmissible_state";
    case ErrorCode::kNonConvergence: return "non_convergence";
    case ErrorCode::kSingularJacobian: return "singular_jacobian";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kStaleArtifact: return "stale_artifact";
    case ErrorCode::kDegenerate: return "degenerate";
    case ErrorCode::kGridMismatch: return "grid_mismatch";
    case ErrorCode::kEmptyBasis: return "empty_basis";
    case ErrorCode::kInvalidPlan: return "invalid_plan";
    case ErrorCode::kInvalidFunctional: return "invalid_functional";
    case ErrorCode::kIncompressibleLimit: return "incompressible_limit";
  }
  return "unknown";
}

}  // namespace buckrom
