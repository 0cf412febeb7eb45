#pragma once

#include <stdexcept>
#include <string>

namespace buckrom {

/// Error families. The numeric values are the ones surfaced through the C API
/// and used as CLI exit codes, so they must stay stable.
enum class ErrorCode : int {
  kInvalidArgument = 1,
  kConfig = 2,
  kInvalidGeometry = 3,
  kInadmissibleState = 4,
  kNonConvergence = 5,
  kSingularJacobian = 6,
  kIo = 7,
  kStaleArtifact = 8,
  kDegenerate = 9,
  kGridMismatch = 10,
  kEmptyBasis = 11,
  kInvalidPlan = 12,
  kInvalidFunctional = 13,
  kIncompressibleLimit = 14,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised when a hyperelastic state has det F <= 0 where the model needs J > 0.
/// `element` is -1 when the failure is not tied to a mesh element.
class InadmissibleStateError : public Error {
 public:
  InadmissibleStateError(const std::string& what, long element = -1)
      : Error(ErrorCode::kInadmissibleState, what), element_(element) {}

  long element() const noexcept { return element_; }

 private:
  long element_;
};

class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, double last_residual)
      : Error(ErrorCode::kNonConvergence, what), last_residual_(last_residual) {}

  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

}  // namespace buckrom
