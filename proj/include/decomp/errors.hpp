#pragma once

#include <stdexcept>
#include <string>

namespace decomp {

// Error taxonomy used to pick process exit codes in the CLI:
//   DataError -> 1, PlanError/AvailabilityError -> 2, NumericError -> 3.

struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Requested estimator cannot handle the declared roles (mediator kind,
// outcome kind, mediator count) or the requested model terms.
struct AvailabilityError : std::runtime_error {
  explicit AvailabilityError(const std::string& msg) : std::runtime_error(msg) {}
};

// Model plan is structurally invalid for the estimator (e.g. a plug-in
// imputation that would silently be wrong for the requested terms).
struct PlanError : std::runtime_error {
  explicit PlanError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

struct SingularDesignError : NumericError {
  explicit SingularDesignError(const std::string& msg) : NumericError(msg) {}
};

struct SeparationError : NumericError {
  explicit SeparationError(const std::string& msg) : NumericError(msg) {}
};

struct ConvergenceError : NumericError {
  explicit ConvergenceError(const std::string& msg) : NumericError(msg) {}
};

struct DegenerateRatioError : NumericError {
  explicit DegenerateRatioError(const std::string& msg) : NumericError(msg) {}
};

struct BootstrapError : NumericError {
  explicit BootstrapError(const std::string& msg) : NumericError(msg) {}
};

struct CalibrationError : NumericError {
  explicit CalibrationError(const std::string& msg) : NumericError(msg) {}
};

}  // namespace decomp
