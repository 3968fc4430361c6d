#ifndef SQVI_TYPES_H_
#define SQVI_TYPES_H_

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sqvi {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class ErrorCode {
  kDimensionMismatch,
  kMissingMeanField,
  kEmptySample,
  kUnsupportedSet,
  kUnsupportedBaseSet,
  kInfeasibleSubproblem,
  kNonfiniteValue,
  kInvalidConstants,
  kNoAdmissibleStep,
  kInvalidParameters,
  kInvalidSchedule,
  kNotReached,
  kNoReferenceSolution,
  kWrongProblemKind,
  kInsufficientData,
  kConstructionFailed,
  kParseError,
  kShapeError,
  kEmptyFile,
  kConfigError,
  kUnknownKey,
  kIoError,
};

const char* ErrorCodeName(ErrorCode code);

// Every library failure is reported through this exception; `code()` names
// the failure class so callers (and tests) can dispatch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline void RequireDim(const Vec& v, Eigen::Index n, const char* what) {
  if (v.size() != n) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(what) + " has dimension " +
                    std::to_string(v.size()) + ", expected " +
                    std::to_string(n));
  }
}

}  // namespace sqvi

#endif  // SQVI_TYPES_H_
