#pragma once

#include <stdexcept>
#include <string>

namespace curvlab {

enum class ErrorCode {
  kParse,
  kUnknownIdentifier,
  kArity,
  kDomain,
  kPeriodicity,
  kNotSpd,
  kKernelExceedsChart,
  kInvalidArgument,
  kUnsupported,
  kNoConvergence,
  kNonInvertible,
  kInfeasible,
  kCapExceeded,
  kSupportMismatch,
  kVerification,
  kSchema,
  kIo,
};

const char* to_string(ErrorCode code);

/// Base exception for every failure raised by the library. The code
/// identifies the failure class; the message carries the details.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class ParseError : public Error {
 public:
  ParseError(ErrorCode code, const std::string& message, std::size_t position)
      : Error(code, message + " at position " + std::to_string(position)),
        position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// Smoothed metric lost positive definiteness; eps_max is the largest
/// mollification radius found to keep it SPD (0 if none was found).
class SpdError : public Error {
 public:
  SpdError(const std::string& message, double eps_max)
      : Error(ErrorCode::kNotSpd, message), eps_max_(eps_max) {}

  double eps_max() const noexcept { return eps_max_; }

 private:
  double eps_max_;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& message, double best_residual)
      : Error(ErrorCode::kNoConvergence, message), best_residual_(best_residual) {}

  double best_residual() const noexcept { return best_residual_; }

 private:
  double best_residual_;
};

class NonInvertibleError : public Error {
 public:
  NonInvertibleError(const std::string& message, double first_failure_time)
      : Error(ErrorCode::kNonInvertible, message), time_(first_failure_time) {}

  double first_failure_time() const noexcept { return time_; }

 private:
  double time_;
};

}  // namespace curvlab
