#pragma once

#include <stdexcept>
#include <string>

namespace birkhoff {

enum class ErrorCode {
  invalid_argument,
  escaped,
  not_in_image,
  budget_exceeded,
  not_mixing,
  degenerate,
  not_hyperbolic,
  rootfind_failed,
  insufficient_cylinders,
  infeasible,
  too_small,
  inconclusive,
  vacuous,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid argument";
    case ErrorCode::escaped: return "escaped";
    case ErrorCode::not_in_image: return "not in image";
    case ErrorCode::budget_exceeded: return "budget exceeded";
    case ErrorCode::not_mixing: return "not mixing";
    case ErrorCode::degenerate: return "degenerate";
    case ErrorCode::not_hyperbolic: return "not hyperbolic";
    case ErrorCode::rootfind_failed: return "root finding failed";
    case ErrorCode::insufficient_cylinders: return "insufficient cylinders";
    case ErrorCode::infeasible: return "infeasible";
    case ErrorCode::too_small: return "too small";
    case ErrorCode::inconclusive: return "inconclusive";
    case ErrorCode::vacuous: return "vacuous";
  }
  return "unknown";
}

/// Library error carrying a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// True for errors caused by bad input rather than numerical failure.
  bool is_validation() const noexcept { return code_ == ErrorCode::invalid_argument; }

 private:
  ErrorCode code_;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw Error(ErrorCode::invalid_argument, what);
}

}  // namespace birkhoff
