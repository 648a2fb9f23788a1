#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dsbo {

enum class ErrorCode {
  invalid_topology,
  invalid_parameter,
  invalid_matrix,
  invalid_input,
  topology_generation_failed,
  inner_solve_failed,
  degenerate_instance,
  missing_reeval,
  config_error,
};

std::string_view to_string(ErrorCode code);

/// Every recoverable failure in the library surfaces as this exception.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Thrown when the proximal inner problem does not reach its tolerance.
class InnerSolveFailed : public Error {
 public:
  InnerSolveFailed(double residual, int iterations)
      : Error(ErrorCode::inner_solve_failed,
              "residual " + std::to_string(residual) + " after " + std::to_string(iterations) +
                  " iterations"),
        residual_(residual) {}

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_topology: return "invalid-topology";
    case ErrorCode::invalid_parameter: return "invalid-parameter";
    case ErrorCode::invalid_matrix: return "invalid-matrix";
    case ErrorCode::invalid_input: return "invalid-input";
    case ErrorCode::topology_generation_failed: return "topology-generation-failed";
    case ErrorCode::inner_solve_failed: return "inner-solve-failed";
    case ErrorCode::degenerate_instance: return "degenerate-instance";
    case ErrorCode::missing_reeval: return "missing-reeval";
    case ErrorCode::config_error: return "config-error";
  }
  return "unknown";
}

}  // namespace dsbo
