#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dhd {

enum class ErrorKind {
  domain,
  physicality,
  unsupported,
  degenerate_unbalance,
  out_of_model,
  no_solution,
  truncation,
  shape,
  ambiguous_mode,
  empty_input,
  degenerate_cloud,
  below_vacuum,
  config,
  io,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::domain: return "domain_error";
    case ErrorKind::physicality: return "physicality_error";
    case ErrorKind::unsupported: return "unsupported_error";
    case ErrorKind::degenerate_unbalance: return "degenerate_unbalance_error";
    case ErrorKind::out_of_model: return "out_of_model_error";
    case ErrorKind::no_solution: return "no_solution_error";
    case ErrorKind::truncation: return "truncation_error";
    case ErrorKind::shape: return "shape_error";
    case ErrorKind::ambiguous_mode: return "ambiguous_mode_error";
    case ErrorKind::empty_input: return "empty_input_error";
    case ErrorKind::degenerate_cloud: return "degenerate_cloud_error";
    case ErrorKind::below_vacuum: return "below_vacuum_error";
    case ErrorKind::config: return "config_error";
    case ErrorKind::io: return "io_error";
  }
  return "error";
}

/// Every failure in the library is reported through this type; `kind()` is
/// the machine-readable class printed by the CLI.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace dhd
