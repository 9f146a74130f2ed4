#pragma once

#include <stdexcept>
#include <string>

namespace traitlens {

/// Base class for every named error the toolkit raises. `kind()` is the
/// stable error-class identifier surfaced by the CLI (`error[<kind>]: ...`).
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

struct TemplateError : Error {
  explicit TemplateError(const std::string& m) : Error("template", m) {}
};
struct InsufficientDataError : Error {
  explicit InsufficientDataError(const std::string& m) : Error("insufficient-data", m) {}
};
struct InputError : Error {
  explicit InputError(const std::string& m) : Error("input", m) {}
};
struct SpecError : Error {
  explicit SpecError(const std::string& m) : Error("spec", m) {}
};
struct HookContractError : Error {
  explicit HookContractError(const std::string& m) : Error("hook-contract", m) {}
};
struct ConfigError : Error {
  explicit ConfigError(const std::string& m) : Error("config", m) {}
};
struct DegenerateLabelsError : Error {
  explicit DegenerateLabelsError(const std::string& m) : Error("degenerate-labels", m) {}
};
struct DomainError : Error {
  explicit DomainError(const std::string& m) : Error("domain", m) {}
};
struct DegenerateProbeError : Error {
  explicit DegenerateProbeError(const std::string& m) : Error("degenerate-probe", m) {}
};
struct UnsupportedFamilyError : Error {
  explicit UnsupportedFamilyError(const std::string& m) : Error("unsupported-family", m) {}
};
struct PairingError : Error {
  explicit PairingError(const std::string& m) : Error("pairing", m) {}
};
struct FormatError : Error {
  explicit FormatError(const std::string& m) : Error("format", m) {}
};
struct CorruptionError : Error {
  explicit CorruptionError(const std::string& m) : Error("corruption", m) {}
};
struct JudgeError : Error {
  explicit JudgeError(const std::string& m) : Error("judge", m) {}
};
struct IoError : Error {
  explicit IoError(const std::string& m) : Error("io", m) {}
};

/// Raised when an optimizer fails to reach its tolerance within the
/// iteration cap; carries the gradient norm it stopped at.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& m, double residual)
      : Error("convergence", m), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

}  // namespace traitlens
