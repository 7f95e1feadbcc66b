#pragma once
#include <stdexcept>
#include <string>

namespace ganlab {

// Error taxonomy shared across modules. Each condition that callers may want
// to branch on gets its own type; everything derives from std::runtime_error.
struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& m) : std::runtime_error(m) {}
};
struct RangeViolation : std::runtime_error {
  explicit RangeViolation(const std::string& m) : std::runtime_error(m) {}
};
struct InfeasibleSpec : std::runtime_error {
  explicit InfeasibleSpec(const std::string& m) : std::runtime_error(m) {}
};
struct ShapeMismatch : std::runtime_error {
  explicit ShapeMismatch(const std::string& m) : std::runtime_error(m) {}
};
struct DegenerateInput : std::runtime_error {
  explicit DegenerateInput(const std::string& m) : std::runtime_error(m) {}
};
struct TooLarge : std::runtime_error {
  explicit TooLarge(const std::string& m) : std::runtime_error(m) {}
};
struct EmptyClass : std::runtime_error {
  explicit EmptyClass(const std::string& m) : std::runtime_error(m) {}
};
struct NonFiniteLoss : std::runtime_error {
  explicit NonFiniteLoss(const std::string& m) : std::runtime_error(m) {}
};
struct AmplitudeTooLarge : std::runtime_error {
  explicit AmplitudeTooLarge(const std::string& m) : std::runtime_error(m) {}
};
struct QuadratureFailure : std::runtime_error {
  explicit QuadratureFailure(const std::string& m) : std::runtime_error(m) {}
};
struct BudgetExceeded : std::runtime_error {
  explicit BudgetExceeded(const std::string& m) : std::runtime_error(m) {}
};
struct DegenerateFit : std::runtime_error {
  explicit DegenerateFit(const std::string& m) : std::runtime_error(m) {}
};
struct NumericalFailure : std::runtime_error {
  explicit NumericalFailure(const std::string& m) : std::runtime_error(m) {}
};

// Configuration problems carry the JSON path of the offending field.
struct ConfigError : std::runtime_error {
  std::string field_path;
  ConfigError(std::string path, const std::string& m)
      : std::runtime_error(path + ": " + m), field_path(std::move(path)) {}
};

}  // namespace ganlab
