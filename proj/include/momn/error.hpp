#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace momn {

enum class ErrorKind {
  Input,
  Dimension,
  DegenerateInput,
  Numeric,
  Parameter,
  Precondition,
  Configuration,
  NotPsd,
  Io,
};

const char* to_string(ErrorKind kind) noexcept;

// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  Error(ErrorKind kind, const std::string& what, int iteration)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what + " (iteration " +
                           std::to_string(iteration) + ")"),
        kind_(kind),
        iteration_(iteration) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// Solver iteration at which the failure was detected, if any.
  std::optional<int> iteration() const noexcept { return iteration_; }

 private:
  ErrorKind kind_;
  std::optional<int> iteration_;
};

}  // namespace momn
