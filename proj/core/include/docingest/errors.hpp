#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace docingest {

/// Malformed external payload. Carries one message per offending field,
/// each prefixed with a JSON-path-like location (e.g. "regions[3].bbox").
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(std::vector<std::string> issues)
      : std::invalid_argument(join(issues)), issues_(std::move(issues)) {}

  const std::vector<std::string>& issues() const noexcept { return issues_; }

 private:
  static std::string join(const std::vector<std::string>& issues) {
    std::string msg = "validation failed";
    for (const auto& issue : issues) msg += "; " + issue;
    return msg;
  }

  std::vector<std::string> issues_;
};

class NotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Request is well-formed but conflicts with the current state.
class ConflictError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace docingest
