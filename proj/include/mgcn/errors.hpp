#pragma once

#include <stdexcept>
#include <string>

namespace mgcn {

// Bad user input: malformed dataset files, out-of-range options, missing paths.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// A run that started fine but cannot continue (e.g. the loss went non-finite).
class TrainingAbort : public std::runtime_error {
 public:
  explicit TrainingAbort(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace mgcn
