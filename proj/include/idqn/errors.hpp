#pragma once

#include <stdexcept>
#include <string>

namespace idqn {

// Invalid configuration: bad shapes, out-of-range settings, malformed files.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// API called in the wrong state (stepping a dead car, backward without caches).
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace idqn
