#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace gcnpart {

using Index = std::size_t;
using Real = double;

/// Error raised by every module. `module()` names the component that failed
/// so the CLI can report where a pipeline stopped.
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& message)
      : std::runtime_error(module + ": " + message), module_(std::move(module)) {}

  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

namespace detail {

[[noreturn]] inline void fail(const char* module, const std::string& message) {
  throw Error(module, message);
}

inline void require(bool condition, const char* module, const std::string& message) {
  if (!condition) fail(module, message);
}

}  // namespace detail
}  // namespace gcnpart
