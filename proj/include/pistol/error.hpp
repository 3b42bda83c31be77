#pragma once

#include <stdexcept>
#include <string>

namespace pistol {

enum class ErrorKind {
  InvalidParameter,
  NotFound,
  Parse,
  IncompleteInput,
  Convergence,
  Divergence,
  Io,
};

/// Single exception type for the library; `kind()` drives CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

const char* to_string(ErrorKind kind) noexcept;

}  // namespace pistol
