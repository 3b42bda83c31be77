#include "pistol/error.hpp"

namespace pistol {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidParameter: return "invalid-parameter";
    case ErrorKind::NotFound: return "not-found";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::IncompleteInput: return "incomplete-input";
    case ErrorKind::Convergence: return "convergence";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

}  // namespace pistol
