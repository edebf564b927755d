#include "hmor/error.hpp"

namespace hmor {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kInvalidInput: return "invalid-input";
    case ErrorKind::kInvalidDepth: return "invalid-depth";
    case ErrorKind::kBehindCamera: return "behind-camera";
    case ErrorKind::kGeneration: return "generation";
    case ErrorKind::kNumerical: return "numerical";
    case ErrorKind::kSolver: return "solver";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

}  // namespace hmor
