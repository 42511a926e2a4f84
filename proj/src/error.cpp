#include "lessonrag/error.hpp"

namespace lessonrag {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::io: return "io";
    case ErrorKind::format: return "format";
    case ErrorKind::validation: return "validation";
    case ErrorKind::not_found: return "not_found";
    case ErrorKind::provider: return "provider";
    case ErrorKind::integrity: return "integrity";
    case ErrorKind::internal: return "internal";
  }
  return "internal";
}

}  // namespace lessonrag
