#include "tapaudit/errors.hpp"

namespace tapaudit {

const char* to_string(CaptureFailure kind) {
  switch (kind) {
    case CaptureFailure::connection: return "connection";
    case CaptureFailure::session: return "session";
    case CaptureFailure::navigation: return "navigation";
    case CaptureFailure::load_timeout: return "load_timeout";
    case CaptureFailure::protocol: return "protocol";
  }
  return "unknown";
}

}  // namespace tapaudit
