#include "curator/common/errors.hpp"

namespace curator {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::validation: return "validation";
    case ErrorKind::not_found: return "not_found";
    case ErrorKind::not_ready: return "not_ready";
    case ErrorKind::stale: return "stale";
    case ErrorKind::configuration: return "configuration";
    case ErrorKind::contract: return "contract";
    case ErrorKind::ingestion: return "ingestion";
    case ErrorKind::rejection: return "rejection";
    case ErrorKind::crawl: return "crawl";
    case ErrorKind::detection: return "detection";
    case ErrorKind::embedding: return "embedding";
    case ErrorKind::training: return "training";
    case ErrorKind::calibration: return "calibration";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

}  // namespace curator
