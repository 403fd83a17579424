#pragma once

#include <stdexcept>
#include <string>

namespace curator {

/// Error kinds surfaced across module boundaries. The service layer maps
/// each kind onto an HTTP status; the CLI maps any of them to a nonzero exit.
enum class ErrorKind {
  validation,     // bad caller input (422)
  not_found,      // unknown id or class (404)
  not_ready,      // resource exists but is not in a readable state (409)
  stale,          // anchor changed since scoring (409)
  configuration,  // missing provider, anchor, profile, checkpoint ...
  contract,       // violated precondition between modules
  ingestion,
  rejection,      // catalog refused a record
  crawl,
  detection,
  embedding,
  training,
  calibration,
  io,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define CURATOR_DEFINE_ERROR(Name, Kind)                         \
  class Name : public Error {                                    \
   public:                                                       \
    explicit Name(const std::string& message) : Error(Kind, message) {} \
  };

CURATOR_DEFINE_ERROR(ValidationError, ErrorKind::validation)
CURATOR_DEFINE_ERROR(NotFoundError, ErrorKind::not_found)
CURATOR_DEFINE_ERROR(NotReadyError, ErrorKind::not_ready)
CURATOR_DEFINE_ERROR(StaleError, ErrorKind::stale)
CURATOR_DEFINE_ERROR(ConfigurationError, ErrorKind::configuration)
CURATOR_DEFINE_ERROR(ContractError, ErrorKind::contract)
CURATOR_DEFINE_ERROR(IngestionError, ErrorKind::ingestion)
CURATOR_DEFINE_ERROR(RejectionError, ErrorKind::rejection)
CURATOR_DEFINE_ERROR(CrawlError, ErrorKind::crawl)
CURATOR_DEFINE_ERROR(DetectionError, ErrorKind::detection)
CURATOR_DEFINE_ERROR(EmbeddingError, ErrorKind::embedding)
CURATOR_DEFINE_ERROR(TrainingError, ErrorKind::training)
CURATOR_DEFINE_ERROR(CalibrationError, ErrorKind::calibration)
CURATOR_DEFINE_ERROR(IoError, ErrorKind::io)

#undef CURATOR_DEFINE_ERROR

}  // namespace curator
