#pragma once

#include "curator/common/errors.hpp"
#include "curator/service/service.hpp"

#include <memory>
#include <string>
#include <thread>

namespace curator::service {

/// HTTP status for an error kind: validation and calibration 422,
/// not_found 404, not_ready and stale 409, anything else 500.
int http_status(ErrorKind kind) noexcept;

/// Error body: {"error": {"kind": ..., "message": ...}}.
nlohmann::json error_body(ErrorKind kind, const std::string& message);

/**
 * JSON API over a Service.
 *
 *   POST /jobs                     {keyword, count, level?, provider?} -> 202 {job_id}
 *   GET  /jobs/{id}                job status and progress
 *   GET  /jobs/{id}/results        ?level=&limit=&offset=&space=
 *   GET  /classes
 *   PUT  /anchors/{class}          raw image body or multipart field "image"
 *   POST /calibrate/{class}        -> ThresholdProfile
 *   GET  /reports/compare          stored comparison; POST runs one (?level=)
 *   GET  /density/{class}          ?bins=&level=
 *   GET  /images/{crop_id}         image/png
 *   GET  /health
 *   /ui/                           static files from server.ui_dir, if set
 */
class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds `host:port` (port 0 picks a free one) and returns the bound port.
  /// Throws ConfigurationError when binding fails.
  int bind(const std::string& host, int port);

  /// Serves until stop(); call after bind().
  void serve();

  /// serve() on a background thread.
  void start();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace curator::service
