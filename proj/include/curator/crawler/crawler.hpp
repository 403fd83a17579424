#pragma once

#include "curator/catalog/types.hpp"
#include "curator/common/image_io.hpp"

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "json.hpp"

namespace curator::catalog {
class Catalog;
}

namespace curator::crawler {

/// Image search source. search() lists candidate URIs in provider order and
/// throws CrawlError when the provider is unreachable; fetch() returns the
/// bytes of one candidate and throws CrawlError on failure.
class Provider {
 public:
  virtual ~Provider() = default;
  virtual std::vector<std::string> search(const std::string& keyword, std::size_t count) = 0;
  virtual Bytes fetch(const std::string& uri) = 0;
};

/// Serves image files from a local directory, sorted by filename. A
/// `<dir>/<keyword>/` subdirectory is preferred when present.
class FixtureProvider final : public Provider {
 public:
  explicit FixtureProvider(std::filesystem::path dir);
  std::vector<std::string> search(const std::string& keyword, std::size_t count) override;
  Bytes fetch(const std::string& uri) override;

 private:
  std::filesystem::path dir_;
};

/// Queries `<endpoint>/search?q=<keyword>&n=<count>` expecting
/// {"results": [{"url": ...}, ...]} and downloads each url over HTTP(S).
class HttpSearchProvider final : public Provider {
 public:
  HttpSearchProvider(std::string endpoint, std::chrono::milliseconds timeout = std::chrono::seconds(10),
                     std::chrono::milliseconds delay = std::chrono::milliseconds(0));
  std::vector<std::string> search(const std::string& keyword, std::size_t count) override;
  Bytes fetch(const std::string& uri) override;

 private:
  std::string endpoint_;
  std::chrono::milliseconds timeout_;
  std::chrono::milliseconds delay_;
};

/// {"type": "fixture", "dir": ...} or {"type": "http", "endpoint": ...,
/// "timeout_ms": ..., "delay_ms": ...}.
std::shared_ptr<Provider> make_provider(const nlohmann::json& config);

class ProviderRegistry {
 public:
  /// Throws ConfigurationError for a duplicate name.
  void register_provider(const std::string& name, std::shared_ptr<Provider> provider);
  /// Throws ConfigurationError for an unknown name.
  std::shared_ptr<Provider> get(const std::string& name) const;
  std::vector<std::string> names() const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Provider>> providers_;
};

struct CrawlRequest {
  std::string keyword;
  std::size_t count = 0;
  std::string provider = "fixture";
};

struct CrawlFailure {
  std::string uri;
  std::string reason;
};

struct CrawlResult {
  std::vector<catalog::ImageRecord> records;  // provider order, unique ids
  std::size_t requested = 0;
  std::size_t fetched = 0;
  std::vector<CrawlFailure> failures;
};

/// Downloads up to `count` candidates with at most `fan_out` concurrent
/// fetches and registers them in provider order. Per-item problems are
/// listed in failures. Throws ValidationError for a blank keyword or
/// count 0, ConfigurationError for an unknown provider and CrawlError when
/// the provider cannot be searched.
CrawlResult crawl(catalog::Catalog& catalog, const ProviderRegistry& registry, const CrawlRequest& request,
                  std::size_t fan_out = 4);

nlohmann::json to_json(const CrawlResult& result);

}  // namespace curator::crawler
