#include "curator/crawler/crawler.hpp"

#include "curator/catalog/catalog.hpp"
#include "curator/common/errors.hpp"
#include "curator/common/parallel.hpp"

#include <httplib.h>

#include <algorithm>
#include <optional>
#include <set>
#include <thread>

namespace curator::crawler {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string path;    // path and query
};

Url split_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw CrawlError("not an absolute URL: " + url);
  const auto path = url.find('/', scheme + 3);
  if (path == std::string::npos) return {url, "/"};
  return {url.substr(0, path), url.substr(path)};
}

httplib::Result http_get(const std::string& url, std::chrono::milliseconds timeout,
                         const httplib::Params& params = {}) {
  const Url u = split_url(url);
  httplib::Client client(u.origin);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_follow_location(true);
  return params.empty() ? client.Get(u.path) : client.Get(u.path, params, httplib::Headers{});
}

}  // namespace

// Fixture --------------------------------------------------------------------

FixtureProvider::FixtureProvider(fs::path dir) : dir_(std::move(dir)) {}

std::vector<std::string> FixtureProvider::search(const std::string& keyword, std::size_t count) {
  fs::path root = dir_;
  if (!keyword.empty() && fs::is_directory(dir_ / keyword)) root = dir_ / keyword;
  if (!fs::is_directory(root)) {
    throw CrawlError("fixture directory does not exist: " + root.string());
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_regular_file() && has_image_extension(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(), [](const auto& a, const auto& b) { return a.filename() < b.filename(); });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < files.size() && i < count; ++i) {
    out.push_back(fs::absolute(files[i]).lexically_normal().string());
  }
  return out;
}

Bytes FixtureProvider::fetch(const std::string& uri) {
  try {
    return read_file(uri);
  } catch (const IoError& e) {
    throw CrawlError(e.what());
  }
}

// HTTP search ------------------------------------------------------------------

HttpSearchProvider::HttpSearchProvider(std::string endpoint, std::chrono::milliseconds timeout,
                                       std::chrono::milliseconds delay)
    : endpoint_(std::move(endpoint)), timeout_(timeout), delay_(delay) {
  while (!endpoint_.empty() && endpoint_.back() == '/') endpoint_.pop_back();
}

std::vector<std::string> HttpSearchProvider::search(const std::string& keyword, std::size_t count) {
  const auto res =
      http_get(endpoint_ + "/search", timeout_, {{"q", keyword}, {"n", std::to_string(count)}});
  if (!res) {
    throw CrawlError("search provider unreachable at " + endpoint_ + ": " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw CrawlError("search provider returned HTTP " + std::to_string(res->status));
  }
  std::vector<std::string> out;
  try {
    const auto body = nlohmann::json::parse(res->body);
    for (const auto& item : body.at("results")) {
      if (out.size() >= count) break;
      out.push_back(item.at("url").get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw CrawlError(std::string("malformed search response: ") + e.what());
  }
  return out;
}

Bytes HttpSearchProvider::fetch(const std::string& uri) {
  if (delay_.count() > 0) std::this_thread::sleep_for(delay_);
  const auto res = http_get(uri, timeout_);
  if (!res) throw CrawlError("download failed: " + httplib::to_string(res.error()));
  if (res->status != 200) throw CrawlError("download failed: HTTP " + std::to_string(res->status));
  return Bytes(res->body.begin(), res->body.end());
}

std::shared_ptr<Provider> make_provider(const nlohmann::json& config) {
  const std::string type = config.value("type", std::string());
  if (type == "fixture") {
    if (!config.contains("dir")) throw ConfigurationError("fixture provider needs 'dir'");
    return std::make_shared<FixtureProvider>(config.at("dir").get<std::string>());
  }
  if (type == "http") {
    if (!config.contains("endpoint")) throw ConfigurationError("http provider needs 'endpoint'");
    return std::make_shared<HttpSearchProvider>(config.at("endpoint").get<std::string>(),
                                                std::chrono::milliseconds(config.value("timeout_ms", 10000)),
                                                std::chrono::milliseconds(config.value("delay_ms", 0)));
  }
  throw ConfigurationError("unknown provider type '" + type + "'");
}

// Registry -------------------------------------------------------------------

void ProviderRegistry::register_provider(const std::string& name, std::shared_ptr<Provider> provider) {
  if (!provider) throw ConfigurationError("provider '" + name + "' is null");
  std::lock_guard lock(mutex_);
  if (!providers_.emplace(name, std::move(provider)).second) {
    throw ConfigurationError("provider '" + name + "' is already registered");
  }
}

std::shared_ptr<Provider> ProviderRegistry::get(const std::string& name) const {
  std::lock_guard lock(mutex_);
  const auto it = providers_.find(name);
  if (it == providers_.end()) throw ConfigurationError("no provider named '" + name + "'");
  return it->second;
}

std::vector<std::string> ProviderRegistry::names() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [name, p] : providers_) out.push_back(name);
  return out;
}

// Crawl ----------------------------------------------------------------------

CrawlResult crawl(catalog::Catalog& catalog, const ProviderRegistry& registry, const CrawlRequest& request,
                  std::size_t fan_out) {
  const std::string keyword = trim(request.keyword);
  if (keyword.empty()) throw ValidationError("keyword must not be blank");
  if (request.count < 1) throw ValidationError("count must be at least 1");
  const auto provider = registry.get(request.provider);

  CrawlResult result;
  result.requested = request.count;
  const auto uris = provider->search(keyword, request.count);

  std::vector<std::optional<Bytes>> bytes(uris.size());
  std::vector<std::string> errors(uris.size());
  parallel_for(uris.size(), fan_out, [&](std::size_t i) {
    try {
      bytes[i] = provider->fetch(uris[i]);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });

  std::set<std::string> seen;
  for (std::size_t i = 0; i < uris.size(); ++i) {
    if (!bytes[i]) {
      result.failures.push_back({uris[i], errors[i]});
      continue;
    }
    try {
      auto record = catalog.register_image(*bytes[i], catalog::ImageSource::crawl, uris[i], keyword);
      if (!seen.insert(record.id).second) {
        result.failures.push_back({uris[i], "duplicate content of image " + record.id});
        continue;
      }
      result.records.push_back(std::move(record));
    } catch (const Error& e) {
      result.failures.push_back({uris[i], e.what()});
    }
  }
  result.fetched = result.records.size();
  return result;
}

nlohmann::json to_json(const CrawlResult& r) {
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& f : r.failures) failures.push_back({{"uri", f.uri}, {"reason", f.reason}});
  std::vector<std::string> ids;
  for (const auto& rec : r.records) ids.push_back(rec.id);
  return {{"requested", r.requested}, {"fetched", r.fetched}, {"image_ids", ids}, {"failures", failures}};
}

}  // namespace curator::crawler
