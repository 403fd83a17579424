#include "curator/crawler/crawler.hpp"

#include "curator/catalog/catalog.hpp"
#include "curator/common/errors.hpp"
#include "curator/common/image_io.hpp"
#include "support/temp_dir.hpp"

#include <gtest/gtest.h>
#include <httplib.h>

#include <thread>

using namespace curator;
using namespace curator::crawler;
using curator::testing::TempDir;
namespace fs = std::filesystem;

namespace {

Bytes png(int seed) { return encode_png(cv::Mat(16, 16, CV_8UC3, cv::Scalar(seed, 255 - seed, 7))); }

void seed_fixture(const fs::path& dir, int n) {
  fs::create_directories(dir);
  for (int i = 0; i < n; ++i) {
    write_file_atomic(dir / ("f" + std::to_string(i) + ".png"), png(i * 10));
  }
}

struct Workspace {
  TempDir dir;
  catalog::Catalog cat{dir / "catalog"};
  ProviderRegistry registry;
};

TEST(Crawl, FixtureCountsAreCapped) {
  Workspace s;
  seed_fixture(s.dir / "five", 5);
  seed_fixture(s.dir / "two", 2);
  s.registry.register_provider("fixture", std::make_shared<FixtureProvider>(s.dir / "five"));
  s.registry.register_provider("small", std::make_shared<FixtureProvider>(s.dir / "two"));

  const auto r = crawl(s.cat, s.registry, {"aeroplane", 3, "fixture"});
  EXPECT_EQ(r.fetched, 3u);
  EXPECT_EQ(r.records.size(), 3u);
  EXPECT_EQ(r.requested, 3u);
  EXPECT_TRUE(r.failures.empty());
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(fs::path(r.records[i].origin_uri).filename(), "f" + std::to_string(i) + ".png");
    EXPECT_EQ(r.records[i].source, catalog::ImageSource::crawl);
    EXPECT_EQ(r.records[i].keyword, "aeroplane");
  }

  const auto r2 = crawl(s.cat, s.registry, {"aeroplane", 100, "small"});
  EXPECT_EQ(r2.fetched, 2u);
  EXPECT_TRUE(r2.failures.empty());
}

TEST(Crawl, PreconditionsAreValidationErrors) {
  Workspace s;
  seed_fixture(s.dir / "fx", 1);
  s.registry.register_provider("fixture", std::make_shared<FixtureProvider>(s.dir / "fx"));
  EXPECT_THROW(crawl(s.cat, s.registry, {"dog", 0, "fixture"}), ValidationError);
  EXPECT_THROW(crawl(s.cat, s.registry, {"   ", 3, "fixture"}), ValidationError);
  EXPECT_THROW(crawl(s.cat, s.registry, {"dog", 3, "live-search"}), ConfigurationError);
}

TEST(Crawl, KeywordSubdirectoryIsPreferred) {
  Workspace s;
  seed_fixture(s.dir / "fx", 4);
  seed_fixture(s.dir / "fx" / "dog", 1);
  s.registry.register_provider("fixture", std::make_shared<FixtureProvider>(s.dir / "fx"));
  EXPECT_EQ(crawl(s.cat, s.registry, {"dog", 10, "fixture"}).fetched, 1u);
  EXPECT_EQ(crawl(s.cat, s.registry, {"cat", 10, "fixture"}).fetched, 4u);
}

TEST(Crawl, BadItemsAreListedNotThrown) {
  Workspace s;
  seed_fixture(s.dir / "fx", 2);
  write_file_atomic(s.dir / "fx" / "a_broken.png", std::string("not an image"));
  write_file_atomic(s.dir / "fx" / "f9.png", png(0));  // same bytes as f0
  write_file_atomic(s.dir / "fx" / "notes.txt", std::string("ignored"));
  s.registry.register_provider("fixture", std::make_shared<FixtureProvider>(s.dir / "fx"));
  const auto r = crawl(s.cat, s.registry, {"dog", 10, "fixture"});
  EXPECT_EQ(r.fetched, 2u);
  ASSERT_EQ(r.failures.size(), 2u);
  EXPECT_NE(r.failures[0].uri.find("a_broken.png"), std::string::npos);
  EXPECT_NE(r.failures[1].reason.find("duplicate"), std::string::npos);
  EXPECT_EQ(s.cat.images().size(), 2u);
}

TEST(Crawl, MissingFixtureDirectoryIsACrawlError) {
  Workspace s;
  s.registry.register_provider("fixture", std::make_shared<FixtureProvider>(s.dir / "nowhere"));
  EXPECT_THROW(crawl(s.cat, s.registry, {"dog", 1, "fixture"}), CrawlError);
  EXPECT_TRUE(s.cat.images().empty());
}

TEST(Crawl, FixtureIsDeterministic) {
  TempDir dir;
  seed_fixture(dir / "fx", 6);
  std::vector<std::string> first;
  for (int run = 0; run < 2; ++run) {
    catalog::Catalog cat(dir / ("cat" + std::to_string(run)));
    ProviderRegistry registry;
    registry.register_provider("fixture", std::make_shared<FixtureProvider>(dir / "fx"));
    std::vector<std::string> ids;
    for (const auto& r : crawl(cat, registry, {"dog", 6, "fixture"}, 3).records) ids.push_back(r.id);
    if (run == 0) first = ids;
    else EXPECT_EQ(ids, first);
  }
}

TEST(Registry, DuplicatesAndLookup) {
  ProviderRegistry registry;
  registry.register_provider("fixture", std::make_shared<FixtureProvider>("/tmp"));
  EXPECT_THROW(registry.register_provider("fixture", std::make_shared<FixtureProvider>("/tmp")),
               ConfigurationError);
  EXPECT_THROW(registry.get("other"), ConfigurationError);
  EXPECT_EQ(registry.names(), std::vector<std::string>{"fixture"});
  EXPECT_THROW(make_provider({{"type", "ftp"}}), ConfigurationError);
  EXPECT_THROW(make_provider({{"type", "fixture"}}), ConfigurationError);
  EXPECT_NE(make_provider({{"type", "http"}, {"endpoint", "http://localhost:1"}}), nullptr);
}

class SearchServer {
 public:
  SearchServer() {
    server_.Get("/search", [this](const httplib::Request& req, httplib::Response& res) {
      last_query_ = req.get_param_value("q");
      const int n = std::stoi(req.get_param_value("n"));
      nlohmann::json results = nlohmann::json::array();
      for (int i = 0; i < 4 && i < n; ++i) {
        results.push_back({{"url", base() + "/img/" + std::to_string(i) + ".png"}});
      }
      res.set_content(nlohmann::json{{"results", results}}.dump(), "application/json");
    });
    server_.Get(R"(/img/(\d+)\.png)", [](const httplib::Request& req, httplib::Response& res) {
      const int i = std::stoi(req.matches[1]);
      if (i == 2) {
        res.status = 404;
        return;
      }
      const Bytes b = png(i * 40);
      res.set_content(std::string(b.begin(), b.end()), "image/png");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~SearchServer() {
    server_.stop();
    thread_.join();
  }
  std::string base() const { return "http://127.0.0.1:" + std::to_string(port_); }
  std::string last_query_;

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

TEST(HttpProvider, SearchesAndDownloadsInProviderOrder) {
  SearchServer server;
  Workspace s;
  s.registry.register_provider("live-search", std::make_shared<HttpSearchProvider>(server.base()));
  const auto r = crawl(s.cat, s.registry, {"pottedplant & co", 10, "live-search"}, 4);
  EXPECT_EQ(server.last_query_, "pottedplant & co");
  ASSERT_EQ(r.records.size(), 3u);
  EXPECT_EQ(r.records[0].origin_uri, server.base() + "/img/0.png");
  EXPECT_EQ(r.records[1].origin_uri, server.base() + "/img/1.png");
  EXPECT_EQ(r.records[2].origin_uri, server.base() + "/img/3.png");
  ASSERT_EQ(r.failures.size(), 1u);
  EXPECT_NE(r.failures[0].reason.find("404"), std::string::npos);
}

TEST(HttpProvider, UnreachableIsACrawlErrorWithNoRecords) {
  Workspace s;
  s.registry.register_provider("live-search", std::make_shared<HttpSearchProvider>(
                                                  "http://127.0.0.1:1", std::chrono::milliseconds(500)));
  EXPECT_THROW(crawl(s.cat, s.registry, {"dog", 3, "live-search"}), CrawlError);
  EXPECT_TRUE(s.cat.images().empty());
}

}  // namespace
