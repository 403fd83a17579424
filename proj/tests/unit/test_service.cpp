#include "curator/service/http.hpp"
#include "curator/service/service.hpp"

#include "curator/common/errors.hpp"
#include "curator/common/image_io.hpp"
#include "curator/synth/shapes.hpp"
#include "support/temp_dir.hpp"

#include <gtest/gtest.h>

#include <condition_variable>
#include <mutex>
#include <thread>

#include "httplib.h"

using namespace curator;
using namespace curator::service;
using curator::testing::TempDir;
namespace fs = std::filesystem;

namespace {

// A crawl corpus, a labeled corpus with anchors, and a service over them.
// The model is an untrained tiny-test network: these tests cover plumbing,
// not accuracy.
struct Workspace {
  TempDir dir{"curator-service"};
  workflow::ServiceConfig config;
  std::unique_ptr<Service> service;

  Workspace() {
    const auto classes = synth::default_two_classes();
    synth::CorpusSpec crawl;
    crawl.classes = classes;
    crawl.images = 12;
    crawl.second_object_fraction = 0.3;
    crawl.name_prefix = "web";
    synth::write_annotated(dir / "crawl", synth::generate(crawl));

    synth::CorpusSpec labeled = crawl;
    labeled.images = 24;
    labeled.seed = 7;
    labeled.name_prefix = "lab";
    synth::write_annotated(dir / "labeled", synth::generate(labeled));
    synth::write_anchors(dir / "anchors", classes);

    config = workflow::parse_config(
        {{"catalog", "catalog"},
         {"providers", {{"fixture", {{"type", "fixture"}, {"dir", "crawl"}}}}},
         {"detector", {{"backend", "oracle"}}},
         {"embedder", {{"backbone", "tiny-test"}}},
         {"data", {{"dir", "labeled"}, {"anchors", "anchors"}, {"train_fraction", 0.0}, {"val_fraction", 0.5}}}},
        dir.path());
    start();
  }

  void start() {
    service = std::make_unique<Service>(config, detector::make_backend(config.detector),
                                        siamese::Embedder(config.embedder));
  }

  void install_anchors() {
    workflow::install_missing_anchors(service->catalog(), siamese::load_anchor_dir(dir / "anchors"));
  }

  Job run(const std::string& keyword, std::size_t count = 12, std::optional<int> level = std::nullopt) {
    return service->wait(service->submit({keyword, count, level, std::nullopt}));
  }
};

Bytes anchor_png(int variant) {
  auto cls = synth::default_two_classes()[0];
  cls.color = cv::Scalar(40 + variant, 40, 200);
  return encode_png(synth::render_anchor(cls));
}

TEST(Service, JobFailsAtScoringWithoutAnchor) {
  Workspace w;
  const Job job = w.run("aeroplane");
  EXPECT_EQ(job.state, JobState::failed);
  EXPECT_NE(job.error.find("scoring"), std::string::npos);
  EXPECT_NE(job.error.find("anchor"), std::string::npos);
  EXPECT_GT(job.progress.fetched, 0u);
  EXPECT_GT(job.progress.crops, 0u);
}

TEST(Service, JobFailsAtScoringWithoutProfile) {
  Workspace w;
  w.install_anchors();
  const Job job = w.run("aeroplane");
  EXPECT_EQ(job.state, JobState::failed);
  EXPECT_NE(job.error.find("profile"), std::string::npos);
  EXPECT_THROW(w.service->results(job.id), NotReadyError);
}

TEST(Service, CompletedJobServesResultsAtEveryLevel) {
  Workspace w;
  w.install_anchors();
  const auto profile = w.service->calibrate("aeroplane");
  EXPECT_EQ(profile.class_name, "aeroplane");

  const Job job = w.run("aeroplane", 12, 2);
  ASSERT_EQ(job.state, JobState::done) << job.error;
  EXPECT_EQ(job.progress.requested, 12u);
  EXPECT_EQ(job.progress.fetched, 12u);
  EXPECT_EQ(job.progress.scored, job.progress.crops);
  EXPECT_EQ(job.progress.keyword_crops + job.progress.non_keyword_crops, job.progress.crops);
  ASSERT_TRUE(job.profile.has_value());

  const auto all = w.service->results(job.id, std::nullopt, ResultSpace::all, 1000);
  EXPECT_EQ(all.level, 2);
  EXPECT_EQ(all.total, job.progress.crops);
  EXPECT_DOUBLE_EQ(all.threshold, profile.threshold(2));
  for (std::size_t i = 1; i < all.items.size(); ++i) {
    EXPECT_LE(all.items[i - 1].distance, all.items[i].distance);
  }
  for (const auto& item : all.items) {
    EXPECT_EQ(item.image_url, "/images/" + item.crop_id);
    EXPECT_EQ(item.final, reclassifier::decide(item.prior, item.distance, all.threshold));
  }

  // The catalog holds the job level's decisions.
  const auto space = w.service->catalog().class_space("aeroplane");
  for (const auto& item : all.items) {
    EXPECT_EQ(space.keyword_members.count(item.crop_id) == 1, item.final == reclassifier::Label::keyword);
  }
  w.service->catalog().check_invariants();

  // The keyword page at the job level agrees with a catalog query.
  const auto stored = w.service->catalog().query(catalog::Space::keyword, "aeroplane", 1000, 0);
  EXPECT_EQ(w.service->results(job.id, std::nullopt, ResultSpace::keyword, 1000).total, stored.total);

  std::size_t previous = SIZE_MAX;
  for (int level = 1; level <= 5; ++level) {
    // Overrides recompute decide over the stored distances with that level's threshold.
    const auto every = w.service->results(job.id, level, ResultSpace::all, 1000);
    EXPECT_EQ(every.threshold, profile.threshold(level));
    for (const auto& item : every.items) {
      const auto crop = w.service->catalog().find_crop(item.crop_id);
      ASSERT_TRUE(crop && crop->distance);
      EXPECT_EQ(item.distance, *crop->distance);
      EXPECT_EQ(item.final, reclassifier::decide(item.prior, *crop->distance, profile.threshold(level)));
    }
    const auto page = w.service->results(job.id, level);
    EXPECT_LE(page.total, previous) << "level " << level;
    previous = page.total;
    const auto non = w.service->results(job.id, level, ResultSpace::non_keyword);
    EXPECT_EQ(page.total + non.total, all.total);
  }
  EXPECT_THROW(w.service->results(job.id, 0), ValidationError);
  EXPECT_THROW(w.service->results(job.id, 6), ValidationError);
  EXPECT_THROW(w.service->results(job.id, std::nullopt, ResultSpace::all, 0), ValidationError);
}

TEST(Service, StatesOnlyMoveForward) {
  Workspace w;
  w.install_anchors();
  w.service->calibrate("aeroplane");
  const Job done = w.run("aeroplane");
  ASSERT_EQ(done.state, JobState::done) << done.error;
  const std::vector<JobState> expected = {JobState::queued,  JobState::crawling,      JobState::detecting,
                                          JobState::scoring, JobState::reclassifying, JobState::done};
  ASSERT_EQ(done.history.size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_EQ(done.history[i].first, expected[i]);

  w.service->set_anchor("aeroplane", anchor_png(3));
  const Job failed = w.run("aeroplane");
  ASSERT_EQ(failed.state, JobState::failed);
  for (std::size_t i = 1; i < failed.history.size(); ++i) {
    EXPECT_LT(static_cast<int>(failed.history[i - 1].first), static_cast<int>(failed.history[i].first));
  }
  EXPECT_EQ(failed.history.back().first, JobState::failed);
  EXPECT_EQ(to_json(failed)["history"].size(), failed.history.size());
}

// Holds every search until released.
class GatedProvider final : public crawler::Provider {
 public:
  std::vector<std::string> search(const std::string&, std::size_t) override {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return open_; });
    return {};
  }
  Bytes fetch(const std::string&) override { return {}; }
  void open() {
    {
      std::lock_guard lock(mutex_);
      open_ = true;
    }
    cv_.notify_all();
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  bool open_ = false;
};

TEST(Service, ResultsAreNotReadyWhileCrawling) {
  Workspace w;
  auto gate = std::make_shared<GatedProvider>();
  w.service->register_provider("gated", gate);
  const auto id = w.service->submit({"aeroplane", 4, std::nullopt, "gated"});
  while (w.service->job(id).state != JobState::crawling) std::this_thread::yield();
  EXPECT_THROW(w.service->results(id), NotReadyError);
  EXPECT_EQ(http_status(ErrorKind::not_ready), 409);
  gate->open();
  EXPECT_EQ(w.service->wait(id).state, JobState::failed);
}

TEST(Service, AnchorsForEveryClassCompleteTheSet) {
  Workspace w;
  const auto& vocabulary = w.service->catalog().vocabulary();
  ASSERT_EQ(vocabulary.size(), 20u);
  for (std::size_t i = 0; i < vocabulary.size(); ++i) {
    EXPECT_TRUE(w.service->set_anchor(vocabulary[i], anchor_png(static_cast<int>(i))).changed);
  }
  const auto anchors = w.service->catalog().anchors();
  EXPECT_EQ(anchors.class_count(), 20u);
  for (const auto& cls : vocabulary) EXPECT_TRUE(anchors.contains(cls));
}

TEST(Service, StartupRequiresReferencedDirectories) {
  Workspace w;
  // Path checks run before the checkpoint is loaded, so the message tells them apart.
  const auto startup_error = [](const workflow::ServiceConfig& config) -> std::string {
    try {
      Service service{config};
    } catch (const ConfigurationError& e) {
      return e.what();
    }
    return "";
  };
  auto config = w.config;
  config.providers["fixture"]["dir"] = (w.dir / "missing").string();
  EXPECT_NE(startup_error(config).find("fixture provider 'fixture' directory not found"), std::string::npos);
  config = w.config;
  config.data->dir = w.dir / "missing";
  EXPECT_NE(startup_error(config).find("data directory not found"), std::string::npos);
  EXPECT_NE(startup_error(w.config).find("checkpoint"), std::string::npos);
}

TEST(Service, PagingCoversEveryItemOnce) {
  Workspace w;
  w.install_anchors();
  w.service->calibrate("bicycle");
  const Job job = w.run("bicycle");
  ASSERT_EQ(job.state, JobState::done) << job.error;
  const auto all = w.service->results(job.id, std::nullopt, ResultSpace::all, 1000);
  std::vector<std::string> paged;
  for (std::size_t offset = 0;; offset += 3) {
    const auto page = w.service->results(job.id, std::nullopt, ResultSpace::all, 3, offset);
    EXPECT_EQ(page.total, all.total);
    if (page.items.empty()) break;
    for (const auto& item : page.items) paged.push_back(item.crop_id);
  }
  ASSERT_EQ(paged.size(), all.items.size());
  for (std::size_t i = 0; i < paged.size(); ++i) EXPECT_EQ(paged[i], all.items[i].crop_id);
}

TEST(Service, AnchorChangeMakesResultsStaleAndBlocksNewJobs) {
  Workspace w;
  w.install_anchors();
  w.service->calibrate("aeroplane");
  const Job job = w.run("aeroplane");
  ASSERT_EQ(job.state, JobState::done) << job.error;
  EXPECT_NO_THROW(w.service->results(job.id));

  const auto update = w.service->set_anchor("aeroplane", anchor_png(1));
  EXPECT_TRUE(update.changed);
  EXPECT_TRUE(update.invalidated_profile);
  EXPECT_THROW(w.service->results(job.id), StaleError);

  const Job next = w.run("aeroplane");
  EXPECT_EQ(next.state, JobState::failed);
  EXPECT_NE(next.error.find("recalibrate"), std::string::npos);

  w.service->calibrate("aeroplane");
  const Job again = w.run("aeroplane");
  EXPECT_EQ(again.state, JobState::done) << again.error;
  EXPECT_NO_THROW(w.service->results(again.id));
  EXPECT_THROW(w.service->results(job.id), StaleError);
}

TEST(Service, SubmitValidatesRequests) {
  Workspace w;
  EXPECT_THROW(w.service->submit({"unicorn", 3, std::nullopt, std::nullopt}), ValidationError);
  EXPECT_THROW(w.service->submit({"aeroplane", 0, std::nullopt, std::nullopt}), ValidationError);
  EXPECT_THROW(w.service->submit({"aeroplane", 3, 6, std::nullopt}), ValidationError);
  EXPECT_THROW(w.service->submit({"aeroplane", 3, std::nullopt, "bing"}), ValidationError);
  EXPECT_THROW(w.service->job("job-nope"), NotFoundError);
  EXPECT_THROW(w.service->results("job-nope"), NotFoundError);
}

TEST(Service, ConcurrentJobsKeepTheCatalogConsistent) {
  Workspace w;
  w.install_anchors();
  w.service->calibrate("aeroplane");
  w.service->calibrate("bicycle");
  std::vector<std::string> ids;
  for (int i = 0; i < 3; ++i) {
    ids.push_back(w.service->submit({"aeroplane", 8, std::nullopt, std::nullopt}));
    ids.push_back(w.service->submit({"bicycle", 8, std::nullopt, std::nullopt}));
  }
  for (const auto& id : ids) {
    const Job job = w.service->wait(id);
    EXPECT_EQ(job.state, JobState::done) << job.error;
  }
  w.service->catalog().check_invariants();
  // Crops shared by both keywords belong to whichever class staged them
  // last; re-running the same job twice in a row changes nothing.
  w.run("aeroplane", 8);
  const auto before = w.service->catalog().class_space("aeroplane");
  w.run("aeroplane", 8);
  EXPECT_EQ(w.service->catalog().class_space("aeroplane"), before);
}

TEST(Service, AnchorsClassesAndImages) {
  Workspace w;
  EXPECT_THROW(w.service->set_anchor("unicorn", anchor_png(0)), ValidationError);
  EXPECT_THROW(w.service->set_anchor("aeroplane", Bytes{1, 2, 3}), ValidationError);
  EXPECT_TRUE(w.service->set_anchor("aeroplane", anchor_png(0)).changed);
  EXPECT_FALSE(w.service->set_anchor("aeroplane", anchor_png(0)).changed);

  const auto classes = w.service->classes();
  ASSERT_EQ(classes.size(), catalog::voc_classes().size());
  const auto plane = std::find_if(classes.begin(), classes.end(), [](const auto& c) { return c.class_name == "aeroplane"; });
  ASSERT_NE(plane, classes.end());
  EXPECT_TRUE(plane->anchor.has_value());
  EXPECT_FALSE(plane->has_profile);

  EXPECT_THROW(w.service->crop_png("nope"), NotFoundError);
  w.install_anchors();
  w.service->calibrate("bicycle");
  const Job job = w.run("bicycle", 2);
  ASSERT_EQ(job.state, JobState::done) << job.error;
  const auto page = w.service->results(job.id, std::nullopt, ResultSpace::all);
  ASSERT_FALSE(page.items.empty());
  EXPECT_FALSE(decode_image(w.service->crop_png(page.items[0].crop_id)).empty());
}

TEST(Service, DensityNeedsAProfile) {
  Workspace w;
  w.install_anchors();
  EXPECT_THROW(w.service->density("aeroplane"), NotFoundError);
  EXPECT_THROW(w.service->density("unicorn"), NotFoundError);
  const auto profile = w.service->calibrate("aeroplane");
  const auto h = w.service->density("aeroplane", 10, 5);
  ASSERT_EQ(h.keyword_counts.size(), 10u);
  std::size_t n = 0;
  for (std::size_t b = 0; b < 10; ++b) n += h.keyword_counts[b] + h.other_counts[b];
  EXPECT_EQ(n, profile.sample_count);
  EXPECT_EQ(h.fp0, profile.fp0);
  EXPECT_EQ(h.fn0, profile.fn0);
  EXPECT_EQ(h.active_threshold, profile.threshold(5));
  EXPECT_THROW(w.service->density("aeroplane", 0), ValidationError);
}

TEST(Service, CalibrationAndEvaluationNeedData) {
  Workspace w;
  EXPECT_THROW(w.service->calibrate("aeroplane"), NotReadyError);  // no anchor
  EXPECT_THROW(w.service->calibrate("unicorn"), NotFoundError);
  w.install_anchors();
  EXPECT_THROW(w.service->calibrate("cat"), NotReadyError);
  EXPECT_THROW(w.service->compare_report(), NotFoundError);
  EXPECT_THROW(w.service->evaluate(), NotReadyError);  // no profiles yet

  w.service->calibrate("aeroplane");
  w.service->calibrate("bicycle");
  const auto report = w.service->evaluate();
  EXPECT_EQ(report.methods,
            (std::vector<std::string>{"detector", "detector+classifier", "detector+siamese", "siamese"}));
  EXPECT_EQ(report.classes, (std::vector<std::string>{"aeroplane", "bicycle"}));
  const auto doc = w.service->compare_report();
  EXPECT_EQ(doc.at("level"), 3);
  EXPECT_TRUE(doc.contains("heatmap"));

  auto config = w.config;
  config.data.reset();
  config.catalog = w.dir / "other";
  Service bare(config, detector::make_backend(config.detector), siamese::Embedder(config.embedder));
  workflow::install_missing_anchors(bare.catalog(), siamese::load_anchor_dir(w.dir / "anchors"));
  EXPECT_THROW(bare.calibrate("aeroplane"), ConfigurationError);
}

TEST(Service, ShutdownFailsQueuedJobs) {
  Workspace w;
  w.config.workers = 1;
  w.start();
  std::vector<std::string> ids;
  for (int i = 0; i < 4; ++i) ids.push_back(w.service->submit({"aeroplane", 12, std::nullopt, std::nullopt}));
  w.service->shutdown();
  for (const auto& id : ids) {
    const auto state = w.service->job(id).state;
    EXPECT_TRUE(state == JobState::done || state == JobState::failed);
  }
  EXPECT_THROW(w.service->submit({"aeroplane", 1, std::nullopt, std::nullopt}), NotReadyError);
}

TEST(ServiceConstruction, MissingCheckpointIsAConfigurationError) {
  Workspace w;
  auto config = w.config;
  config.checkpoint = w.dir / "absent.ckpt";
  try {
    Service s(config);
    FAIL() << "expected ConfigurationError";
  } catch (const ConfigurationError& e) {
    EXPECT_NE(std::string(e.what()).find("absent.ckpt"), std::string::npos);
  }
}

TEST(ServiceConstruction, CheckpointAndAnchorsLoadFromConfig) {
  Workspace w;
  auto config = w.config;
  config.catalog = w.dir / "fresh";
  config.checkpoint = w.dir / "model.ckpt";
  siamese::save_checkpoint(config.checkpoint, siamese::Embedder(config.embedder), {config.embedder, 1, 1, {}});
  Service s(config);
  EXPECT_EQ(s.catalog().anchors().class_count(), 2u);
}

// HTTP ------------------------------------------------------------------------

struct Http {
  Workspace w;
  HttpServer server{*w.service};
  int port = server.bind("127.0.0.1", 0);
  httplib::Client client{"127.0.0.1", port};

  Http() { server.start(); }

  nlohmann::json json(const httplib::Result& r) { return nlohmann::json::parse(r->body); }
};

TEST(Http, StatusCodesFollowErrorKinds) {
  EXPECT_EQ(http_status(ErrorKind::validation), 422);
  EXPECT_EQ(http_status(ErrorKind::calibration), 422);
  EXPECT_EQ(http_status(ErrorKind::not_found), 404);
  EXPECT_EQ(http_status(ErrorKind::not_ready), 409);
  EXPECT_EQ(http_status(ErrorKind::stale), 409);
  EXPECT_EQ(http_status(ErrorKind::io), 500);
}

TEST(Http, JobLifecycleOverHttp) {
  Http h;
  EXPECT_EQ(h.client.Get("/health")->status, 200);

  auto r = h.client.Post("/jobs", "not json", "application/json");
  EXPECT_EQ(r->status, 422);
  EXPECT_EQ(h.json(r)["error"]["kind"], "validation");
  EXPECT_EQ(h.client.Post("/jobs", R"({"keyword":"unicorn","count":3})", "application/json")->status, 422);
  EXPECT_EQ(h.client.Post("/jobs", R"({"keyword":"aeroplane","count":-1})", "application/json")->status, 422);
  EXPECT_EQ(h.client.Post("/jobs", R"({"keyword":"aeroplane"})", "application/json")->status, 422);
  EXPECT_EQ(h.client.Get("/jobs/job-nope")->status, 404);

  // No anchor or profile yet: the job fails and results are not ready.
  r = h.client.Post("/jobs", R"({"keyword":"aeroplane","count":4})", "application/json");
  ASSERT_EQ(r->status, 202);
  const std::string failed = h.json(r)["job_id"];
  h.w.service->wait(failed);
  EXPECT_EQ(h.json(h.client.Get("/jobs/" + failed))["state"], "failed");
  r = h.client.Get("/jobs/" + failed + "/results");
  EXPECT_EQ(r->status, 409);
  EXPECT_EQ(h.json(r)["error"]["kind"], "not_ready");

  // Raw and multipart anchor uploads.
  const Bytes png = encode_png(synth::render_anchor(synth::default_two_classes()[0]));
  r = h.client.Put("/anchors/aeroplane", std::string(png.begin(), png.end()), "image/png");
  ASSERT_EQ(r->status, 200);
  EXPECT_TRUE(h.json(r)["changed"]);
  httplib::MultipartFormDataItems form = {{"image", std::string(png.begin(), png.end()), "a.png", "image/png"}};
  r = h.client.Put("/anchors/aeroplane", form);
  ASSERT_EQ(r->status, 200);
  EXPECT_FALSE(h.json(r)["changed"]);
  EXPECT_EQ(h.client.Put("/anchors/unicorn", std::string(png.begin(), png.end()), "image/png")->status, 422);
  EXPECT_EQ(h.client.Put("/anchors/aeroplane", "xyz", "image/png")->status, 422);

  r = h.client.Post("/calibrate/aeroplane");
  ASSERT_EQ(r->status, 200) << r->body;
  const auto profile = h.json(r);
  EXPECT_EQ(profile["class"], "aeroplane");
  EXPECT_EQ(profile["ladder"].size(), 5u);

  r = h.client.Post("/jobs", R"({"keyword":"aeroplane","count":12,"level":4})", "application/json");
  ASSERT_EQ(r->status, 202);
  const std::string id = h.json(r)["job_id"];
  h.w.service->wait(id);
  const auto status = h.json(h.client.Get("/jobs/" + id));
  EXPECT_EQ(status["state"], "done");
  EXPECT_EQ(status["level"], 4);
  EXPECT_EQ(status["progress"]["fetched"], 12);

  r = h.client.Get("/jobs/" + id + "/results?space=all&limit=1000");
  ASSERT_EQ(r->status, 200);
  const auto all = h.json(r);
  EXPECT_EQ(all["level"], 4);
  EXPECT_EQ(all["total"], all["items"].size());
  ASSERT_FALSE(all["items"].empty());
  const auto& first = all["items"][0];
  for (const char* key : {"crop_id", "distance", "prior", "final", "image_url"}) EXPECT_TRUE(first.contains(key));

  r = h.client.Get(first["image_url"].get<std::string>());
  ASSERT_EQ(r->status, 200);
  EXPECT_EQ(r->get_header_value("Content-Type"), "image/png");
  EXPECT_FALSE(decode_image(Bytes(r->body.begin(), r->body.end())).empty());
  EXPECT_EQ(h.client.Get("/images/nope")->status, 404);

  r = h.client.Get("/jobs/" + id + "/results?level=1&limit=2&offset=1");
  ASSERT_EQ(r->status, 200);
  EXPECT_EQ(h.json(r)["level"], 1);
  EXPECT_LE(h.json(r)["items"].size(), 2u);
  EXPECT_EQ(h.client.Get("/jobs/" + id + "/results?level=9")->status, 422);
  EXPECT_EQ(h.client.Get("/jobs/" + id + "/results?limit=abc")->status, 422);
  EXPECT_EQ(h.client.Get("/jobs/" + id + "/results?space=maybe")->status, 422);

  // Anchor change: stale until a new job scores against it.
  const Bytes other = anchor_png(9);
  ASSERT_EQ(h.client.Put("/anchors/aeroplane", std::string(other.begin(), other.end()), "image/png")->status, 200);
  r = h.client.Get("/jobs/" + id + "/results");
  EXPECT_EQ(r->status, 409);
  EXPECT_EQ(h.json(r)["error"]["kind"], "stale");
}

TEST(Http, ClassesDensityAndReports) {
  Http h;
  h.w.install_anchors();
  auto r = h.client.Get("/classes");
  ASSERT_EQ(r->status, 200);
  const auto classes = h.json(r)["classes"];
  EXPECT_EQ(classes.size(), 20u);
  EXPECT_EQ(classes[0]["class"], "aeroplane");
  EXPECT_TRUE(classes[0]["anchor"]);
  EXPECT_FALSE(classes[0]["profile"]);

  EXPECT_EQ(h.client.Get("/density/aeroplane")->status, 404);
  EXPECT_EQ(h.client.Get("/reports/compare")->status, 404);
  EXPECT_EQ(h.client.Post("/reports/compare")->status, 409);
  EXPECT_EQ(h.client.Post("/calibrate/cat")->status, 409);

  ASSERT_EQ(h.client.Post("/calibrate/aeroplane")->status, 200);
  ASSERT_EQ(h.client.Post("/calibrate/bicycle")->status, 200);
  r = h.client.Get("/density/aeroplane?bins=8&level=2");
  ASSERT_EQ(r->status, 200);
  const auto density = h.json(r);
  EXPECT_EQ(density["edges"].size(), 9u);
  EXPECT_FALSE(density["active_threshold"].is_null());
  EXPECT_EQ(h.client.Get("/density/aeroplane?bins=0")->status, 422);

  r = h.client.Post("/reports/compare?level=2");
  ASSERT_EQ(r->status, 200) << r->body;
  EXPECT_EQ(h.json(r)["level"], 2);
  r = h.client.Get("/reports/compare");
  ASSERT_EQ(r->status, 200);
  EXPECT_EQ(h.json(r)["heatmap"]["metric"], "average_f1");
}

TEST(Http, ServesTheUiDirectory) {
  TempDir ui("curator-ui");
  write_file_atomic(ui / "index.html", std::string("<html>curator</html>"));
  Workspace w;
  w.config.server.ui_dir = ui.path();
  w.start();
  HttpServer server(*w.service);
  const int port = server.bind("127.0.0.1", 0);
  server.start();
  httplib::Client client("127.0.0.1", port);
  const auto r = client.Get("/ui/index.html");
  ASSERT_EQ(r->status, 200);
  EXPECT_EQ(r->body, "<html>curator</html>");
}

}  // namespace
