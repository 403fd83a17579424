#pragma once

#include "curator/calibrator/calibrator.hpp"
#include "curator/catalog/catalog.hpp"
#include "curator/crawler/crawler.hpp"
#include "curator/detector/detector.hpp"
#include "curator/metrics/metrics.hpp"
#include "curator/reclassifier/reclassifier.hpp"
#include "curator/siamese/embedder.hpp"
#include "curator/workflow/config.hpp"
#include "curator/workflow/workflow.hpp"

#include <condition_variable>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

namespace curator::service {

enum class JobState { queued, crawling, detecting, scoring, reclassifying, done, failed };

std::string to_string(JobState state);

struct JobRequest {
  std::string keyword;
  std::size_t count = 0;
  std::optional<int> level;         // default: the configured level
  std::optional<std::string> provider;
};

struct JobProgress {
  std::size_t requested = 0;
  std::size_t fetched = 0;
  std::size_t crawl_failures = 0;
  std::size_t crops = 0;
  std::size_t keyword_crops = 0;      // detector stage
  std::size_t non_keyword_crops = 0;  // detector stage
  std::size_t detection_failures = 0;
  std::size_t scored = 0;
  std::size_t moved_in = 0;
  std::size_t moved_out = 0;
};

/// Distance and detector prior of one crop, frozen when scoring finishes.
struct ScoredCrop {
  std::string crop_id;
  double distance = 0.0;
  reclassifier::Label prior = reclassifier::Label::non_keyword;
};

struct Job {
  std::string id;
  std::string keyword;
  std::size_t count = 0;
  int level = 3;
  std::string provider;
  JobState state = JobState::queued;
  // Every state entered, with its UTC timestamp, starting with queued.
  std::vector<std::pair<JobState, std::string>> history;
  JobProgress progress;
  std::string error;  // set when failed
  std::string created_at;
  std::string updated_at;
  std::vector<std::string> warnings;  // per-item crawl and detector failures
  // Filled once scoring completes.
  std::optional<calibrator::ThresholdProfile> profile;
  std::string anchor_hash;
  std::vector<ScoredCrop> scored;

  bool scored_complete() const noexcept { return profile.has_value(); }
};

nlohmann::json to_json(const Job& job);

enum class ResultSpace { keyword, non_keyword, all };
ResultSpace parse_result_space(const std::string& text);

struct ResultItem {
  std::string crop_id;
  double distance = 0.0;
  reclassifier::Label prior = reclassifier::Label::non_keyword;
  reclassifier::Label final = reclassifier::Label::non_keyword;
  std::string image_url;
};

struct ResultsPage {
  std::string job_id;
  int level = 3;
  double threshold = 0.0;
  std::size_t total = 0;
  std::vector<ResultItem> items;
};

nlohmann::json to_json(const ResultsPage& page);

struct ClassStatus {
  std::string class_name;
  std::optional<catalog::AnchorState> anchor;
  bool has_profile = false;
  std::size_t keyword_count = 0;
  std::size_t non_keyword_count = 0;
};

nlohmann::json to_json(const ClassStatus& status);

/**
 * Curation service. Jobs run on a fixed worker pool; jobs for the same
 * keyword run one at a time, in submission order.
 *
 * Pipeline per job: crawl -> detector stage -> score every staged crop
 * against the keyword's anchor -> reclassify at the job's level. The job
 * fails before scoring if the keyword has no anchor or no fresh profile.
 */
class Service {
 public:
  /// Builds the catalog, providers, detector and model from `config`.
  /// Throws ConfigurationError when the checkpoint, a fixture directory or
  /// the labeled corpus is missing, or a provider is invalid.
  explicit Service(workflow::ServiceConfig config);

  /// For tests: injected backend and model.
  Service(workflow::ServiceConfig config, std::unique_ptr<detector::DetectorBackend> detector,
          siamese::Embedder model);

  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Queues a job. Throws ValidationError for an unknown keyword, a zero
  /// count, a bad level or an unregistered provider.
  std::string submit(const JobRequest& request);

  /// Throws NotFoundError for unknown ids.
  Job job(const std::string& id) const;

  /// Blocks until the job is done or failed.
  Job wait(const std::string& id) const;

  /// Decisions recomputed at `level` (default: the job's) from the frozen
  /// distances, ordered by distance then crop id. NotReadyError before
  /// scoring completes, StaleError once the keyword's anchor has changed.
  ResultsPage results(const std::string& id, std::optional<int> level = std::nullopt,
                      ResultSpace space = ResultSpace::keyword, std::size_t limit = 50,
                      std::size_t offset = 0) const;

  std::vector<ClassStatus> classes() const;

  /// Replaces a class's anchor. Throws ValidationError for unknown classes
  /// and undecodable bytes.
  catalog::AnchorUpdate set_anchor(const std::string& class_name, const Bytes& bytes);

  /// Recalibrates one class on the validation split of the configured
  /// corpus against the catalog anchor.
  calibrator::ThresholdProfile calibrate(const std::string& class_name);

  /// Runs the method comparison on the test split and stores it.
  metrics::ComparisonReport evaluate(std::optional<int> level = std::nullopt);

  /// Stored comparison report; NotFoundError when none has been produced.
  nlohmann::json compare_report() const;

  /// Histogram of the calibration distances of a class with fp0, fn0 and
  /// the level's threshold marked. NotFoundError without a profile.
  metrics::DensityHistogram density(const std::string& class_name, std::size_t bins = 20,
                                    std::optional<int> level = std::nullopt) const;

  /// PNG bytes of a crop. NotFoundError for unknown ids.
  Bytes crop_png(const std::string& crop_id) const;

  /// Adds a search provider next to the configured ones.
  void register_provider(const std::string& name, std::shared_ptr<crawler::Provider> provider);

  catalog::Catalog& catalog() noexcept { return *catalog_; }
  const workflow::ServiceConfig& config() const noexcept { return config_; }
  const crawler::ProviderRegistry& providers() const noexcept { return registry_; }

  /// Stops the workers after the running jobs finish; queued jobs fail.
  void shutdown();

 private:
  void start_workers();
  void worker_loop();
  void run_job(const std::string& id);
  void update(const std::string& id, const std::function<void(Job&)>& fn);
  void require_class(const std::string& class_name) const;
  void set_state(const std::string& id, JobState state);
  const workflow::Dataset& dataset();

  workflow::ServiceConfig config_;
  std::unique_ptr<catalog::Catalog> catalog_;
  crawler::ProviderRegistry registry_;
  std::unique_ptr<detector::DetectorBackend> detector_;
  std::unique_ptr<siamese::Embedder> model_;

  mutable std::mutex mutex_;
  mutable std::condition_variable changed_;
  std::map<std::string, Job> jobs_;
  std::deque<std::string> queue_;
  std::set<std::string> active_keywords_;
  std::uint64_t next_job_ = 0;
  bool stopping_ = false;
  std::vector<std::thread> workers_;

  // Held while a job stages crops or applies decisions, since crops shared
  // by two keywords can move between their class spaces.
  std::mutex membership_mutex_;
  std::mutex dataset_mutex_;
  std::optional<workflow::Dataset> dataset_;
};

}  // namespace curator::service
