#include "curator/service/service.hpp"

#include "curator/common/errors.hpp"
#include "curator/common/hash.hpp"
#include "curator/common/image_io.hpp"
#include "curator/siamese/scoring.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <random>
#include <unordered_set>

namespace curator::service {

using reclassifier::Label;

std::string to_string(JobState state) {
  switch (state) {
    case JobState::queued: return "queued";
    case JobState::crawling: return "crawling";
    case JobState::detecting: return "detecting";
    case JobState::scoring: return "scoring";
    case JobState::reclassifying: return "reclassifying";
    case JobState::done: return "done";
    case JobState::failed: return "failed";
  }
  return "unknown";
}

ResultSpace parse_result_space(const std::string& text) {
  if (text == "keyword") return ResultSpace::keyword;
  if (text == "non-keyword") return ResultSpace::non_keyword;
  if (text == "all") return ResultSpace::all;
  throw ValidationError("space must be keyword, non-keyword or all, got '" + text + "'");
}

namespace {

nlohmann::json history_json(const Job& job) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& [state, at] : job.history) out.push_back({{"state", to_string(state)}, {"at", at}});
  return out;
}

void require_paths(const workflow::ServiceConfig& config) {
  for (const auto& [name, p] : config.providers.items()) {
    if (p.value("type", "") == "fixture" && p.contains("dir") &&
        !std::filesystem::is_directory(p["dir"].get<std::string>())) {
      throw ConfigurationError("fixture provider '" + name + "' directory not found: " + p["dir"].get<std::string>());
    }
  }
  if (config.data) {
    for (const auto& dir : {config.data->dir, config.data->anchors}) {
      if (!std::filesystem::is_directory(dir)) throw ConfigurationError("data directory not found: " + dir.string());
    }
  }
}

}  // namespace

nlohmann::json to_json(const Job& job) {
  const auto& p = job.progress;
  nlohmann::json j = {{"id", job.id},
                      {"keyword", job.keyword},
                      {"count", job.count},
                      {"level", job.level},
                      {"provider", job.provider},
                      {"state", to_string(job.state)},
                      {"progress",
                       {{"requested", p.requested},
                        {"fetched", p.fetched},
                        {"crawl_failures", p.crawl_failures},
                        {"crops", p.crops},
                        {"keyword_crops", p.keyword_crops},
                        {"non_keyword_crops", p.non_keyword_crops},
                        {"detection_failures", p.detection_failures},
                        {"scored", p.scored},
                        {"moved_in", p.moved_in},
                        {"moved_out", p.moved_out}}},
                      {"history", history_json(job)},
                      {"error", job.error.empty() ? nlohmann::json(nullptr) : nlohmann::json(job.error)},
                      {"warnings", job.warnings},
                      {"created_at", job.created_at},
                      {"updated_at", job.updated_at}};
  if (job.profile) {
    j["threshold"] = job.profile->threshold(job.level);
    j["anchor_hash"] = job.anchor_hash;
  }
  return j;
}

nlohmann::json to_json(const ResultsPage& page) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& item : page.items) {
    items.push_back({{"crop_id", item.crop_id},
                     {"distance", item.distance},
                     {"prior", reclassifier::to_string(item.prior)},
                     {"final", reclassifier::to_string(item.final)},
                     {"image_url", item.image_url}});
  }
  return {{"job_id", page.job_id},
          {"level", page.level},
          {"threshold", page.threshold},
          {"total", page.total},
          {"items", std::move(items)}};
}

nlohmann::json to_json(const ClassStatus& s) {
  nlohmann::json j = {{"class", s.class_name},
                      {"anchor", s.anchor.has_value()},
                      {"profile", s.has_profile},
                      {"keyword_count", s.keyword_count},
                      {"non_keyword_count", s.non_keyword_count}};
  if (s.anchor) {
    j["anchor_hash"] = s.anchor->content_hash;
    j["scores_stale"] = s.anchor->scores_stale;
    j["profile_stale"] = s.anchor->profile_stale;
  }
  return j;
}

// ---------------------------------------------------------------------------

Service::Service(workflow::ServiceConfig config) : config_(std::move(config)) {
  config_.validate();
  require_paths(config_);
  catalog_ = std::make_unique<catalog::Catalog>(config_.catalog, config_.effective_vocabulary());
  for (const auto& [name, p] : config_.providers.items()) {
    registry_.register_provider(name, crawler::make_provider(p));
  }
  detector_ = detector::make_backend(config_.detector);
  model_ = std::make_unique<siamese::Embedder>(workflow::load_model(config_));
  if (config_.data) {
    workflow::install_missing_anchors(*catalog_, siamese::load_anchor_dir(config_.data->anchors));
  }
  start_workers();
}

Service::Service(workflow::ServiceConfig config, std::unique_ptr<detector::DetectorBackend> detector,
                 siamese::Embedder model)
    : config_(std::move(config)),
      detector_(std::move(detector)),
      model_(std::make_unique<siamese::Embedder>(std::move(model))) {
  config_.validate();
  catalog_ = std::make_unique<catalog::Catalog>(config_.catalog, config_.effective_vocabulary());
  for (const auto& [name, p] : config_.providers.items()) {
    registry_.register_provider(name, crawler::make_provider(p));
  }
  start_workers();
}

Service::~Service() { shutdown(); }

void Service::start_workers() {
  next_job_ = std::random_device{}();
  next_job_ = (next_job_ << 32) ^ std::random_device{}();
  for (std::size_t i = 0; i < config_.workers; ++i) workers_.emplace_back([this] { worker_loop(); });
}

void Service::shutdown() {
  {
    std::lock_guard lock(mutex_);
    if (stopping_) return;
    stopping_ = true;
    for (const auto& id : queue_) {
      Job& job = jobs_.at(id);
      job.state = JobState::failed;
      job.error = "service stopped before the job started";
      job.updated_at = utc_timestamp();
      job.history.emplace_back(job.state, job.updated_at);
    }
    queue_.clear();
  }
  changed_.notify_all();
  for (auto& t : workers_) t.join();
  workers_.clear();
}

void Service::require_class(const std::string& class_name) const {
  if (!catalog_->has_class(class_name)) throw NotFoundError("unknown class '" + class_name + "'");
}

std::string Service::submit(const JobRequest& request) {
  if (!catalog_->has_class(request.keyword)) {
    throw ValidationError("keyword '" + request.keyword + "' is not in the detector vocabulary");
  }
  if (request.count == 0) throw ValidationError("count must be at least 1");
  const int level = request.level.value_or(config_.default_level);
  calibrator::validate_level(level);
  const std::string provider = request.provider.value_or(config_.default_provider);
  const auto names = registry_.names();
  if (std::find(names.begin(), names.end(), provider) == names.end()) {
    throw ValidationError("unknown provider '" + provider + "'");
  }

  std::string id;
  {
    std::lock_guard lock(mutex_);
    if (stopping_) throw NotReadyError("service is shutting down");
    char buf[24];
    std::snprintf(buf, sizeof(buf), "job-%012llx",
                  static_cast<unsigned long long>(mix64(next_job_++) & 0xffffffffffffULL));
    id = buf;
    Job job;
    job.id = id;
    job.keyword = request.keyword;
    job.count = request.count;
    job.level = level;
    job.provider = provider;
    job.created_at = job.updated_at = utc_timestamp();
    job.history.emplace_back(JobState::queued, job.created_at);
    jobs_.emplace(id, std::move(job));
    queue_.push_back(id);
  }
  changed_.notify_all();
  return id;
}

Job Service::job(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = jobs_.find(id);
  if (it == jobs_.end()) throw NotFoundError("unknown job '" + id + "'");
  return it->second;
}

Job Service::wait(const std::string& id) const {
  std::unique_lock lock(mutex_);
  auto it = jobs_.find(id);
  if (it == jobs_.end()) throw NotFoundError("unknown job '" + id + "'");
  changed_.wait(lock, [&] { return it->second.state == JobState::done || it->second.state == JobState::failed; });
  return it->second;
}

void Service::update(const std::string& id, const std::function<void(Job&)>& fn) {
  {
    std::lock_guard lock(mutex_);
    Job& job = jobs_.at(id);
    const JobState before = job.state;
    fn(job);
    job.updated_at = utc_timestamp();
    if (job.state != before) job.history.emplace_back(job.state, job.updated_at);
  }
  changed_.notify_all();
}

void Service::set_state(const std::string& id, JobState state) {
  update(id, [state](Job& j) { j.state = state; });
}

void Service::worker_loop() {
  for (;;) {
    std::string id;
    std::string keyword;
    {
      std::unique_lock lock(mutex_);
      auto runnable = queue_.end();
      changed_.wait(lock, [&] {
        if (stopping_) return true;
        runnable = std::find_if(queue_.begin(), queue_.end(),
                                [&](const std::string& q) { return !active_keywords_.count(jobs_.at(q).keyword); });
        return runnable != queue_.end();
      });
      if (stopping_) return;
      id = *runnable;
      queue_.erase(runnable);
      keyword = jobs_.at(id).keyword;
      active_keywords_.insert(keyword);
    }
    try {
      run_job(id);
    } catch (const std::exception& e) {
      update(id, [&](Job& job) {
        job.error = to_string(job.state) + ": " + e.what();
        job.state = JobState::failed;
      });
    }
    {
      std::lock_guard lock(mutex_);
      active_keywords_.erase(keyword);
    }
    changed_.notify_all();
  }
}

void Service::run_job(const std::string& id) {
  const Job snapshot = job(id);
  const std::string& keyword = snapshot.keyword;

  set_state(id, JobState::crawling);
  const auto crawled = crawler::crawl(*catalog_, registry_, {keyword, snapshot.count, snapshot.provider},
                                      config_.fan_out);
  update(id, [&](Job& j) {
    j.progress.requested = crawled.requested;
    j.progress.fetched = crawled.fetched;
    j.progress.crawl_failures = crawled.failures.size();
    for (const auto& f : crawled.failures) j.warnings.push_back("crawl " + f.uri + ": " + f.reason);
    j.state = JobState::detecting;
  });

  detector::StagingReport staged;
  {
    std::lock_guard membership(membership_mutex_);
    staged = detector::stage_classify(*catalog_, *detector_, crawled.records, keyword);
  }
  std::vector<std::string> crop_ids;
  std::unordered_set<std::string> seen;
  for (const auto& c : staged.crop_ids) {
    if (seen.insert(c).second) crop_ids.push_back(c);
  }
  update(id, [&](Job& j) {
    j.progress.crops = crop_ids.size();
    j.progress.keyword_crops = staged.keyword_count;
    j.progress.non_keyword_crops = staged.non_keyword_count;
    j.progress.detection_failures = staged.failures.size();
    for (const auto& f : staged.failures) j.warnings.push_back("detect " + f.image_id + ": " + f.reason);
    j.state = JobState::scoring;
  });

  const auto anchor = catalog_->anchor_state(keyword);
  if (!anchor) throw NotReadyError("class '" + keyword + "' has no anchor; upload one first");
  const auto profile = calibrator::load_profile(*catalog_, keyword);
  if (!profile) throw NotReadyError("class '" + keyword + "' has no calibrated profile; calibrate it first");
  if (anchor->profile_stale) {
    throw StaleError("profile of '" + keyword + "' predates the current anchor; recalibrate it first");
  }
  const auto scores = siamese::score_catalog(*catalog_, *model_, crop_ids, keyword, config_.score_workers);
  const auto after = catalog_->anchor_state(keyword);
  if (!after || after->content_hash != anchor->content_hash) {
    throw StaleError("anchor of '" + keyword + "' changed while scoring");
  }

  // Crops shared with another keyword's crawl may have been moved to that
  // class since staging; they are reported and left alone. The membership
  // lock keeps them from moving again before apply().
  std::unique_lock membership(membership_mutex_);
  std::vector<catalog::DistanceScore> own;
  std::vector<ScoredCrop> frozen;
  std::vector<std::string> moved_away;
  for (const auto& s : scores) {
    const auto crop = catalog_->find_crop(s.crop_id);
    if (!crop || crop->space_class != keyword) {
      moved_away.push_back(s.crop_id);
      continue;
    }
    own.push_back(s);
    frozen.push_back({s.crop_id, s.distance, reclassifier::detector_prior(*crop, keyword)});
  }
  update(id, [&](Job& j) {
    j.profile = profile;
    j.anchor_hash = anchor->content_hash;
    j.scored = frozen;
    j.progress.scored = frozen.size();
    for (const auto& c : moved_away) j.warnings.push_back("crop " + c + " now belongs to another class");
    j.state = JobState::reclassifying;
  });

  const auto report =
      reclassifier::apply(*catalog_, keyword, own, profile->threshold(snapshot.level), snapshot.level);
  membership.unlock();
  update(id, [&](Job& j) {
    j.progress.moved_in = report.moved_in.size();
    j.progress.moved_out = report.moved_out.size();
    j.state = JobState::done;
  });
}

ResultsPage Service::results(const std::string& id, std::optional<int> level, ResultSpace space,
                             std::size_t limit, std::size_t offset) const {
  const Job j = job(id);
  if (!j.scored_complete()) {
    throw NotReadyError("job " + id + " is " + to_string(j.state) + "; results exist once scoring completes");
  }
  const auto anchor = catalog_->anchor_state(j.keyword);
  if (!anchor || anchor->content_hash != j.anchor_hash) {
    throw StaleError("anchor of '" + j.keyword + "' changed after job " + id + " was scored; rerun the job");
  }
  if (limit == 0 || limit > 1000) throw ValidationError("limit must be in [1, 1000]");

  ResultsPage page;
  page.job_id = id;
  page.level = level.value_or(j.level);
  calibrator::validate_level(page.level);
  page.threshold = j.profile->threshold(page.level);

  std::vector<ResultItem> items;
  for (const auto& s : j.scored) {
    const Label final = reclassifier::decide(s.prior, s.distance, page.threshold);
    if (space == ResultSpace::keyword && final != Label::keyword) continue;
    if (space == ResultSpace::non_keyword && final != Label::non_keyword) continue;
    items.push_back({s.crop_id, s.distance, s.prior, final, "/images/" + s.crop_id});
  }
  std::sort(items.begin(), items.end(), [](const ResultItem& a, const ResultItem& b) {
    return a.distance != b.distance ? a.distance < b.distance : a.crop_id < b.crop_id;
  });
  page.total = items.size();
  if (offset < items.size()) {
    const auto end = items.begin() + static_cast<std::ptrdiff_t>(std::min(items.size(), offset + limit));
    page.items.assign(items.begin() + static_cast<std::ptrdiff_t>(offset), end);
  }
  return page;
}

std::vector<ClassStatus> Service::classes() const {
  std::vector<ClassStatus> out;
  for (const auto& cls : catalog_->vocabulary()) {
    ClassStatus s;
    s.class_name = cls;
    s.anchor = catalog_->anchor_state(cls);
    s.has_profile = calibrator::load_profile(*catalog_, cls).has_value();
    const auto space = catalog_->class_space(cls);
    s.keyword_count = space.keyword_members.size();
    s.non_keyword_count = space.non_keyword_members.size();
    out.push_back(std::move(s));
  }
  return out;
}

catalog::AnchorUpdate Service::set_anchor(const std::string& class_name, const Bytes& bytes) {
  return catalog_->set_anchor(class_name, bytes);
}

void Service::register_provider(const std::string& name, std::shared_ptr<crawler::Provider> provider) {
  registry_.register_provider(name, std::move(provider));
}

const workflow::Dataset& Service::dataset() {
  std::lock_guard lock(dataset_mutex_);
  if (!dataset_) dataset_ = workflow::load_dataset(config_);
  return *dataset_;
}

calibrator::ThresholdProfile Service::calibrate(const std::string& class_name) {
  require_class(class_name);
  const auto& data = dataset();
  const auto outcome = workflow::calibrate_classes(*catalog_, *model_, data.splits.val,
                                                   std::vector<std::string>{class_name}, config_.score_workers);
  if (outcome.profiles.empty()) {
    throw CalibrationError("validation split has no items of class '" + class_name + "'");
  }
  return outcome.profiles.front();
}

metrics::ComparisonReport Service::evaluate(std::optional<int> level) {
  return workflow::run_evaluation(*catalog_, *model_, config_, dataset(), detector_.get(),
                                  level.value_or(config_.default_level));
}

nlohmann::json Service::compare_report() const {
  auto doc = catalog_->get_document(workflow::kCompareDocument);
  if (!doc) throw NotFoundError("no comparison report yet; run an evaluation first");
  return *doc;
}

metrics::DensityHistogram Service::density(const std::string& class_name, std::size_t bins,
                                           std::optional<int> level) const {
  require_class(class_name);
  if (bins < 1 || bins > 500) throw ValidationError("bins must be in [1, 500]");
  const int l = level.value_or(config_.default_level);
  calibrator::validate_level(l);
  const auto profile = calibrator::load_profile(*catalog_, class_name);
  if (!profile) throw NotFoundError("class '" + class_name + "' has no calibrated profile");
  const auto samples = calibrator::load_samples(*catalog_, class_name);
  return metrics::density(samples, bins, {profile->fp0, profile->fn0, profile->threshold(l)});
}

Bytes Service::crop_png(const std::string& crop_id) const {
  const auto crop = catalog_->find_crop(crop_id);
  if (!crop) throw NotFoundError("unknown crop '" + crop_id + "'");
  return read_file(catalog_->crop_path(*crop));
}

}  // namespace curator::service
