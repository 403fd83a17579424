#include "curator/workflow/workflow.hpp"

#include "curator/catalog/annotations.hpp"
#include "curator/catalog/catalog.hpp"
#include "curator/common/errors.hpp"
#include "curator/common/hash.hpp"
#include "curator/common/image_io.hpp"
#include "curator/detector/detector.hpp"
#include "curator/reclassifier/reclassifier.hpp"

#include <algorithm>

namespace curator::workflow {

namespace fs = std::filesystem;

Dataset load_dataset(const ServiceConfig& config) {
  if (!config.data) {
    throw ConfigurationError("config has no \"data\" section with a labeled corpus");
  }
  const DataConfig& d = *config.data;
  Dataset out;
  try {
    out.splits = siamese::split(siamese::load_annotated(d.dir, d.crop), d.train_fraction, d.val_fraction, d.seed);
  } catch (const IngestionError& e) {
    throw ConfigurationError(e.what());
  }
  out.anchors = siamese::load_anchor_dir(d.anchors);
  return out;
}

siamese::AnchorImages catalog_anchors(const catalog::Catalog& catalog) {
  siamese::AnchorImages out;
  for (const auto& [cls, path] : catalog.anchors().entries) out[cls] = catalog.load_anchor(cls);
  return out;
}

std::vector<std::string> install_missing_anchors(catalog::Catalog& catalog, const siamese::AnchorImages& anchors) {
  std::vector<std::string> installed;
  const auto existing = catalog.anchors();
  for (const auto& [cls, pixels] : anchors) {
    if (existing.contains(cls) || !catalog.has_class(cls)) continue;
    catalog.set_anchor(cls, encode_png(pixels));
    installed.push_back(cls);
  }
  return installed;
}

siamese::TrainResult run_training(const ServiceConfig& config, const Dataset& dataset,
                                  const siamese::EpochCallback& on_epoch) {
  auto result = siamese::train(dataset.splits.train, dataset.splits.val, dataset.anchors, config.embedder,
                               config.training, on_epoch);
  siamese::CheckpointMeta meta;
  meta.config = config.embedder;
  meta.seed = config.training.seed;
  meta.epoch = result.best_epoch;
  meta.val_average_f1 = result.best_val_average_f1;
  if (config.checkpoint.has_parent_path()) fs::create_directories(config.checkpoint.parent_path());
  siamese::save_checkpoint(config.checkpoint, result.model, meta);
  if (config.history) {
    if (config.history->has_parent_path()) fs::create_directories(config.history->parent_path());
    write_file_atomic(*config.history, siamese::history_csv(result.history));
  }
  return result;
}

siamese::Embedder load_model(const ServiceConfig& config) {
  if (!fs::exists(config.checkpoint)) {
    throw ConfigurationError("checkpoint not found: " + config.checkpoint.string());
  }
  try {
    return siamese::load_checkpoint(config.checkpoint);
  } catch (const IoError& e) {
    throw ConfigurationError("cannot load checkpoint " + config.checkpoint.string() + ": " + e.what());
  }
}

CalibrationOutcome calibrate_classes(catalog::Catalog& catalog, const siamese::Embedder& embedder,
                                     std::span<const siamese::LabeledImage> items,
                                     std::optional<std::vector<std::string>> classes, std::size_t workers) {
  siamese::AnchorImages anchors = catalog_anchors(catalog);
  if (classes) {
    siamese::AnchorImages selected;
    for (const auto& cls : *classes) {
      auto it = anchors.find(cls);
      if (it == anchors.end()) throw NotReadyError("class '" + cls + "' has no anchor");
      selected.insert(*it);
    }
    anchors = std::move(selected);
  }
  CalibrationOutcome out;
  if (anchors.empty()) return out;
  const auto table = siamese::distance_table(embedder, items, anchors, workers);
  for (const auto& cls : table.classes) {
    const auto samples = table.samples(cls);
    if (std::none_of(samples.begin(), samples.end(), [](const auto& s) { return s.is_keyword; })) {
      out.skipped.push_back(cls);
      continue;
    }
    auto profile = calibrator::calibrate(cls, samples);
    calibrator::save_profile(catalog, profile, samples);
    out.profiles.push_back(std::move(profile));
  }
  if (!out.profiles.empty() && !classes) {
    out.global = calibrator::mean_profile(out.profiles);
    catalog.put_document(calibrator::profile_document(out.global->class_name), calibrator::to_json(*out.global));
  }
  return out;
}

namespace {

double iou(const catalog::BBox& a, const catalog::BBox& b) {
  const int ix = std::max(0, std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min));
  const int iy = std::max(0, std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min));
  const double inter = static_cast<double>(ix) * iy;
  const double uni = static_cast<double>(a.width()) * a.height() + static_cast<double>(b.width()) * b.height() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

}  // namespace

std::map<std::string, std::string> detector_labels(const detector::DetectorBackend& backend, const fs::path& dir,
                                                   bool crop_objects) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && has_image_extension(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  std::map<std::string, std::string> out;
  for (const auto& file : files) {
    fs::path sidecar = file;
    sidecar.replace_extension(".txt");
    if (!fs::exists(sidecar)) continue;
    const auto objects = catalog::read_annotations(sidecar);
    if (objects.empty()) continue;
    const Bytes bytes = read_file(file);
    const cv::Mat pixels = decode_image(bytes);
    if (pixels.empty()) continue;
    catalog::ImageRecord record;
    record.id = content_id(bytes);
    record.origin_uri = fs::absolute(file).string();
    record.width = pixels.cols;
    record.height = pixels.rows;
    std::vector<detector::Detection> found;
    for (auto& d : backend.run(record, pixels)) {
      if (d.confidence >= backend.confidence_floor()) found.push_back(std::move(d));
    }

    auto label_of = [&](const catalog::BBox& box) {
      double best = 0.5;
      std::string cls;
      for (const auto& d : found) {
        const double v = iou(box, d.box);
        if (v >= best) {
          best = v;
          cls = d.class_name;
        }
      }
      return cls;
    };
    const std::string stem = file.stem().string();
    if (crop_objects) {
      for (std::size_t k = 0; k < objects.size(); ++k) out[stem + "#" + std::to_string(k)] = label_of(objects[k].box);
    } else {
      const auto largest = std::max_element(objects.begin(), objects.end(), [](const auto& a, const auto& b) {
        return a.box.width() * a.box.height() < b.box.width() * b.box.height();
      });
      out[stem] = label_of(largest->box);
    }
  }
  return out;
}

metrics::ComparisonReport compare(const siamese::DistanceTable& table, const std::map<std::string, double>& thresholds,
                                  const std::map<std::string, std::string>* detector) {
  metrics::ClassLabels truth;
  metrics::MethodDecisions det{"detector", {}};
  metrics::MethodDecisions cls_method{"detector+classifier", {}};
  metrics::MethodDecisions siam_prior{"detector+siamese", {}};
  metrics::MethodDecisions siam{"siamese", {}};

  std::vector<std::string> nearest(table.item_ids.size());
  for (std::size_t i = 0; i < table.item_ids.size(); ++i) {
    const auto& row = table.d[i];
    nearest[i] = table.classes[std::min_element(row.begin(), row.end()) - row.begin()];
  }

  for (std::size_t c = 0; c < table.classes.size(); ++c) {
    const std::string& cls = table.classes[c];
    auto t = thresholds.find(cls);
    if (t == thresholds.end()) throw ContractError("no threshold for class '" + cls + "'");
    auto& truth_c = truth[cls];
    for (std::size_t i = 0; i < table.item_ids.size(); ++i) {
      const std::string& id = table.item_ids[i];
      truth_c[id] = table.item_classes[i] == cls;
      const double d = table.d[i][c];
      siam.predictions[cls][id] = d <= t->second;
      if (!detector) continue;
      auto it = detector->find(id);
      if (it == detector->end()) throw ContractError("no detector label for item '" + id + "'");
      const bool detected = !it->second.empty();
      const bool prior = it->second == cls;
      det.predictions[cls][id] = prior;
      // A missed object has no crop to relabel.
      cls_method.predictions[cls][id] = detected && nearest[i] == cls;
      siam_prior.predictions[cls][id] =
          detected && reclassifier::decide(prior ? reclassifier::Label::keyword : reclassifier::Label::non_keyword, d,
                                           t->second) == reclassifier::Label::keyword;
    }
  }
  std::vector<metrics::MethodDecisions> methods;
  if (detector) {
    methods.push_back(std::move(det));
    methods.push_back(std::move(cls_method));
    methods.push_back(std::move(siam_prior));
  }
  methods.push_back(std::move(siam));
  return metrics::compare_methods(methods, truth);
}

std::map<std::string, double> profile_thresholds(const catalog::Catalog& catalog,
                                                 const std::vector<std::string>& classes, int level) {
  calibrator::validate_level(level);
  std::map<std::string, double> out;
  for (const auto& cls : classes) {
    const auto profile = calibrator::load_profile(catalog, cls);
    if (!profile) throw NotReadyError("class '" + cls + "' has no calibrated profile");
    out[cls] = profile->threshold(level);
  }
  return out;
}

metrics::ComparisonReport run_evaluation(catalog::Catalog& catalog, const siamese::Embedder& embedder,
                                         const ServiceConfig& config, const Dataset& dataset,
                                         const detector::DetectorBackend* backend, int level) {
  const auto anchors = catalog_anchors(catalog);
  if (anchors.empty()) throw NotReadyError("catalog has no anchors");
  const auto table = siamese::distance_table(embedder, dataset.splits.test, anchors, config.score_workers);
  const auto thresholds = profile_thresholds(catalog, table.classes, level);
  std::optional<std::map<std::string, std::string>> labels;
  if (backend && config.data) labels = detector_labels(*backend, config.data->dir, config.data->crop);
  auto report = compare(table, thresholds, labels ? &*labels : nullptr);
  nlohmann::json doc = report.to_json();
  doc["level"] = level;
  doc["items"] = table.item_ids.size();
  doc["generated_at"] = utc_timestamp();
  catalog.put_document(kCompareDocument, doc);
  return report;
}

}  // namespace curator::workflow
