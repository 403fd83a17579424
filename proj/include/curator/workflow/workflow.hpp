#pragma once

#include "curator/calibrator/calibrator.hpp"
#include "curator/metrics/metrics.hpp"
#include "curator/siamese/dataset.hpp"
#include "curator/siamese/scoring.hpp"
#include "curator/siamese/trainer.hpp"
#include "curator/workflow/config.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace curator::catalog {
class Catalog;
}
namespace curator::detector {
class DetectorBackend;
}

namespace curator::workflow {

struct Dataset {
  siamese::Splits splits;
  siamese::AnchorImages anchors;
};

/// Loads and splits the labeled corpus. Throws ConfigurationError when the
/// config has no data section.
Dataset load_dataset(const ServiceConfig& config);

/// Anchors currently stored in the catalog.
siamese::AnchorImages catalog_anchors(const catalog::Catalog& catalog);

/// Stores each given anchor whose class has none yet; returns the classes
/// that were installed.
std::vector<std::string> install_missing_anchors(catalog::Catalog& catalog, const siamese::AnchorImages& anchors);

/// Trains on the train split, validates on the val split, then writes the
/// selected epoch's checkpoint and (if configured) the history CSV.
siamese::TrainResult run_training(const ServiceConfig& config, const Dataset& dataset,
                                  const siamese::EpochCallback& on_epoch = {});

/// Loads the configured checkpoint; throws ConfigurationError naming the
/// path when it is missing.
siamese::Embedder load_model(const ServiceConfig& config);

struct CalibrationOutcome {
  std::vector<calibrator::ThresholdProfile> profiles;
  std::vector<std::string> skipped;  // classes with no keyword sample
  std::optional<calibrator::ThresholdProfile> global;
};

/// Calibrates every class in `classes` (default: every catalog anchor)
/// against the catalog anchors using labeled `items`, and stores the
/// profiles. The mean profile is stored as "global".
CalibrationOutcome calibrate_classes(catalog::Catalog& catalog, const siamese::Embedder& embedder,
                                     std::span<const siamese::LabeledImage> items,
                                     std::optional<std::vector<std::string>> classes = std::nullopt,
                                     std::size_t workers = 1);

/// item id -> class reported by the detector for the same object, or ""
/// when the detector missed it. Objects are matched to detections by IoU
/// >= 0.5; ids follow load_annotated (`<stem>#<k>` or `<stem>`).
std::map<std::string, std::string> detector_labels(const detector::DetectorBackend& backend,
                                                   const std::filesystem::path& dir, bool crop_objects);

/// Per-class keyword decisions of each method over a labeled item set:
///   detector             detector class == C
///   detector+classifier  nearest anchor == C (the detector's crop, relabeled)
///   detector+siamese     reclassifier decision with the detector prior
///   siamese              distance <= threshold, no prior
/// The detector methods are included only when `detector` is given. Every
/// anchor class needs a threshold.
metrics::ComparisonReport compare(const siamese::DistanceTable& table,
                                  const std::map<std::string, double>& thresholds,
                                  const std::map<std::string, std::string>* detector = nullptr);

/// Level-L thresholds from the stored profiles of every anchor class.
/// Throws NotReadyError naming the first class without a profile.
std::map<std::string, double> profile_thresholds(const catalog::Catalog& catalog,
                                                 const std::vector<std::string>& classes, int level);

/// Document path of the stored comparison report.
inline constexpr const char* kCompareDocument = "reports/compare.json";

/// Scores the test split against the catalog anchors, compares all methods
/// at `level` and stores the report document.
metrics::ComparisonReport run_evaluation(catalog::Catalog& catalog, const siamese::Embedder& embedder,
                                         const ServiceConfig& config, const Dataset& dataset,
                                         const detector::DetectorBackend* backend, int level);

}  // namespace curator::workflow
