#pragma once

#include "curator/metrics/metrics.hpp"

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace curator::catalog {
class Catalog;
}

/// Distance-threshold calibration. A sample is predicted keyword iff its
/// distance is <= t, so ties classify as keyword.
namespace curator::calibrator {

using metrics::ConfusionCounts;
using metrics::LabeledDistance;

inline constexpr double kDegenerateEpsilon = 1e-6;
inline constexpr int kMinLevel = 1;
inline constexpr int kMaxLevel = 5;

ConfusionCounts confusion_at(std::span<const LabeledDistance> samples, double threshold);

struct Fp0Threshold {
  double threshold = 0.0;
  bool degenerate = false;  // no FP-free threshold captures a keyword sample
};

/// Largest keyword distance strictly below every non-keyword distance. When
/// no keyword distance qualifies, falls back to min(keyword) - epsilon and
/// flags the result degenerate. Throws CalibrationError without keyword
/// samples.
Fp0Threshold fp0_threshold(std::span<const LabeledDistance> samples,
                           double epsilon = kDegenerateEpsilon);

/// Maximum keyword distance. Throws CalibrationError without keyword samples.
double fn0_threshold(std::span<const LabeledDistance> samples);

/// Reality-level ladder, level 1 loosest (fn0) to level 5 strictest (fp0),
/// linearly spaced.
struct Ladder {
  std::array<double, 5> thresholds{};
  bool degenerate = false;  // fp0 > fn0: collapsed to fn0 at every level

  double at(int level) const;
};

Ladder build_ladder(double fp0, double fn0);

/// Observed distance maximizing F1; ties resolve to the smaller threshold.
/// Throws CalibrationError unless both labels are present.
double best_f1_threshold(std::span<const LabeledDistance> samples);

/// Throws ValidationError outside [1, 5].
void validate_level(int level);

struct ThresholdProfile {
  std::string class_name;
  double fp0 = 0.0;
  double fn0 = 0.0;
  Ladder ladder;
  bool degenerate = false;
  std::size_t sample_count = 0;

  double threshold(int level) const { return ladder.at(level); }
  bool operator==(const ThresholdProfile& other) const;
};

ThresholdProfile calibrate(const std::string& class_name, std::span<const LabeledDistance> samples);

/// Mean of per-class profiles, used when a class-independent threshold is
/// wanted. Throws CalibrationError for an empty input.
ThresholdProfile mean_profile(std::span<const ThresholdProfile> profiles,
                              const std::string& name = "global");

nlohmann::json to_json(const ThresholdProfile& profile);
ThresholdProfile profile_from_json(const nlohmann::json& j);

// Persistence as catalog documents: profiles/<class>.json, plus the
// calibration samples for density plots in profiles/<class>.samples.json.
std::string profile_document(const std::string& class_name);
void save_profile(catalog::Catalog& catalog, const ThresholdProfile& profile,
                  std::span<const LabeledDistance> samples);
std::optional<ThresholdProfile> load_profile(const catalog::Catalog& catalog,
                                             const std::string& class_name);
std::vector<LabeledDistance> load_samples(const catalog::Catalog& catalog,
                                          const std::string& class_name);

}  // namespace curator::calibrator
