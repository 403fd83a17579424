#include "curator/calibrator/calibrator.hpp"

#include "curator/catalog/catalog.hpp"
#include "curator/common/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace curator::calibrator {

namespace {

void require_keyword(std::span<const LabeledDistance> samples) {
  for (const auto& s : samples) {
    if (!std::isfinite(s.distance)) {
      throw CalibrationError("calibration distances must be finite");
    }
  }
  if (std::none_of(samples.begin(), samples.end(), [](const auto& s) { return s.is_keyword; })) {
    throw CalibrationError("calibration needs at least one keyword sample");
  }
}

}  // namespace

ConfusionCounts confusion_at(std::span<const LabeledDistance> samples, double threshold) {
  ConfusionCounts c;
  for (const auto& s : samples) {
    const bool predicted = s.distance <= threshold;
    if (predicted) {
      ++(s.is_keyword ? c.tp : c.fp);
    } else {
      ++(s.is_keyword ? c.fn : c.tn);
    }
  }
  return c;
}

Fp0Threshold fp0_threshold(std::span<const LabeledDistance> samples, double epsilon) {
  require_keyword(samples);
  double min_negative = std::numeric_limits<double>::infinity();
  double min_positive = std::numeric_limits<double>::infinity();
  for (const auto& s : samples) {
    if (s.is_keyword) {
      min_positive = std::min(min_positive, s.distance);
    } else {
      min_negative = std::min(min_negative, s.distance);
    }
  }
  std::optional<double> best;
  for (const auto& s : samples) {
    if (s.is_keyword && s.distance < min_negative && (!best || s.distance > *best)) {
      best = s.distance;
    }
  }
  if (best) {
    return {*best, false};
  }
  return {min_positive - epsilon, true};
}

double fn0_threshold(std::span<const LabeledDistance> samples) {
  require_keyword(samples);
  double max_positive = -std::numeric_limits<double>::infinity();
  for (const auto& s : samples) {
    if (s.is_keyword) max_positive = std::max(max_positive, s.distance);
  }
  return max_positive;
}

double Ladder::at(int level) const {
  validate_level(level);
  return thresholds[static_cast<std::size_t>(level - 1)];
}

Ladder build_ladder(double fp0, double fn0) {
  Ladder ladder;
  if (fp0 > fn0) {
    ladder.thresholds.fill(fn0);
    ladder.degenerate = true;
    return ladder;
  }
  for (int level = kMinLevel; level <= kMaxLevel; ++level) {
    ladder.thresholds[static_cast<std::size_t>(level - 1)] =
        fn0 + (fp0 - fn0) * static_cast<double>(level - 1) / 4.0;
  }
  // Pin the endpoints exactly.
  ladder.thresholds.front() = fn0;
  ladder.thresholds.back() = fp0;
  return ladder;
}

double best_f1_threshold(std::span<const LabeledDistance> samples) {
  require_keyword(samples);
  if (std::all_of(samples.begin(), samples.end(), [](const auto& s) { return s.is_keyword; })) {
    throw CalibrationError("best-F1 calibration needs both keyword and non-keyword samples");
  }
  std::vector<LabeledDistance> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.distance < b.distance; });

  ConfusionCounts c;
  for (const auto& s : sorted) ++(s.is_keyword ? c.fn : c.tn);

  // F1 = 2TP / (2TP + FP + FN), compared as exact fractions so that equal
  // scores reached through different counts tie exactly.
  double best_t = sorted.front().distance;
  std::uint64_t best_num = 0;
  std::uint64_t best_den = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    const double t = sorted[i].distance;
    // Admit every sample at this distance before evaluating.
    for (; i < sorted.size() && sorted[i].distance == t; ++i) {
      if (sorted[i].is_keyword) {
        --c.fn;
        ++c.tp;
      } else {
        --c.tn;
        ++c.fp;
      }
    }
    const std::uint64_t num = 2 * c.tp;
    const std::uint64_t den = 2 * c.tp + c.fp + c.fn;
    const bool better = best_den == 0 || num * best_den >
                                             best_num * den;
    if (better) {
      best_num = num;
      best_den = den;
      best_t = t;
    }
  }
  return best_t;
}

void validate_level(int level) {
  if (level < kMinLevel || level > kMaxLevel) {
    throw ValidationError("reality level must be in [1, 5], got " + std::to_string(level));
  }
}

bool ThresholdProfile::operator==(const ThresholdProfile& other) const {
  return class_name == other.class_name && fp0 == other.fp0 && fn0 == other.fn0 &&
         ladder.thresholds == other.ladder.thresholds && ladder.degenerate == other.ladder.degenerate &&
         degenerate == other.degenerate && sample_count == other.sample_count;
}

ThresholdProfile calibrate(const std::string& class_name, std::span<const LabeledDistance> samples) {
  const Fp0Threshold fp0 = fp0_threshold(samples);
  const double fn0 = fn0_threshold(samples);
  ThresholdProfile profile;
  profile.class_name = class_name;
  profile.fp0 = fp0.threshold;
  profile.fn0 = fn0;
  profile.ladder = build_ladder(profile.fp0, profile.fn0);
  profile.degenerate = fp0.degenerate || profile.ladder.degenerate;
  profile.sample_count = samples.size();
  return profile;
}

ThresholdProfile mean_profile(std::span<const ThresholdProfile> profiles, const std::string& name) {
  if (profiles.empty()) {
    throw CalibrationError("no profiles to average");
  }
  ThresholdProfile mean;
  mean.class_name = name;
  for (const auto& p : profiles) {
    mean.fp0 += p.fp0;
    mean.fn0 += p.fn0;
    mean.degenerate = mean.degenerate || p.degenerate;
    mean.sample_count += p.sample_count;
  }
  mean.fp0 /= static_cast<double>(profiles.size());
  mean.fn0 /= static_cast<double>(profiles.size());
  mean.ladder = build_ladder(mean.fp0, mean.fn0);
  mean.degenerate = mean.degenerate || mean.ladder.degenerate;
  return mean;
}

nlohmann::json to_json(const ThresholdProfile& p) {
  nlohmann::json ladder = nlohmann::json::object();
  for (int level = kMinLevel; level <= kMaxLevel; ++level) {
    ladder[std::to_string(level)] = p.ladder.at(level);
  }
  return {{"class", p.class_name},       {"fp0", p.fp0},
          {"fn0", p.fn0},                {"ladder", ladder},
          {"degenerate", p.degenerate},  {"sample_count", p.sample_count}};
}

ThresholdProfile profile_from_json(const nlohmann::json& j) {
  ThresholdProfile p;
  p.class_name = j.at("class").get<std::string>();
  p.fp0 = j.at("fp0").get<double>();
  p.fn0 = j.at("fn0").get<double>();
  for (int level = kMinLevel; level <= kMaxLevel; ++level) {
    p.ladder.thresholds[static_cast<std::size_t>(level - 1)] =
        j.at("ladder").at(std::to_string(level)).get<double>();
  }
  p.ladder.degenerate = p.fp0 > p.fn0;
  p.degenerate = j.at("degenerate").get<bool>();
  p.sample_count = j.at("sample_count").get<std::size_t>();
  return p;
}

std::string profile_document(const std::string& class_name) {
  return "profiles/" + class_name + ".json";
}

void save_profile(catalog::Catalog& catalog, const ThresholdProfile& profile,
                  std::span<const LabeledDistance> samples) {
  nlohmann::json s = nlohmann::json::array();
  for (const auto& x : samples) {
    s.push_back({{"distance", x.distance}, {"is_keyword", x.is_keyword}});
  }
  catalog.put_document("profiles/" + profile.class_name + ".samples.json", s);
  catalog.put_document(profile_document(profile.class_name), to_json(profile));
  if (catalog.has_class(profile.class_name)) {
    catalog.mark_profile_fresh(profile.class_name);
  }
}

std::optional<ThresholdProfile> load_profile(const catalog::Catalog& catalog,
                                             const std::string& class_name) {
  const auto doc = catalog.get_document(profile_document(class_name));
  if (!doc) return std::nullopt;
  return profile_from_json(*doc);
}

std::vector<LabeledDistance> load_samples(const catalog::Catalog& catalog,
                                          const std::string& class_name) {
  std::vector<LabeledDistance> out;
  if (const auto doc = catalog.get_document("profiles/" + class_name + ".samples.json")) {
    for (const auto& x : *doc) {
      out.push_back({x.at("distance").get<double>(), x.at("is_keyword").get<bool>()});
    }
  }
  return out;
}

}  // namespace curator::calibrator
