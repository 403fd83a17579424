#include "curator/reclassifier/reclassifier.hpp"

#include "curator/catalog/catalog.hpp"
#include "curator/common/errors.hpp"

#include <cmath>
#include <map>

namespace curator::reclassifier {

std::string to_string(Label label) {
  return label == Label::keyword ? "keyword" : "non-keyword";
}

Label decide(Label prior, double distance, double threshold) noexcept {
  if (prior == Label::keyword && distance > threshold) return Label::non_keyword;
  if (prior == Label::non_keyword && distance < threshold) return Label::keyword;
  return prior;
}

Label detector_prior(const catalog::CropRecord& crop, const std::string& class_name) {
  return crop.detector_class == class_name ? Label::keyword : Label::non_keyword;
}

Report plan(const catalog::ClassSpace& space, std::span<const catalog::CropRecord> crops,
            std::span<const catalog::DistanceScore> scores, double threshold) {
  std::map<std::string, const catalog::CropRecord*> by_id;
  for (const auto& crop : crops) by_id[crop.id] = &crop;

  Report report;
  report.class_name = space.class_name;
  report.threshold = threshold;
  for (const auto& score : scores) {
    const bool in_keyword = space.keyword_members.count(score.crop_id) > 0;
    const bool in_other = space.non_keyword_members.count(score.crop_id) > 0;
    auto it = by_id.find(score.crop_id);
    if ((!in_keyword && !in_other) || it == by_id.end()) {
      throw ContractError("crop " + score.crop_id + " is not in the " + space.class_name + " space");
    }
    if (score.class_name != space.class_name) {
      throw ContractError("crop " + score.crop_id + " was scored against " + score.class_name +
                          ", not " + space.class_name);
    }
    if (!std::isfinite(score.distance) || score.distance < 0.0) {
      throw ContractError("invalid distance for crop " + score.crop_id);
    }
    Decision d;
    d.crop_id = score.crop_id;
    d.prior = detector_prior(*it->second, space.class_name);
    d.distance = score.distance;
    d.threshold = threshold;
    d.final = decide(d.prior, d.distance, threshold);
    if (d.final == Label::keyword && !in_keyword) {
      report.moved_in.push_back(d.crop_id);
    } else if (d.final == Label::non_keyword && in_keyword) {
      report.moved_out.push_back(d.crop_id);
    } else {
      ++report.unchanged_count;
    }
    report.decisions.push_back(std::move(d));
  }
  return report;
}

Report apply(catalog::Catalog& catalog, const std::string& class_name,
             std::span<const catalog::DistanceScore> scores, double threshold,
             std::optional<int> level) {
  const catalog::ClassSpace space = catalog.class_space(class_name);
  std::vector<catalog::CropRecord> crops;
  for (const auto& score : scores) {
    if (auto crop = catalog.find_crop(score.crop_id)) crops.push_back(std::move(*crop));
  }
  Report report = plan(space, crops, scores, threshold);
  report.level = level;

  std::vector<catalog::Catalog::Move> moves;
  for (const auto& id : report.moved_in) moves.push_back({id, catalog::Space::keyword});
  for (const auto& id : report.moved_out) moves.push_back({id, catalog::Space::non_keyword});
  catalog.assign_spaces(class_name, moves);
  catalog.put_document(report_document(class_name), to_json(report));
  return report;
}

nlohmann::json to_json(const Report& report) {
  return {{"class", report.class_name},
          {"threshold", report.threshold},
          {"level", report.level ? nlohmann::json(*report.level) : nlohmann::json(nullptr)},
          {"moved_in", report.moved_in},
          {"moved_out", report.moved_out},
          {"unchanged_count", report.unchanged_count}};
}

std::string report_document(const std::string& class_name) {
  return "reports/reclassify/" + class_name + ".json";
}

}  // namespace curator::reclassifier
