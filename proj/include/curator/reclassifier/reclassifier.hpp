#pragma once

#include "curator/catalog/types.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace curator::catalog {
class Catalog;
}

namespace curator::reclassifier {

enum class Label { keyword, non_keyword };

std::string to_string(Label label);

/// Keyword prior with distance > threshold becomes non-keyword; non-keyword
/// prior with distance < threshold becomes keyword. Equality keeps the prior.
Label decide(Label prior, double distance, double threshold) noexcept;

/// Detector-stage label of a crop with respect to `class_name`.
Label detector_prior(const catalog::CropRecord& crop, const std::string& class_name);

struct Decision {
  std::string crop_id;
  Label prior = Label::keyword;
  double distance = 0.0;
  double threshold = 0.0;
  Label final = Label::keyword;

  bool changed() const noexcept { return final != prior; }
};

struct Report {
  std::string class_name;
  double threshold = 0.0;
  std::optional<int> level;
  std::vector<std::string> moved_in;   // entered the keyword space
  std::vector<std::string> moved_out;  // left the keyword space
  std::size_t unchanged_count = 0;
  std::vector<Decision> decisions;
};

/// Computes decisions and membership moves for one class space without
/// touching the catalog. Priors come from the detector stage; moves are
/// measured against current membership. Throws ContractError if a score
/// names a crop outside the space or a different class.
Report plan(const catalog::ClassSpace& space, std::span<const catalog::CropRecord> crops,
            std::span<const catalog::DistanceScore> scores, double threshold);

/// plan() followed by one all-or-nothing membership update, persisting the
/// report at reports/reclassify/<class>.json.
Report apply(catalog::Catalog& catalog, const std::string& class_name,
             std::span<const catalog::DistanceScore> scores, double threshold,
             std::optional<int> level = std::nullopt);

nlohmann::json to_json(const Report& report);

std::string report_document(const std::string& class_name);

}  // namespace curator::reclassifier
