#pragma once

#include "curator/catalog/types.hpp"
#include "curator/metrics/metrics.hpp"
#include "curator/siamese/dataset.hpp"
#include "curator/siamese/embedder.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace curator::catalog {
class Catalog;
}

namespace curator::siamese {

struct ScoreRequest {
  std::string crop_id;
  std::string against;  // anchor class to compare with
  cv::Mat pixels;
};

/// One DistanceScore per request, in request order. Each anchor is embedded
/// once. Throws ConfigurationError when a requested anchor is missing.
std::vector<catalog::DistanceScore> score(const Embedder& embedder, std::span<const ScoreRequest> requests,
                                          const AnchorImages& anchors, std::size_t workers = 1);

/// Scores catalog crops against `against` (default: each crop's detector
/// class), stores the distances and clears the scored classes' stale flag.
std::vector<catalog::DistanceScore> score_catalog(catalog::Catalog& catalog, const Embedder& embedder,
                                                  std::span<const std::string> crop_ids,
                                                  const std::optional<std::string>& against = std::nullopt,
                                                  std::size_t workers = 1);

/// Distances from every item to every anchor.
struct DistanceTable {
  std::vector<std::string> classes;       // anchor classes, sorted
  std::vector<std::string> item_ids;
  std::vector<std::string> item_classes;
  std::vector<std::vector<double>> d;     // [item][class]

  /// Labeled distances of all items to the anchor of `class_name`.
  std::vector<metrics::LabeledDistance> samples(const std::string& class_name) const;
};

DistanceTable distance_table(const Embedder& embedder, std::span<const LabeledImage> items,
                             const AnchorImages& anchors, std::size_t workers = 1);

/// Mean over anchor classes of average_F1 at each class's best-F1
/// threshold; classes without both labels are skipped. nullopt when no
/// class qualifies.
std::optional<double> macro_average_f1(const DistanceTable& table);

}  // namespace curator::siamese
