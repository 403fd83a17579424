#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace curator::siamese {

/// A training pair: item index into the split, anchor class and similarity
/// label (1 = same class).
struct PairSample {
  std::size_t item = 0;
  std::string anchor_class;
  int y = 1;

  bool operator==(const PairSample&) const = default;
};

/// Converts a 0/1 distance target (0 = keyword) to the similarity label.
int similarity_from_distance_target(int target);

/// One similar pair per item plus round(negative_ratio * items) dissimilar
/// pairs cycling through the items, each against a uniformly drawn
/// wrong-class anchor; shuffled under `seed`. Throws ConfigurationError when
/// an item's class has no anchor, or when dissimilar pairs are requested
/// with fewer than two anchored classes.
std::vector<PairSample> sample_pairs(std::span<const std::string> item_classes,
                                     const std::set<std::string>& anchor_classes, double negative_ratio,
                                     std::uint64_t seed);

}  // namespace curator::siamese
