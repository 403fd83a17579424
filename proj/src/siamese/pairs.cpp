#include "curator/siamese/pairs.hpp"

#include "curator/common/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace curator::siamese {

int similarity_from_distance_target(int target) {
  if (target != 0 && target != 1) {
    throw ContractError("distance target must be 0 or 1");
  }
  return 1 - target;
}

std::vector<PairSample> sample_pairs(std::span<const std::string> item_classes,
                                     const std::set<std::string>& anchor_classes, double negative_ratio,
                                     std::uint64_t seed) {
  if (!(negative_ratio >= 0.0) || !std::isfinite(negative_ratio)) {
    throw ConfigurationError("negative_ratio must be a non-negative number");
  }
  for (const auto& cls : item_classes) {
    if (!anchor_classes.count(cls)) {
      throw ConfigurationError("class '" + cls + "' has no anchor");
    }
  }
  std::vector<PairSample> pairs;
  const std::size_t n = item_classes.size();
  const auto n_neg = static_cast<std::size_t>(std::llround(negative_ratio * static_cast<double>(n)));
  if (n_neg > 0 && anchor_classes.size() < 2) {
    throw ConfigurationError("dissimilar pairs need at least two anchored classes");
  }
  pairs.reserve(n + n_neg);
  for (std::size_t i = 0; i < n; ++i) pairs.push_back({i, item_classes[i], 1});

  const std::vector<std::string> classes(anchor_classes.begin(), anchor_classes.end());
  std::mt19937_64 rng(seed);
  for (std::size_t k = 0; k < n_neg; ++k) {
    const std::size_t item = k % n;
    // Draw among the other classes: skip the item's own slot.
    const auto own = static_cast<std::size_t>(
        std::find(classes.begin(), classes.end(), item_classes[item]) - classes.begin());
    std::size_t pick = rng() % (classes.size() - 1);
    if (pick >= own) ++pick;
    pairs.push_back({item, classes[pick], 0});
  }
  for (std::size_t i = pairs.size(); i > 1; --i) {
    std::swap(pairs[i - 1], pairs[rng() % i]);
  }
  return pairs;
}

}  // namespace curator::siamese
