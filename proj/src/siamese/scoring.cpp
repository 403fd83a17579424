#include "curator/siamese/scoring.hpp"

#include "curator/calibrator/calibrator.hpp"
#include "curator/catalog/catalog.hpp"
#include "curator/common/errors.hpp"
#include "curator/common/parallel.hpp"

#include <set>

namespace curator::siamese {

namespace {

std::map<std::string, Embedding> embed_anchors(const Embedder& embedder, const AnchorImages& anchors,
                                               const std::set<std::string>& wanted) {
  std::map<std::string, Embedding> out;
  for (const auto& cls : wanted) {
    auto it = anchors.find(cls);
    if (it == anchors.end()) {
      throw ConfigurationError("no anchor for class '" + cls + "'");
    }
    out[cls] = embedder.embed(it->second);
  }
  return out;
}

}  // namespace

std::vector<catalog::DistanceScore> score(const Embedder& embedder, std::span<const ScoreRequest> requests,
                                          const AnchorImages& anchors, std::size_t workers) {
  std::set<std::string> wanted;
  for (const auto& r : requests) wanted.insert(r.against);
  const auto anchor_embeddings = embed_anchors(embedder, anchors, wanted);

  std::vector<catalog::DistanceScore> out(requests.size());
  parallel_for(requests.size(), workers, [&](std::size_t i) {
    const auto& r = requests[i];
    out[i] = {r.crop_id, r.against, distance(embedder.embed(r.pixels), anchor_embeddings.at(r.against))};
  });
  return out;
}

std::vector<catalog::DistanceScore> score_catalog(catalog::Catalog& catalog, const Embedder& embedder,
                                                  std::span<const std::string> crop_ids,
                                                  const std::optional<std::string>& against,
                                                  std::size_t workers) {
  std::vector<ScoreRequest> requests;
  std::set<std::string> classes;
  for (const auto& id : crop_ids) {
    const auto crop = catalog.find_crop(id);
    if (!crop) throw NotFoundError("unknown crop " + id);
    const std::string cls = against.value_or(crop->detector_class);
    classes.insert(cls);
    requests.push_back({id, cls, catalog.load_crop_pixels(id)});
  }
  AnchorImages anchors;
  for (const auto& cls : classes) {
    if (!catalog.anchor_state(cls)) {
      throw ConfigurationError("no anchor for class '" + cls + "'");
    }
    anchors[cls] = catalog.load_anchor(cls);
  }
  auto scores = score(embedder, requests, anchors, workers);
  std::vector<std::pair<std::string, double>> distances;
  for (const auto& s : scores) distances.emplace_back(s.crop_id, s.distance);
  catalog.set_distances(distances);
  for (const auto& cls : classes) catalog.mark_scores_fresh(cls);
  return scores;
}

std::vector<metrics::LabeledDistance> DistanceTable::samples(const std::string& class_name) const {
  const auto it = std::find(classes.begin(), classes.end(), class_name);
  if (it == classes.end()) {
    throw NotFoundError("no anchor class '" + class_name + "' in the distance table");
  }
  const auto c = static_cast<std::size_t>(it - classes.begin());
  std::vector<metrics::LabeledDistance> out;
  out.reserve(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) out.push_back({d[i][c], item_classes[i] == class_name});
  return out;
}

DistanceTable distance_table(const Embedder& embedder, std::span<const LabeledImage> items,
                             const AnchorImages& anchors, std::size_t workers) {
  DistanceTable table;
  std::set<std::string> wanted;
  for (const auto& [cls, image] : anchors) wanted.insert(cls);
  const auto anchor_embeddings = embed_anchors(embedder, anchors, wanted);
  table.classes.assign(wanted.begin(), wanted.end());
  table.item_ids.resize(items.size());
  table.item_classes.resize(items.size());
  table.d.assign(items.size(), std::vector<double>(table.classes.size()));
  parallel_for(items.size(), workers, [&](std::size_t i) {
    const Embedding e = embedder.embed(items[i].pixels);
    table.item_ids[i] = items[i].id;
    table.item_classes[i] = items[i].class_name;
    for (std::size_t c = 0; c < table.classes.size(); ++c) {
      table.d[i][c] = distance(e, anchor_embeddings.at(table.classes[c]));
    }
  });
  return table;
}

std::optional<double> macro_average_f1(const DistanceTable& table) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& cls : table.classes) {
    const auto s = table.samples(cls);
    const bool has_pos = std::any_of(s.begin(), s.end(), [](const auto& x) { return x.is_keyword; });
    const bool has_neg = std::any_of(s.begin(), s.end(), [](const auto& x) { return !x.is_keyword; });
    if (!has_pos || !has_neg) continue;
    const double t = calibrator::best_f1_threshold(s);
    if (const auto f = metrics::average_f1(calibrator::confusion_at(s, t))) {
      sum += *f;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

}  // namespace curator::siamese
