#include "curator/siamese/dataset.hpp"

#include "curator/catalog/annotations.hpp"
#include "curator/common/errors.hpp"
#include "curator/common/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace curator::siamese {

namespace fs = std::filesystem;

std::vector<LabeledImage> load_annotated(const fs::path& dir, bool crop_objects) {
  if (!fs::is_directory(dir)) {
    throw IngestionError("dataset directory does not exist: " + dir.string());
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && has_image_extension(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  std::vector<LabeledImage> items;
  for (const auto& file : files) {
    fs::path sidecar = file;
    sidecar.replace_extension(".txt");
    if (!fs::exists(sidecar)) continue;
    const auto objects = catalog::read_annotations(sidecar);
    if (objects.empty()) continue;
    const cv::Mat image = load_image(file);
    if (image.empty()) continue;
    const std::string stem = file.stem().string();
    if (crop_objects) {
      for (std::size_t k = 0; k < objects.size(); ++k) {
        const catalog::BBox box = objects[k].box.clamped(image.cols, image.rows);
        if (!box.well_ordered()) continue;
        items.push_back({stem + "#" + std::to_string(k), objects[k].class_name,
                         image(cv::Rect(box.x_min, box.y_min, box.width(), box.height())).clone()});
      }
    } else {
      const auto largest = std::max_element(objects.begin(), objects.end(), [](const auto& a, const auto& b) {
        return a.box.width() * a.box.height() < b.box.width() * b.box.height();
      });
      items.push_back({stem, largest->class_name, image});
    }
  }
  return items;
}

AnchorImages load_anchor_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw ConfigurationError("anchor directory does not exist: " + dir.string());
  }
  AnchorImages anchors;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || !has_image_extension(entry.path())) continue;
    cv::Mat image = load_image(entry.path());
    if (image.empty()) {
      throw ConfigurationError("undecodable anchor image: " + entry.path().string());
    }
    anchors[entry.path().stem().string()] = image;
  }
  return anchors;
}

Splits split(std::vector<LabeledImage> items, double train_fraction, double val_fraction, std::uint64_t seed) {
  if (train_fraction < 0 || val_fraction < 0 || train_fraction + val_fraction > 1.0) {
    throw ValidationError("split fractions must be non-negative and sum to at most 1");
  }
  std::map<std::string, std::vector<LabeledImage>> by_class;
  for (auto& item : items) by_class[item.class_name].push_back(std::move(item));

  Splits out;
  std::mt19937_64 rng(seed);
  for (auto& [cls, group] : by_class) {
    std::sort(group.begin(), group.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    for (std::size_t i = group.size(); i > 1; --i) {
      std::swap(group[i - 1], group[rng() % i]);
    }
    const auto n = static_cast<double>(group.size());
    const auto n_train = static_cast<std::size_t>(std::llround(n * train_fraction));
    const auto n_val = std::min(group.size() - n_train, static_cast<std::size_t>(std::llround(n * val_fraction)));
    for (std::size_t i = 0; i < group.size(); ++i) {
      auto& target = i < n_train ? out.train : i < n_train + n_val ? out.val : out.test;
      target.push_back(std::move(group[i]));
    }
  }
  return out;
}

}  // namespace curator::siamese
