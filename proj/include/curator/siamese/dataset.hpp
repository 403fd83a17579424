#pragma once

#include <filesystem>
#include <map>
#include <opencv2/core.hpp>
#include <string>
#include <vector>

namespace curator::siamese {

struct LabeledImage {
  std::string id;
  std::string class_name;
  cv::Mat pixels;  // BGR
};

/// class name -> anchor pixels (BGR)
using AnchorImages = std::map<std::string, cv::Mat>;

/// Reads every image with a sidecar annotation in `dir`. With
/// `crop_objects`, each annotated object becomes one item cut to its box
/// (id `<stem>#<k>`); otherwise each image is one item labeled with its
/// largest object's class (id `<stem>`). Images without objects are skipped.
std::vector<LabeledImage> load_annotated(const std::filesystem::path& dir, bool crop_objects);

/// Loads `<class>.<ext>` files from a directory.
AnchorImages load_anchor_dir(const std::filesystem::path& dir);

struct Splits {
  std::vector<LabeledImage> train;
  std::vector<LabeledImage> val;
  std::vector<LabeledImage> test;
};

/// Deterministic per-class split; fractions are of each class's items and
/// the test split takes the remainder.
Splits split(std::vector<LabeledImage> items, double train_fraction, double val_fraction,
             std::uint64_t seed);

}  // namespace curator::siamese
