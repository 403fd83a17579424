#pragma once

#include "curator/catalog/types.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

/// Synthetic colored-shape corpora with ground-truth boxes. Used as the
/// offline fixture corpus for the crawler, the annotation-oracle detector and
/// the end-to-end tests.
namespace curator::synth {

enum class Shape { circle, square, triangle, diamond };

struct ShapeClass {
  std::string name;
  Shape shape = Shape::circle;
  cv::Scalar color;  // BGR
};

struct CorpusSpec {
  std::vector<ShapeClass> classes;
  std::size_t images = 100;
  int width = 64;
  int height = 64;
  int min_object = 20;
  int max_object = 36;
  bool cluttered = false;
  int color_jitter = 30;
  // Fraction of images carrying a second object of a different class.
  double second_object_fraction = 0.0;
  std::uint64_t seed = 1;
  std::string name_prefix = "img";
};

struct SyntheticObject {
  std::string class_name;
  catalog::BBox box;
};

struct SyntheticImage {
  std::string name;  // file stem
  cv::Mat pixels;
  std::vector<SyntheticObject> objects;
};

/// Two visually distinct classes drawn from the VOC vocabulary.
std::vector<ShapeClass> default_two_classes();

/// Up to four visually distinct classes (the first two are
/// default_two_classes()). Throws ValidationError outside [1, 4].
std::vector<ShapeClass> shape_classes(std::size_t count);

/// Images are spread round-robin over the classes (primary object), so every
/// class receives floor(images / classes) or one more.
std::vector<SyntheticImage> generate(const CorpusSpec& spec);

/// Canonical un-jittered rendering of a class on a plain background.
cv::Mat render_anchor(const ShapeClass& cls, int size = 48);

/// Writes `<name>.png` plus a `<name>.txt` sidecar with one
/// `class x_min y_min x_max y_max` line per object.
void write_annotated(const std::filesystem::path& dir, const std::vector<SyntheticImage>& images);

/// Writes `<class>.png` canonical anchors.
void write_anchors(const std::filesystem::path& dir, const std::vector<ShapeClass>& classes,
                   int size = 48);

/// A ready-to-run workspace:
///   labeled/     annotated corpus for train / calibrate / evaluate
///   anchors/     canonical class anchors
///   crawl/       annotated images served by the fixture provider
///   config.json  service config wired to the above (oracle detector with
///                `noise_rate` label noise, tiny-test backbone)
struct WorkspaceSpec {
  std::size_t classes = 2;
  std::size_t labeled_images = 200;
  std::size_t crawl_images = 40;
  bool cluttered = false;
  double second_object_fraction = 0.0;
  double noise_rate = 0.1;
  int epochs = 10;
  double learning_rate = 0.001;
  bool crop = true;
  std::uint64_t seed = 1;
};

/// Returns the config path.
std::filesystem::path write_workspace(const std::filesystem::path& dir, const WorkspaceSpec& spec);

}  // namespace curator::synth
