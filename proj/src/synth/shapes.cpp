#include "curator/synth/shapes.hpp"

#include "curator/catalog/annotations.hpp"
#include "curator/common/errors.hpp"
#include "curator/common/hash.hpp"
#include "curator/common/image_io.hpp"

#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <random>

namespace curator::synth {

namespace fs = std::filesystem;

namespace {

using Rng = std::mt19937_64;

int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

cv::Scalar jitter(const cv::Scalar& base, int amount, Rng& rng) {
  cv::Scalar out;
  for (int c = 0; c < 3; ++c) {
    out[c] = std::clamp(base[c] + uniform_int(rng, -amount, amount), 0.0, 255.0);
  }
  return out;
}

cv::Scalar random_color(Rng& rng) {
  return cv::Scalar(uniform_int(rng, 0, 255), uniform_int(rng, 0, 255), uniform_int(rng, 0, 255));
}

/// Draws `shape` filling the square at (x, y) of side `size`.
void draw_shape(cv::Mat& canvas, Shape shape, int x, int y, int size, const cv::Scalar& color) {
  switch (shape) {
    case Shape::circle:
      cv::circle(canvas, {x + size / 2, y + size / 2}, size / 2, color, cv::FILLED, cv::LINE_8);
      break;
    case Shape::square:
      cv::rectangle(canvas, cv::Rect(x, y, size, size), color, cv::FILLED);
      break;
    case Shape::triangle: {
      std::vector<cv::Point> pts{{x + size / 2, y}, {x, y + size - 1}, {x + size - 1, y + size - 1}};
      cv::fillConvexPoly(canvas, pts, color, cv::LINE_8);
      break;
    }
    case Shape::diamond: {
      std::vector<cv::Point> pts{{x + size / 2, y},
                                 {x + size - 1, y + size / 2},
                                 {x + size / 2, y + size - 1},
                                 {x, y + size / 2}};
      cv::fillConvexPoly(canvas, pts, color, cv::LINE_8);
      break;
    }
  }
}

void draw_clutter(cv::Mat& canvas, Rng& rng) {
  canvas.setTo(random_color(rng));
  const int pieces = uniform_int(rng, 14, 22);
  for (int i = 0; i < pieces; ++i) {
    const cv::Scalar color = random_color(rng);
    const int kind = uniform_int(rng, 0, 2);
    const cv::Point a(uniform_int(rng, 0, canvas.cols - 1), uniform_int(rng, 0, canvas.rows - 1));
    const cv::Point b(uniform_int(rng, 0, canvas.cols - 1), uniform_int(rng, 0, canvas.rows - 1));
    if (kind == 0) {
      cv::rectangle(canvas, a, b, color, cv::FILLED);
    } else if (kind == 1) {
      cv::line(canvas, a, b, color, uniform_int(rng, 1, 4));
    } else {
      cv::circle(canvas, a, uniform_int(rng, 3, std::max(4, canvas.cols / 6)), color, cv::FILLED);
    }
  }
}

void plain_background(cv::Mat& canvas, Rng& rng) {
  const int base = uniform_int(rng, 200, 235);
  canvas.setTo(cv::Scalar(base, base, base));
}

bool overlaps(const catalog::BBox& a, const catalog::BBox& b) {
  return a.x_min < b.x_max && b.x_min < a.x_max && a.y_min < b.y_max && b.y_min < a.y_max;
}

}  // namespace

std::vector<ShapeClass> default_two_classes() {
  return {{"aeroplane", Shape::circle, cv::Scalar(40, 40, 200)},
          {"bicycle", Shape::square, cv::Scalar(200, 90, 30)}};
}

std::vector<ShapeClass> shape_classes(std::size_t count) {
  std::vector<ShapeClass> all = default_two_classes();
  all.push_back({"bird", Shape::triangle, cv::Scalar(50, 180, 60)});
  all.push_back({"boat", Shape::diamond, cv::Scalar(30, 200, 220)});
  if (count < 1 || count > all.size()) {
    throw ValidationError("shape class count must be in [1, " + std::to_string(all.size()) + "]");
  }
  all.resize(count);
  return all;
}

std::vector<SyntheticImage> generate(const CorpusSpec& spec) {
  std::vector<SyntheticImage> out;
  if (spec.classes.empty()) return out;
  Rng rng(spec.seed);
  out.reserve(spec.images);
  for (std::size_t i = 0; i < spec.images; ++i) {
    SyntheticImage image;
    char name[64];
    std::snprintf(name, sizeof(name), "%s%04zu", spec.name_prefix.c_str(), i);
    image.name = name;
    image.pixels = cv::Mat(spec.height, spec.width, CV_8UC3);
    if (spec.cluttered) {
      draw_clutter(image.pixels, rng);
    } else {
      plain_background(image.pixels, rng);
    }

    std::vector<std::size_t> classes{i % spec.classes.size()};
    const bool second = spec.classes.size() > 1 &&
                        std::uniform_real_distribution<double>(0.0, 1.0)(rng) <
                            spec.second_object_fraction;
    if (second) {
      classes.push_back((classes[0] + 1 + static_cast<std::size_t>(uniform_int(
                                              rng, 0, static_cast<int>(spec.classes.size()) - 2))) %
                        spec.classes.size());
    }
    for (std::size_t c : classes) {
      const ShapeClass& cls = spec.classes[c];
      catalog::BBox box;
      for (int attempt = 0; attempt < 20; ++attempt) {
        const int size = uniform_int(rng, spec.min_object, std::min({spec.max_object, spec.width, spec.height}));
        const int x = uniform_int(rng, 0, spec.width - size);
        const int y = uniform_int(rng, 0, spec.height - size);
        box = catalog::BBox{x, y, x + size, y + size};
        const bool clear = std::none_of(image.objects.begin(), image.objects.end(),
                                        [&](const SyntheticObject& o) { return overlaps(o.box, box); });
        if (clear) break;
      }
      draw_shape(image.pixels, cls.shape, box.x_min, box.y_min, box.width(),
                 jitter(cls.color, spec.color_jitter, rng));
      image.objects.push_back({cls.name, box});
    }
    out.push_back(std::move(image));
  }
  return out;
}

cv::Mat render_anchor(const ShapeClass& cls, int size) {
  cv::Mat canvas(size, size, CV_8UC3, cv::Scalar(220, 220, 220));
  const int margin = std::max(1, size / 12);
  draw_shape(canvas, cls.shape, margin, margin, size - 2 * margin, cls.color);
  return canvas;
}

void write_annotated(const std::filesystem::path& dir, const std::vector<SyntheticImage>& images) {
  std::filesystem::create_directories(dir);
  for (const auto& image : images) {
    write_file_atomic(dir / (image.name + ".png"), encode_png(image.pixels));
    std::vector<catalog::Annotation> annotations;
    for (const auto& o : image.objects) annotations.push_back({o.class_name, o.box});
    write_file_atomic(dir / (image.name + ".txt"), catalog::format_annotations(annotations));
  }
}

void write_anchors(const std::filesystem::path& dir, const std::vector<ShapeClass>& classes, int size) {
  std::filesystem::create_directories(dir);
  for (const auto& cls : classes) {
    write_file_atomic(dir / (cls.name + ".png"), encode_png(render_anchor(cls, size)));
  }
}

fs::path write_workspace(const fs::path& dir, const WorkspaceSpec& spec) {
  const auto classes = shape_classes(spec.classes);
  CorpusSpec corpus;
  corpus.classes = classes;
  corpus.cluttered = spec.cluttered;
  corpus.second_object_fraction = spec.second_object_fraction;

  corpus.images = spec.labeled_images;
  corpus.seed = spec.seed;
  corpus.name_prefix = "lab";
  write_annotated(dir / "labeled", generate(corpus));

  corpus.images = spec.crawl_images;
  corpus.seed = mix64(spec.seed ^ 0x637277);
  corpus.name_prefix = "web";
  write_annotated(dir / "crawl", generate(corpus));
  write_anchors(dir / "anchors", classes);

  std::vector<std::string> names;
  for (const auto& c : classes) names.push_back(c.name);
  const nlohmann::json config = {
      {"catalog", "catalog"},
      {"checkpoint", "model.ckpt"},
      {"default_level", 3},
      {"providers", {{"fixture", {{"type", "fixture"}, {"dir", "crawl"}}}}},
      {"detector", {{"backend", "oracle"}, {"noise_rate", spec.noise_rate}, {"noise_classes", names},
                    {"seed", spec.seed}}},
      {"embedder", {{"backbone", "tiny-test"}, {"embedding_dim", 128}, {"margin", 2.0}, {"seed", spec.seed}}},
      {"data", {{"dir", "labeled"}, {"anchors", "anchors"}, {"crop", spec.crop}, {"train_fraction", 0.5},
                {"val_fraction", 0.25}, {"seed", spec.seed}}},
      {"training", {{"learning_rate", spec.learning_rate}, {"epochs", spec.epochs}, {"batch_size", 64},
                    {"negative_ratio", static_cast<double>(classes.size() - 1)}, {"seed", spec.seed},
                    {"history", "history.csv"}}},
      {"server", {{"host", "127.0.0.1"}, {"port", 8080}}}};
  const fs::path path = dir / "config.json";
  write_file_atomic(path, config.dump(2) + "\n");
  return path;
}

}  // namespace curator::synth
