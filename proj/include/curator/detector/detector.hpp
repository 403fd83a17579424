#pragma once

#include "curator/catalog/annotations.hpp"
#include "curator/catalog/types.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "json.hpp"

namespace curator::catalog {
class Catalog;
}

namespace curator::detector {

struct Detection {
  std::string class_name;
  double confidence = 0.0;
  catalog::BBox box;
};

class DetectorBackend {
 public:
  virtual ~DetectorBackend() = default;
  virtual std::string name() const = 0;
  virtual const std::vector<std::string>& vocabulary() const = 0;
  virtual double confidence_floor() const = 0;
  /// Raw detections for decoded pixels; filtering and ordering are applied
  /// by detect().
  virtual std::vector<Detection> run(const catalog::ImageRecord& image, const cv::Mat& pixels) const = 0;
};

/// Ground-truth backend: echoes the `<stem>.txt` sidecar next to the image's
/// origin path (or in `annotation_dir`) with confidence 1.0. An optional
/// deterministic label-noise rate flips each object's class to another
/// entry of `noise_classes`.
struct OracleConfig {
  std::vector<std::string> vocabulary = catalog::voc_classes();
  double confidence_floor = 0.25;
  std::optional<std::filesystem::path> annotation_dir;
  double noise_rate = 0.0;
  std::vector<std::string> noise_classes;  // empty: the vocabulary
  std::uint64_t seed = 1;
};

class OracleDetector final : public DetectorBackend {
 public:
  explicit OracleDetector(OracleConfig config);
  std::string name() const override { return "oracle"; }
  const std::vector<std::string>& vocabulary() const override { return config_.vocabulary; }
  double confidence_floor() const override { return config_.confidence_floor; }
  std::vector<Detection> run(const catalog::ImageRecord& image, const cv::Mat& pixels) const override;

  /// Sidecar path used for an image; throws DetectionError if none exists.
  std::filesystem::path annotation_path(const catalog::ImageRecord& image) const;

 private:
  OracleConfig config_;
};

/// YOLOv10-style ONNX model through OpenCV DNN. Expects an end-to-end
/// output of shape [1, N, 6] rows (x1, y1, x2, y2, score, class) in the
/// letterboxed input frame.
struct OnnxConfig {
  std::filesystem::path model_path;
  std::vector<std::string> vocabulary = catalog::voc_classes();
  double confidence_floor = 0.25;
  int input_size = 640;
};

class OnnxDetector final : public DetectorBackend {
 public:
  /// Throws ConfigurationError when the model cannot be loaded.
  explicit OnnxDetector(OnnxConfig config);
  ~OnnxDetector() override;
  std::string name() const override { return "onnx"; }
  const std::vector<std::string>& vocabulary() const override { return config_.vocabulary; }
  double confidence_floor() const override { return config_.confidence_floor; }
  std::vector<Detection> run(const catalog::ImageRecord& image, const cv::Mat& pixels) const override;

 private:
  struct Impl;
  OnnxConfig config_;
  std::unique_ptr<Impl> impl_;
};

/// {"backend": "oracle" | "onnx", ...backend keys}.
std::unique_ptr<DetectorBackend> make_backend(const nlohmann::json& config);

/// Decodes the image, runs the backend, drops detections below the floor,
/// clamps boxes, and sorts by confidence descending (stable). Throws
/// DetectionError for undecodable pixels or out-of-vocabulary output.
std::vector<Detection> detect(const DetectorBackend& backend, const catalog::Catalog& catalog,
                              const catalog::ImageRecord& image);

struct StageFailure {
  std::string image_id;
  std::string reason;
};

struct StagingReport {
  std::string keyword;
  std::size_t keyword_count = 0;
  std::size_t non_keyword_count = 0;
  std::vector<std::string> crop_ids;
  std::vector<StageFailure> failures;
};

/// Crops every detection; the keyword's detections go to its keyword space,
/// everything else to its non-keyword space. Per-image failures are
/// recorded, not thrown. Throws ValidationError for a keyword outside the
/// vocabulary.
StagingReport stage_classify(catalog::Catalog& catalog, const DetectorBackend& backend,
                             const std::vector<catalog::ImageRecord>& images, const std::string& keyword);

/// True iff every required class is detected in the image.
bool match_condition(const DetectorBackend& backend, const catalog::Catalog& catalog,
                     const catalog::ImageRecord& image, const std::set<std::string>& required);

nlohmann::json to_json(const StagingReport& report);

}  // namespace curator::detector
