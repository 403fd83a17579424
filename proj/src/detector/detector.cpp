#include "curator/detector/detector.hpp"

#include "curator/catalog/catalog.hpp"
#include "curator/common/errors.hpp"
#include "curator/common/hash.hpp"

#include <opencv2/dnn.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cmath>
#include <mutex>

namespace curator::detector {

namespace fs = std::filesystem;

namespace {

bool in_vocabulary(const std::vector<std::string>& vocabulary, const std::string& cls) {
  return std::find(vocabulary.begin(), vocabulary.end(), cls) != vocabulary.end();
}

std::string uri_path(const std::string& uri) {
  constexpr std::string_view file_scheme = "file://";
  if (uri.rfind(file_scheme, 0) == 0) return uri.substr(file_scheme.size());
  const auto scheme = uri.find("://");
  if (scheme == std::string::npos) return uri;
  // http(s)://host/path?query -> /path
  const auto path_start = uri.find('/', scheme + 3);
  std::string path = path_start == std::string::npos ? "" : uri.substr(path_start);
  const auto query = path.find_first_of("?#");
  return query == std::string::npos ? path : path.substr(0, query);
}

double unit(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

}  // namespace

// Oracle ---------------------------------------------------------------------

OracleDetector::OracleDetector(OracleConfig config) : config_(std::move(config)) {
  if (config_.vocabulary.empty()) throw ConfigurationError("detector vocabulary is empty");
  if (config_.noise_rate < 0.0 || config_.noise_rate > 1.0) {
    throw ConfigurationError("noise_rate must be in [0, 1]");
  }
  if (config_.noise_classes.empty()) config_.noise_classes = config_.vocabulary;
  for (const auto& cls : config_.noise_classes) {
    if (!in_vocabulary(config_.vocabulary, cls)) {
      throw ConfigurationError("noise class '" + cls + "' is not in the vocabulary");
    }
  }
}

fs::path OracleDetector::annotation_path(const catalog::ImageRecord& image) const {
  const fs::path origin(uri_path(image.origin_uri));
  fs::path beside = origin;
  beside.replace_extension(".txt");
  if (!origin.empty() && fs::exists(beside)) return beside;
  if (config_.annotation_dir) {
    const fs::path in_dir = *config_.annotation_dir / (origin.stem().string() + ".txt");
    if (fs::exists(in_dir)) return in_dir;
  }
  throw DetectionError("no annotation for image " + image.id + " (" + image.origin_uri + ")");
}

std::vector<Detection> OracleDetector::run(const catalog::ImageRecord& image, const cv::Mat&) const {
  std::vector<catalog::Annotation> objects;
  try {
    objects = catalog::read_annotations(annotation_path(image));
  } catch (const ValidationError& e) {
    throw DetectionError(e.what());
  }
  std::vector<Detection> out;
  for (std::size_t k = 0; k < objects.size(); ++k) {
    Detection d{objects[k].class_name, 1.0, objects[k].box};
    if (config_.noise_rate > 0.0) {
      const std::uint64_t h = mix64(config_.seed ^ mix64(hash_string(image.id) + k));
      if (unit(h) < config_.noise_rate) {
        std::vector<std::string> others;
        for (const auto& cls : config_.noise_classes) {
          if (cls != d.class_name) others.push_back(cls);
        }
        if (!others.empty()) d.class_name = others[mix64(h) % others.size()];
      }
    }
    out.push_back(std::move(d));
  }
  return out;
}

// ONNX -----------------------------------------------------------------------

struct OnnxDetector::Impl {
  mutable cv::dnn::Net net;
  mutable std::mutex mutex;  // cv::dnn::Net::forward is not re-entrant
};

OnnxDetector::OnnxDetector(OnnxConfig config) : config_(std::move(config)), impl_(std::make_unique<Impl>()) {
  if (config_.vocabulary.empty()) throw ConfigurationError("detector vocabulary is empty");
  if (!fs::exists(config_.model_path)) {
    throw ConfigurationError("detector model not found: " + config_.model_path.string());
  }
  try {
    impl_->net = cv::dnn::readNetFromONNX(config_.model_path.string());
  } catch (const cv::Exception& e) {
    throw ConfigurationError("cannot load detector model " + config_.model_path.string() + ": " + e.what());
  }
}

OnnxDetector::~OnnxDetector() = default;

std::vector<Detection> OnnxDetector::run(const catalog::ImageRecord&, const cv::Mat& pixels) const {
  const int size = config_.input_size;
  const double scale = std::min(static_cast<double>(size) / pixels.cols, static_cast<double>(size) / pixels.rows);
  const int rw = static_cast<int>(std::lround(pixels.cols * scale));
  const int rh = static_cast<int>(std::lround(pixels.rows * scale));
  const int px = (size - rw) / 2, py = (size - rh) / 2;
  cv::Mat letterbox(size, size, CV_8UC3, cv::Scalar(114, 114, 114));
  cv::Mat resized;
  cv::resize(pixels, resized, cv::Size(rw, rh));
  resized.copyTo(letterbox(cv::Rect(px, py, rw, rh)));
  const cv::Mat blob = cv::dnn::blobFromImage(letterbox, 1.0 / 255.0, cv::Size(size, size), cv::Scalar(), true);

  cv::Mat out;
  {
    std::lock_guard lock(impl_->mutex);
    impl_->net.setInput(blob);
    out = impl_->net.forward();
  }
  if (out.dims != 3 || out.size[2] < 6) {
    throw DetectionError("unexpected detector output shape");
  }
  const cv::Mat rows(out.size[1], out.size[2], CV_32F, out.ptr<float>());
  std::vector<Detection> dets;
  for (int i = 0; i < rows.rows; ++i) {
    const float* r = rows.ptr<float>(i);
    const auto cls = static_cast<std::size_t>(r[5]);
    if (r[4] <= 0.0f || cls >= config_.vocabulary.size()) continue;
    const auto unmap = [&](float v, int pad) { return static_cast<int>(std::lround((v - pad) / scale)); };
    dets.push_back({config_.vocabulary[cls], static_cast<double>(r[4]),
                    {unmap(r[0], px), unmap(r[1], py), unmap(r[2], px), unmap(r[3], py)}});
  }
  return dets;
}

// Factory and stages -----------------------------------------------------------

std::unique_ptr<DetectorBackend> make_backend(const nlohmann::json& config) {
  const std::string backend = config.value("backend", std::string("oracle"));
  std::vector<std::string> vocabulary = config.value("vocabulary", catalog::voc_classes());
  const double floor = config.value("confidence_floor", 0.25);
  if (floor < 0.0 || floor > 1.0) throw ConfigurationError("confidence_floor must be in [0, 1]");
  if (backend == "oracle") {
    OracleConfig c;
    c.vocabulary = std::move(vocabulary);
    c.confidence_floor = floor;
    if (config.contains("annotation_dir")) c.annotation_dir = config["annotation_dir"].get<std::string>();
    c.noise_rate = config.value("noise_rate", 0.0);
    c.noise_classes = config.value("noise_classes", std::vector<std::string>{});
    c.seed = config.value("seed", std::uint64_t{1});
    return std::make_unique<OracleDetector>(std::move(c));
  }
  if (backend == "onnx") {
    OnnxConfig c;
    c.model_path = config.value("model_path", std::string());
    c.vocabulary = std::move(vocabulary);
    c.confidence_floor = floor;
    c.input_size = config.value("input_size", 640);
    return std::make_unique<OnnxDetector>(std::move(c));
  }
  throw ConfigurationError("unknown detector backend '" + backend + "'");
}

std::vector<Detection> detect(const DetectorBackend& backend, const catalog::Catalog& catalog,
                              const catalog::ImageRecord& image) {
  const cv::Mat pixels = catalog.load_image_pixels(image);
  if (pixels.empty()) {
    throw DetectionError("undecodable image " + image.id);
  }
  std::vector<Detection> out;
  for (auto& d : backend.run(image, pixels)) {
    if (!in_vocabulary(backend.vocabulary(), d.class_name)) {
      throw DetectionError("backend emitted class '" + d.class_name + "' outside its vocabulary");
    }
    if (!(d.confidence >= backend.confidence_floor()) || d.confidence > 1.0) continue;
    d.box = d.box.clamped(pixels.cols, pixels.rows);
    if (!d.box.well_ordered()) continue;
    out.push_back(std::move(d));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Detection& a, const Detection& b) { return a.confidence > b.confidence; });
  return out;
}

StagingReport stage_classify(catalog::Catalog& catalog, const DetectorBackend& backend,
                             const std::vector<catalog::ImageRecord>& images, const std::string& keyword) {
  if (!in_vocabulary(backend.vocabulary(), keyword)) {
    throw ValidationError("keyword '" + keyword + "' is not in the detector vocabulary");
  }
  StagingReport report;
  report.keyword = keyword;
  for (const auto& image : images) {
    std::vector<Detection> detections;
    try {
      detections = detect(backend, catalog, image);
    } catch (const Error& e) {
      report.failures.push_back({image.id, e.what()});
      continue;
    }
    for (const auto& d : detections) {
      try {
        const auto crop = catalog.save_crop(image, d.box, d.class_name, d.confidence);
        const bool is_keyword = d.class_name == keyword;
        catalog.assign_space(crop.id, is_keyword ? catalog::Space::keyword : catalog::Space::non_keyword, keyword);
        ++(is_keyword ? report.keyword_count : report.non_keyword_count);
        report.crop_ids.push_back(crop.id);
      } catch (const Error& e) {
        report.failures.push_back({image.id, e.what()});
      }
    }
  }
  return report;
}

bool match_condition(const DetectorBackend& backend, const catalog::Catalog& catalog,
                     const catalog::ImageRecord& image, const std::set<std::string>& required) {
  for (const auto& cls : required) {
    if (!in_vocabulary(backend.vocabulary(), cls)) {
      throw ValidationError("class '" + cls + "' is not in the detector vocabulary");
    }
  }
  if (required.empty()) return true;
  std::set<std::string> found;
  for (const auto& d : detect(backend, catalog, image)) found.insert(d.class_name);
  return std::includes(found.begin(), found.end(), required.begin(), required.end());
}

nlohmann::json to_json(const StagingReport& r) {
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& f : r.failures) failures.push_back({{"image_id", f.image_id}, {"reason", f.reason}});
  return {{"keyword", r.keyword},
          {"keyword_count", r.keyword_count},
          {"non_keyword_count", r.non_keyword_count},
          {"crop_ids", r.crop_ids},
          {"failures", failures}};
}

}  // namespace curator::detector
