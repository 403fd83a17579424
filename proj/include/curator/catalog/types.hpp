#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace curator::catalog {

enum class ImageSource { crawl, local_import };

/// Class-space membership of a crop. `unassigned` until the detector stage
/// places it; afterwards only the reclassifier moves it.
enum class Space { keyword, non_keyword, unassigned };

std::string_view to_string(ImageSource source) noexcept;
std::string_view to_string(Space space) noexcept;
ImageSource parse_image_source(std::string_view text);
Space parse_space(std::string_view text);

/// Pixel box, half-open on the max side: [x_min, x_max) x [y_min, y_max).
struct BBox {
  int x_min = 0;
  int y_min = 0;
  int x_max = 0;
  int y_max = 0;

  int width() const noexcept { return x_max - x_min; }
  int height() const noexcept { return y_max - y_min; }
  bool well_ordered() const noexcept { return x_min < x_max && y_min < y_max; }

  /// Clamps into [0, width] x [0, height].
  BBox clamped(int image_width, int image_height) const noexcept;

  bool operator==(const BBox&) const = default;
};

struct ImageRecord {
  std::string id;
  ImageSource source = ImageSource::local_import;
  std::string origin_uri;
  std::string keyword;
  std::string pixels_path;  // relative to the catalog root
  int width = 0;
  int height = 0;
  std::string fetched_at;   // ISO-8601 UTC

  bool operator==(const ImageRecord&) const = default;
};

struct CropRecord {
  std::string id;
  std::string parent_image;
  BBox bbox;
  std::string detector_class;
  double detector_confidence = 0.0;
  Space space = Space::unassigned;
  std::optional<double> distance;
  // Class space the crop is a member of; empty while unassigned.
  std::string space_class;

  bool operator==(const CropRecord&) const = default;
};

struct ClassSpace {
  std::string class_name;
  std::set<std::string> keyword_members;
  std::set<std::string> non_keyword_members;

  bool operator==(const ClassSpace&) const = default;
};

/// One reference image per class. Classes without an anchor are absent.
struct AnchorSet {
  std::map<std::string, std::string> entries;  // class -> anchor path (relative)

  std::size_t class_count() const noexcept { return entries.size(); }
  bool contains(const std::string& class_name) const { return entries.count(class_name) != 0; }
};

struct AnchorState {
  std::string class_name;
  std::string path;          // relative to the catalog root
  std::string content_hash;
  bool scores_stale = false;   // distances were computed against a previous anchor
  bool profile_stale = false;  // threshold profile calibrated against a previous anchor

  bool operator==(const AnchorState&) const = default;
};

struct SkippedFile {
  std::string path;
  std::string reason;
};

struct ImportResult {
  std::vector<ImageRecord> records;
  std::vector<SkippedFile> skipped;
};

struct Page {
  std::vector<CropRecord> items;
  std::size_t total = 0;
};

struct AnchorUpdate {
  bool changed = false;
  std::string class_name;
  std::size_t invalidated_scores = 0;
  bool invalidated_profile = false;
};

/// Distance between a crop's embedding and the anchor of `class_name`.
struct DistanceScore {
  std::string crop_id;
  std::string class_name;
  double distance = 0.0;
};

/// The 20 PASCAL VOC object classes, the default detector vocabulary.
const std::vector<std::string>& voc_classes();

void to_json(nlohmann::json& j, const BBox& box);
void from_json(const nlohmann::json& j, BBox& box);
void to_json(nlohmann::json& j, const ImageRecord& record);
void from_json(const nlohmann::json& j, ImageRecord& record);
void to_json(nlohmann::json& j, const CropRecord& record);
void from_json(const nlohmann::json& j, CropRecord& record);
void to_json(nlohmann::json& j, const ClassSpace& space);
void from_json(const nlohmann::json& j, ClassSpace& space);
void to_json(nlohmann::json& j, const AnchorState& state);
void from_json(const nlohmann::json& j, AnchorState& state);

}  // namespace curator::catalog
