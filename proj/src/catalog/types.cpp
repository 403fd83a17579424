#include "curator/catalog/types.hpp"

#include "curator/common/errors.hpp"

#include <algorithm>

namespace curator::catalog {

std::string_view to_string(ImageSource source) noexcept {
  return source == ImageSource::crawl ? "crawl" : "local-import";
}

std::string_view to_string(Space space) noexcept {
  switch (space) {
    case Space::keyword: return "keyword";
    case Space::non_keyword: return "non-keyword";
    case Space::unassigned: return "unassigned";
  }
  return "unassigned";
}

ImageSource parse_image_source(std::string_view text) {
  if (text == "crawl") return ImageSource::crawl;
  if (text == "local-import") return ImageSource::local_import;
  throw ValidationError("unknown image source '" + std::string(text) + "'");
}

Space parse_space(std::string_view text) {
  if (text == "keyword") return Space::keyword;
  if (text == "non-keyword") return Space::non_keyword;
  if (text == "unassigned") return Space::unassigned;
  throw ValidationError("unknown space '" + std::string(text) + "'");
}

BBox BBox::clamped(int image_width, int image_height) const noexcept {
  return BBox{std::clamp(x_min, 0, image_width), std::clamp(y_min, 0, image_height),
              std::clamp(x_max, 0, image_width), std::clamp(y_max, 0, image_height)};
}

const std::vector<std::string>& voc_classes() {
  static const std::vector<std::string> classes = {
      "aeroplane", "bicycle", "bird",  "boat",        "bottle", "bus",         "car",
      "cat",       "chair",   "cow",   "diningtable", "dog",    "horse",       "motorbike",
      "person",    "pottedplant", "sheep", "sofa",    "train",  "tvmonitor"};
  return classes;
}

void to_json(nlohmann::json& j, const BBox& box) {
  j = nlohmann::json::array({box.x_min, box.y_min, box.x_max, box.y_max});
}

void from_json(const nlohmann::json& j, BBox& box) {
  box = BBox{j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>(), j.at(3).get<int>()};
}

void to_json(nlohmann::json& j, const ImageRecord& r) {
  j = nlohmann::json{{"id", r.id},
                     {"source", to_string(r.source)},
                     {"origin_uri", r.origin_uri},
                     {"keyword", r.keyword},
                     {"pixels_path", r.pixels_path},
                     {"width", r.width},
                     {"height", r.height},
                     {"fetched_at", r.fetched_at}};
}

void from_json(const nlohmann::json& j, ImageRecord& r) {
  r.id = j.at("id").get<std::string>();
  r.source = parse_image_source(j.at("source").get<std::string>());
  r.origin_uri = j.at("origin_uri").get<std::string>();
  r.keyword = j.at("keyword").get<std::string>();
  r.pixels_path = j.at("pixels_path").get<std::string>();
  r.width = j.at("width").get<int>();
  r.height = j.at("height").get<int>();
  r.fetched_at = j.at("fetched_at").get<std::string>();
}

void to_json(nlohmann::json& j, const CropRecord& r) {
  j = nlohmann::json{{"id", r.id},
                     {"parent_image", r.parent_image},
                     {"bbox", r.bbox},
                     {"detector_class", r.detector_class},
                     {"detector_confidence", r.detector_confidence},
                     {"space", to_string(r.space)},
                     {"distance", nullptr},
                     {"space_class", r.space_class}};
  if (r.distance) {
    j["distance"] = *r.distance;
  }
}

void from_json(const nlohmann::json& j, CropRecord& r) {
  r.id = j.at("id").get<std::string>();
  r.parent_image = j.at("parent_image").get<std::string>();
  r.bbox = j.at("bbox").get<BBox>();
  r.detector_class = j.at("detector_class").get<std::string>();
  r.detector_confidence = j.at("detector_confidence").get<double>();
  r.space = parse_space(j.at("space").get<std::string>());
  const auto& d = j.at("distance");
  r.distance = d.is_null() ? std::nullopt : std::optional<double>(d.get<double>());
  r.space_class = j.value("space_class", std::string{});
}

void to_json(nlohmann::json& j, const ClassSpace& s) {
  j = nlohmann::json{{"class", s.class_name},
                     {"keyword_members", s.keyword_members},
                     {"non_keyword_members", s.non_keyword_members}};
}

void from_json(const nlohmann::json& j, ClassSpace& s) {
  s.class_name = j.at("class").get<std::string>();
  s.keyword_members = j.at("keyword_members").get<std::set<std::string>>();
  s.non_keyword_members = j.at("non_keyword_members").get<std::set<std::string>>();
}

void to_json(nlohmann::json& j, const AnchorState& a) {
  j = nlohmann::json{{"class", a.class_name},
                     {"path", a.path},
                     {"content_hash", a.content_hash},
                     {"scores_stale", a.scores_stale},
                     {"profile_stale", a.profile_stale}};
}

void from_json(const nlohmann::json& j, AnchorState& a) {
  a.class_name = j.at("class").get<std::string>();
  a.path = j.at("path").get<std::string>();
  a.content_hash = j.at("content_hash").get<std::string>();
  a.scores_stale = j.value("scores_stale", false);
  a.profile_stale = j.value("profile_stale", false);
}

}  // namespace curator::catalog
