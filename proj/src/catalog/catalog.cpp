#include "curator/catalog/catalog.hpp"

#include "curator/common/errors.hpp"
#include "curator/common/hash.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>

namespace curator::catalog {

namespace fs = std::filesystem;

namespace {

std::string image_extension(const std::string& origin_uri) {
  const fs::path p(origin_uri);
  if (has_image_extension(p)) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext;
  }
  return ".img";
}

}  // namespace

Catalog::Catalog(fs::path root, std::vector<std::string> vocabulary)
    : root_(std::move(root)), vocabulary_(std::move(vocabulary)) {
  if (vocabulary_.empty()) {
    throw ConfigurationError("catalog vocabulary must not be empty");
  }
  fs::create_directories(root_);
  std::unique_lock lock(mutex_);
  load_locked();
}

bool Catalog::has_class(const std::string& class_name) const {
  return std::find(vocabulary_.begin(), vocabulary_.end(), class_name) != vocabulary_.end();
}

void Catalog::require_class(const std::string& class_name) const {
  if (!has_class(class_name)) {
    throw NotFoundError("unknown class '" + class_name + "'");
  }
}

// Ingestion ----------------------------------------------------------------

ImportResult Catalog::import_directory(const fs::path& dir, const std::string& keyword) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw IngestionError("import root does not exist: " + dir.string());
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file()) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });

  ImportResult result;
  for (const auto& file : files) {
    Bytes bytes;
    try {
      bytes = read_file(file);
    } catch (const IoError& e) {
      result.skipped.push_back({file.string(), e.what()});
      continue;
    }
    try {
      result.records.push_back(
          register_image(bytes, ImageSource::local_import, file.string(), keyword));
    } catch (const IngestionError& e) {
      result.skipped.push_back({file.string(), e.what()});
    }
  }
  return result;
}

ImageRecord Catalog::register_image(const Bytes& bytes, ImageSource source,
                                    const std::string& origin_uri, const std::string& keyword) {
  const cv::Mat decoded = decode_image(bytes);
  if (decoded.empty()) {
    throw IngestionError("undecodable image: " + origin_uri);
  }
  const std::string id = content_id(std::span<const std::uint8_t>(bytes));

  std::unique_lock lock(mutex_);
  if (auto it = image_index_.find(id); it != image_index_.end()) {
    return images_[it->second];
  }
  ImageRecord record;
  record.id = id;
  record.source = source;
  record.origin_uri = origin_uri;
  record.keyword = keyword;
  record.pixels_path = "images/" + id + image_extension(origin_uri);
  record.width = decoded.cols;
  record.height = decoded.rows;
  record.fetched_at = utc_timestamp();

  write_file_atomic(root_ / record.pixels_path, bytes);
  image_index_.emplace(id, images_.size());
  images_.push_back(record);
  persist_locked();
  return record;
}

// Crops ----------------------------------------------------------------------

CropRecord Catalog::save_crop(const ImageRecord& parent, const BBox& bbox,
                              const std::string& detector_class, double confidence) {
  if (!has_class(detector_class)) {
    throw RejectionError("unknown detector class '" + detector_class + "'");
  }
  const BBox box = bbox.clamped(parent.width, parent.height);
  if (!box.well_ordered()) {
    throw RejectionError("bounding box has zero area after clamping");
  }
  if (!(confidence >= 0.0 && confidence <= 1.0)) {
    throw RejectionError("detector confidence outside [0, 1]");
  }

  std::ostringstream key;
  key << parent.id << '|' << box.x_min << ',' << box.y_min << ',' << box.x_max << ','
      << box.y_max << '|' << detector_class;
  const std::string id = content_id(std::string_view(key.str()));

  {
    std::shared_lock lock(mutex_);
    if (image_index_.count(parent.id) == 0) {
      throw RejectionError("parent image not in catalog: " + parent.id);
    }
    if (auto it = crop_index_.find(id); it != crop_index_.end()) {
      return crops_[it->second];
    }
  }

  const cv::Mat pixels = load_image_pixels(parent);
  if (pixels.empty()) {
    throw RejectionError("parent image is not decodable: " + parent.id);
  }
  if (pixels.cols != parent.width || pixels.rows != parent.height) {
    throw RejectionError("parent image dimensions disagree with its record: " + parent.id);
  }
  const cv::Mat region = pixels(cv::Rect(box.x_min, box.y_min, box.width(), box.height())).clone();

  CropRecord record;
  record.id = id;
  record.parent_image = parent.id;
  record.bbox = box;
  record.detector_class = detector_class;
  record.detector_confidence = confidence;
  record.space = Space::unassigned;

  std::unique_lock lock(mutex_);
  if (auto it = crop_index_.find(id); it != crop_index_.end()) {
    return crops_[it->second];
  }
  write_file_atomic(crop_path_locked(record), encode_png(region));
  crop_index_.emplace(id, crops_.size());
  crops_.push_back(record);
  persist_locked();
  return record;
}

CropRecord& Catalog::crop_locked(const std::string& id) {
  auto it = crop_index_.find(id);
  if (it == crop_index_.end()) {
    throw NotFoundError("unknown crop '" + id + "'");
  }
  return crops_[it->second];
}

ClassSpace& Catalog::space_locked(const std::string& class_name) {
  auto [it, inserted] = spaces_.try_emplace(class_name);
  if (inserted) {
    it->second.class_name = class_name;
  }
  return it->second;
}

void Catalog::move_locked(CropRecord& crop, Space space, const std::string& space_class) {
  const fs::path from = crop_path_locked(crop);
  if (!crop.space_class.empty()) {
    ClassSpace& old_space = space_locked(crop.space_class);
    old_space.keyword_members.erase(crop.id);
    old_space.non_keyword_members.erase(crop.id);
  }
  ClassSpace& target = space_locked(space_class);
  if (space == Space::keyword) {
    target.keyword_members.insert(crop.id);
  } else {
    target.non_keyword_members.insert(crop.id);
  }
  crop.space = space;
  crop.space_class = space_class;

  const fs::path to = crop_path_locked(crop);
  if (from != to) {
    fs::create_directories(to.parent_path());
    fs::rename(from, to);
  }
}

CropRecord Catalog::assign_space(const std::string& crop_id, Space space,
                                 std::optional<std::string> space_class) {
  if (space == Space::unassigned) {
    throw ValidationError("a crop cannot be moved back to the unassigned space");
  }
  std::unique_lock lock(mutex_);
  CropRecord& crop = crop_locked(crop_id);
  const std::string cls =
      space_class ? *space_class : (crop.space_class.empty() ? crop.detector_class : crop.space_class);
  require_class(cls);
  if (crop.space == space && crop.space_class == cls) {
    return crop;
  }
  move_locked(crop, space, cls);
  persist_locked();
  return crop;
}

void Catalog::assign_spaces(const std::string& space_class, const std::vector<Move>& moves) {
  require_class(space_class);
  std::unique_lock lock(mutex_);
  for (const Move& move : moves) {
    if (move.space == Space::unassigned) {
      throw ValidationError("a crop cannot be moved back to the unassigned space");
    }
    crop_locked(move.crop_id);
  }
  bool changed = false;
  for (const Move& move : moves) {
    CropRecord& crop = crop_locked(move.crop_id);
    if (crop.space == move.space && crop.space_class == space_class) {
      continue;
    }
    move_locked(crop, move.space, space_class);
    changed = true;
  }
  if (changed) {
    persist_locked();
  }
}

void Catalog::set_distances(const std::vector<std::pair<std::string, double>>& distances) {
  std::unique_lock lock(mutex_);
  for (const auto& [id, d] : distances) {
    crop_locked(id);
    if (!(d >= 0.0) || !std::isfinite(d)) {
      throw ContractError("distance must be finite and non-negative for crop " + id);
    }
  }
  for (const auto& [id, d] : distances) {
    crop_locked(id).distance = d;
  }
  persist_locked();
}

Page Catalog::query(Space space, const std::string& class_name, std::size_t limit,
                    std::size_t offset) const {
  if (limit < 1) {
    throw ValidationError("limit must be at least 1");
  }
  require_class(class_name);

  std::shared_lock lock(mutex_);
  std::vector<const CropRecord*> matches;
  if (space == Space::unassigned) {
    for (const auto& crop : crops_) {
      if (crop.space == Space::unassigned && crop.detector_class == class_name) {
        matches.push_back(&crop);
      }
    }
  } else if (auto it = spaces_.find(class_name); it != spaces_.end()) {
    const auto& members =
        space == Space::keyword ? it->second.keyword_members : it->second.non_keyword_members;
    for (const auto& id : members) {
      matches.push_back(&crops_[crop_index_.at(id)]);
    }
  }

  constexpr double kUnscored = std::numeric_limits<double>::infinity();
  std::sort(matches.begin(), matches.end(), [&](const CropRecord* a, const CropRecord* b) {
    const double da = a->distance.value_or(kUnscored);
    const double db = b->distance.value_or(kUnscored);
    if (da != db) return da < db;
    return a->id < b->id;
  });

  Page page;
  page.total = matches.size();
  for (std::size_t i = offset; i < matches.size() && page.items.size() < limit; ++i) {
    page.items.push_back(*matches[i]);
  }
  return page;
}

std::optional<ImageRecord> Catalog::find_image(const std::string& id) const {
  std::shared_lock lock(mutex_);
  auto it = image_index_.find(id);
  if (it == image_index_.end()) return std::nullopt;
  return images_[it->second];
}

std::optional<CropRecord> Catalog::find_crop(const std::string& id) const {
  std::shared_lock lock(mutex_);
  auto it = crop_index_.find(id);
  if (it == crop_index_.end()) return std::nullopt;
  return crops_[it->second];
}

std::vector<ImageRecord> Catalog::images() const {
  std::shared_lock lock(mutex_);
  return images_;
}

std::vector<CropRecord> Catalog::crops() const {
  std::shared_lock lock(mutex_);
  return crops_;
}

ClassSpace Catalog::class_space(const std::string& class_name) const {
  require_class(class_name);
  std::shared_lock lock(mutex_);
  if (auto it = spaces_.find(class_name); it != spaces_.end()) {
    return it->second;
  }
  ClassSpace empty;
  empty.class_name = class_name;
  return empty;
}

fs::path Catalog::image_path(const ImageRecord& record) const { return root_ / record.pixels_path; }

fs::path Catalog::crop_path_locked(const CropRecord& record) const {
  const std::string& cls = record.space_class.empty() ? record.detector_class : record.space_class;
  return root_ / cls / std::string(to_string(record.space)) / (record.id + ".png");
}

fs::path Catalog::crop_path(const CropRecord& record) const { return crop_path_locked(record); }

cv::Mat Catalog::load_image_pixels(const ImageRecord& record) const {
  return load_image(image_path(record));
}

cv::Mat Catalog::load_crop_pixels(const std::string& crop_id) const {
  const auto crop = find_crop(crop_id);
  if (!crop) {
    throw NotFoundError("unknown crop '" + crop_id + "'");
  }
  return load_image(crop_path(*crop));
}

// Anchors --------------------------------------------------------------------

AnchorUpdate Catalog::set_anchor(const std::string& class_name, const Bytes& image_bytes) {
  if (!has_class(class_name)) {
    throw ValidationError("unknown class '" + class_name + "'");
  }
  const cv::Mat decoded = decode_image(image_bytes);
  if (decoded.empty()) {
    throw ValidationError("anchor image is not decodable");
  }
  const std::string hash = sha256_hex(std::span<const std::uint8_t>(image_bytes));

  std::unique_lock lock(mutex_);
  AnchorUpdate update;
  update.class_name = class_name;
  auto it = anchors_.find(class_name);
  if (it != anchors_.end() && it->second.content_hash == hash) {
    return update;
  }
  const bool replacing = it != anchors_.end();

  AnchorState state;
  state.class_name = class_name;
  state.path = "anchors/" + class_name + ".png";
  state.content_hash = hash;
  if (replacing) {
    // Scores computed against the previous anchor are no longer meaningful.
    std::size_t scored = 0;
    if (auto sit = spaces_.find(class_name); sit != spaces_.end()) {
      for (const auto* members : {&sit->second.keyword_members, &sit->second.non_keyword_members}) {
        for (const auto& id : *members) {
          scored += crops_[crop_index_.at(id)].distance.has_value() ? 1 : 0;
        }
      }
    }
    state.scores_stale = scored > 0 || it->second.scores_stale;
    state.profile_stale = true;
    update.invalidated_scores = scored;
    update.invalidated_profile = true;
  }
  write_file_atomic(root_ / state.path, encode_png(decoded));
  anchors_[class_name] = state;
  update.changed = true;
  persist_locked();
  return update;
}

AnchorSet Catalog::anchors() const {
  std::shared_lock lock(mutex_);
  AnchorSet set;
  for (const auto& [cls, state] : anchors_) {
    set.entries.emplace(cls, state.path);
  }
  return set;
}

std::optional<AnchorState> Catalog::anchor_state(const std::string& class_name) const {
  std::shared_lock lock(mutex_);
  auto it = anchors_.find(class_name);
  if (it == anchors_.end()) return std::nullopt;
  return it->second;
}

cv::Mat Catalog::load_anchor(const std::string& class_name) const {
  const auto state = anchor_state(class_name);
  if (!state) {
    throw ConfigurationError("no anchor image for class '" + class_name + "'");
  }
  return load_image(root_ / state->path);
}

void Catalog::mark_scores_fresh(const std::string& class_name) {
  std::unique_lock lock(mutex_);
  if (auto it = anchors_.find(class_name); it != anchors_.end() && it->second.scores_stale) {
    it->second.scores_stale = false;
    persist_locked();
  }
}

void Catalog::mark_profile_fresh(const std::string& class_name) {
  std::unique_lock lock(mutex_);
  if (auto it = anchors_.find(class_name); it != anchors_.end() && it->second.profile_stale) {
    it->second.profile_stale = false;
    persist_locked();
  }
}

// Documents ------------------------------------------------------------------

void Catalog::put_document(const std::string& relative_path, const nlohmann::json& doc) {
  std::unique_lock lock(mutex_);
  write_file_atomic(root_ / relative_path, doc.dump(2) + "\n");
}

std::optional<nlohmann::json> Catalog::get_document(const std::string& relative_path) const {
  std::shared_lock lock(mutex_);
  std::ifstream in(root_ / relative_path);
  if (!in) return std::nullopt;
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("corrupt document " + relative_path + ": " + e.what());
  }
}

// Persistence ----------------------------------------------------------------

void Catalog::reload() {
  std::unique_lock lock(mutex_);
  load_locked();
}

void Catalog::load_locked() {
  images_.clear();
  image_index_.clear();
  crops_.clear();
  crop_index_.clear();
  spaces_.clear();
  anchors_.clear();

  std::ifstream in(root_ / kManifestName);
  if (!in) {
    return;
  }
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const std::string kind = j.at("kind").get<std::string>();
      if (kind == "image") {
        auto record = j.get<ImageRecord>();
        image_index_.emplace(record.id, images_.size());
        images_.push_back(std::move(record));
      } else if (kind == "crop") {
        auto record = j.get<CropRecord>();
        crop_index_.emplace(record.id, crops_.size());
        crops_.push_back(std::move(record));
      } else if (kind == "class_space") {
        auto space = j.get<ClassSpace>();
        spaces_[space.class_name] = std::move(space);
      } else if (kind == "anchor") {
        auto state = j.get<AnchorState>();
        anchors_[state.class_name] = std::move(state);
      } else {
        throw IoError("unknown record kind '" + kind + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw IoError("manifest line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void Catalog::persist_locked() const {
  std::ostringstream out;
  auto emit = [&out](nlohmann::json j, const char* kind) {
    j["kind"] = kind;
    out << j.dump() << '\n';
  };
  for (const auto& r : images_) emit(r, "image");
  for (const auto& r : crops_) emit(r, "crop");
  for (const auto& [cls, s] : spaces_) emit(s, "class_space");
  for (const auto& [cls, a] : anchors_) emit(a, "anchor");
  write_file_atomic(root_ / kManifestName, out.str());
}

void Catalog::check_invariants() const {
  std::shared_lock lock(mutex_);
  for (const auto& image : images_) {
    if (image.width < 1 || image.height < 1) {
      throw ContractError("image " + image.id + " has non-positive dimensions");
    }
  }
  for (const auto& crop : crops_) {
    auto pit = image_index_.find(crop.parent_image);
    if (pit == image_index_.end()) {
      throw ContractError("crop " + crop.id + " references a missing parent image");
    }
    const ImageRecord& parent = images_[pit->second];
    const BBox& b = crop.bbox;
    if (!(0 <= b.x_min && b.x_min < b.x_max && b.x_max <= parent.width && 0 <= b.y_min &&
          b.y_min < b.y_max && b.y_max <= parent.height)) {
      throw ContractError("crop " + crop.id + " bbox outside parent bounds");
    }
    if (crop.distance && !(*crop.distance >= 0.0)) {
      throw ContractError("crop " + crop.id + " has a negative distance");
    }
    if (crop.space == Space::unassigned) {
      if (!crop.space_class.empty()) {
        throw ContractError("unassigned crop " + crop.id + " names a class space");
      }
      continue;
    }
    auto sit = spaces_.find(crop.space_class);
    const bool member =
        sit != spaces_.end() &&
        (crop.space == Space::keyword ? sit->second.keyword_members.count(crop.id)
                                      : sit->second.non_keyword_members.count(crop.id)) != 0;
    if (!member) {
      throw ContractError("crop " + crop.id + " is not a member of its recorded space");
    }
  }
  for (const auto& [cls, space] : spaces_) {
    for (const auto& id : space.keyword_members) {
      if (space.non_keyword_members.count(id)) {
        throw ContractError("class " + cls + ": crop " + id + " is in both spaces");
      }
    }
    for (const auto* members : {&space.keyword_members, &space.non_keyword_members}) {
      for (const auto& id : *members) {
        auto cit = crop_index_.find(id);
        if (cit == crop_index_.end()) {
          throw ContractError("class " + cls + ": member " + id + " does not exist");
        }
        if (crops_[cit->second].space_class != cls) {
          throw ContractError("class " + cls + ": member " + id + " belongs to another space");
        }
      }
    }
  }
}

}  // namespace curator::catalog
