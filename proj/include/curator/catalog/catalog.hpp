#pragma once

#include "curator/catalog/types.hpp"
#include "curator/common/image_io.hpp"

#include <filesystem>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <opencv2/core.hpp>

#include "json.hpp"

namespace curator::catalog {

/**
 * Persistent store for images, crops, anchors and the per-class keyword /
 * non-keyword spaces.
 *
 * On disk a catalog is a directory holding:
 *   manifest.jsonl                 one JSON object per record, tagged by "kind"
 *   images/<id>.<ext>              original image bytes
 *   <class>/<space>/<crop_id>.png  crop pixels (lossless)
 *   anchors/<class>.png            one anchor image per class
 *   <documents>                    profiles, reports (JSON)
 *
 * Readers may run concurrently. Mutations are serialized internally and each
 * one rewrites the manifest before returning.
 */
class Catalog {
 public:
  static constexpr const char* kManifestName = "manifest.jsonl";

  explicit Catalog(std::filesystem::path root,
                   std::vector<std::string> vocabulary = voc_classes());

  Catalog(const Catalog&) = delete;
  Catalog& operator=(const Catalog&) = delete;

  const std::filesystem::path& root() const noexcept { return root_; }
  const std::vector<std::string>& vocabulary() const noexcept { return vocabulary_; }
  bool has_class(const std::string& class_name) const;

  // Ingestion ------------------------------------------------------------

  /// Imports every decodable file directly under `dir` in lexicographic
  /// filename order. Undecodable files are skipped and reported.
  ImportResult import_directory(const std::filesystem::path& dir, const std::string& keyword);

  /// Registers one encoded image. The id is the content hash, so registering
  /// the same bytes twice returns the existing record. Throws IngestionError
  /// for undecodable bytes; nothing is written in that case.
  ImageRecord register_image(const Bytes& bytes, ImageSource source, const std::string& origin_uri,
                             const std::string& keyword);

  // Crops ------------------------------------------------------------------

  /// Extracts `bbox` (clamped to the parent) and stores it as an unassigned
  /// crop. Throws RejectionError for zero-area boxes or unknown classes.
  CropRecord save_crop(const ImageRecord& parent, const BBox& bbox,
                       const std::string& detector_class, double confidence);

  /// Moves a crop into `space` of `space_class` (defaults to the crop's
  /// current class space, or its detector class when unassigned).
  CropRecord assign_space(const std::string& crop_id, Space space,
                          std::optional<std::string> space_class = std::nullopt);

  struct Move {
    std::string crop_id;
    Space space;
  };
  /// Applies several moves within one class space under a single lock.
  /// Every id is validated before anything changes.
  void assign_spaces(const std::string& space_class, const std::vector<Move>& moves);

  void set_distances(const std::vector<std::pair<std::string, double>>& distances);

  Page query(Space space, const std::string& class_name, std::size_t limit,
             std::size_t offset) const;

  std::optional<ImageRecord> find_image(const std::string& id) const;
  std::optional<CropRecord> find_crop(const std::string& id) const;
  std::vector<ImageRecord> images() const;
  std::vector<CropRecord> crops() const;
  ClassSpace class_space(const std::string& class_name) const;

  std::filesystem::path image_path(const ImageRecord& record) const;
  std::filesystem::path crop_path(const CropRecord& record) const;
  cv::Mat load_image_pixels(const ImageRecord& record) const;
  cv::Mat load_crop_pixels(const std::string& crop_id) const;

  // Anchors ----------------------------------------------------------------

  /// Replaces the anchor of `class_name`. Identical bytes are a no-op;
  /// otherwise existing scores and profile for that class become stale.
  AnchorUpdate set_anchor(const std::string& class_name, const Bytes& image_bytes);
  AnchorSet anchors() const;
  std::optional<AnchorState> anchor_state(const std::string& class_name) const;
  cv::Mat load_anchor(const std::string& class_name) const;
  void mark_scores_fresh(const std::string& class_name);
  void mark_profile_fresh(const std::string& class_name);

  // Documents --------------------------------------------------------------

  void put_document(const std::string& relative_path, const nlohmann::json& doc);
  std::optional<nlohmann::json> get_document(const std::string& relative_path) const;

  /// Drops in-memory state and reloads the manifest from disk.
  void reload();

  /// Throws ContractError naming the first violated invariant: space
  /// disjointness, dangling members, bbox bounds, crop/space agreement.
  void check_invariants() const;

 private:
  void load_locked();
  void persist_locked() const;
  void require_class(const std::string& class_name) const;
  CropRecord& crop_locked(const std::string& id);
  ClassSpace& space_locked(const std::string& class_name);
  void move_locked(CropRecord& crop, Space space, const std::string& space_class);
  std::filesystem::path crop_path_locked(const CropRecord& record) const;

  std::filesystem::path root_;
  std::vector<std::string> vocabulary_;

  mutable std::shared_mutex mutex_;
  std::vector<ImageRecord> images_;
  std::unordered_map<std::string, std::size_t> image_index_;
  std::vector<CropRecord> crops_;
  std::unordered_map<std::string, std::size_t> crop_index_;
  std::map<std::string, ClassSpace> spaces_;
  std::map<std::string, AnchorState> anchors_;
};

}  // namespace curator::catalog
