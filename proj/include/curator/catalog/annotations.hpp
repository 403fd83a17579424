#pragma once

#include "curator/catalog/types.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace curator::catalog {

/// One object from a sidecar annotation file.
struct Annotation {
  std::string class_name;
  BBox box;

  bool operator==(const Annotation&) const = default;
};

/// Parses `class x_min y_min x_max y_max` lines; blank lines and lines
/// starting with '#' are ignored. Throws ValidationError naming the line.
std::vector<Annotation> parse_annotations(std::string_view text);
std::vector<Annotation> read_annotations(const std::filesystem::path& path);
std::string format_annotations(const std::vector<Annotation>& annotations);

}  // namespace curator::catalog
