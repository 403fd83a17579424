#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

namespace curator {

using Bytes = std::vector<std::uint8_t>;

Bytes read_file(const std::filesystem::path& path);

/// Writes to a sibling temp file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const void* data, std::size_t size);
void write_file_atomic(const std::filesystem::path& path, const Bytes& bytes);
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

/// Decodes an encoded image into a 3-channel BGR matrix. Returns an empty
/// matrix when the buffer is not a decodable image.
cv::Mat decode_image(const Bytes& bytes);
cv::Mat load_image(const std::filesystem::path& path);

/// Lossless PNG encoding.
Bytes encode_png(const cv::Mat& image);

/// True for file extensions the importer and fixture provider consider.
bool has_image_extension(const std::filesystem::path& path);

std::string utc_timestamp();

}  // namespace curator
