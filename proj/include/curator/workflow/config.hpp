#pragma once

#include "curator/siamese/embedder.hpp"
#include "curator/siamese/trainer.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace curator::workflow {

/// Labeled corpus used for training, calibration and evaluation: a directory
/// of images with annotation sidecars plus a directory of `<class>.png`
/// anchors.
struct DataConfig {
  std::filesystem::path dir;
  std::filesystem::path anchors;
  bool crop = true;
  double train_fraction = 0.5;
  double val_fraction = 0.25;
  std::uint64_t seed = 1;
};

struct ServerConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::optional<std::filesystem::path> ui_dir;
};

/// One JSON file drives every command. Relative paths are resolved against
/// the file's directory.
struct ServiceConfig {
  std::filesystem::path source;  // the config file itself, if loaded from disk
  std::filesystem::path catalog = "catalog";
  std::vector<std::string> vocabulary;  // empty: the 20 VOC classes
  int default_level = 3;
  std::size_t workers = 2;
  std::size_t score_workers = 2;
  std::size_t fan_out = 4;
  std::string default_provider = "fixture";
  nlohmann::json providers = nlohmann::json::object();  // name -> provider config
  nlohmann::json detector = {{"backend", "oracle"}};
  siamese::EmbedderConfig embedder;
  std::filesystem::path checkpoint = "model.ckpt";
  std::optional<DataConfig> data;
  siamese::TrainConfig training;
  std::optional<std::filesystem::path> history;
  ServerConfig server;

  /// Throws ConfigurationError for out-of-range values.
  void validate() const;
  const std::vector<std::string>& effective_vocabulary() const;
};

/// Throws ConfigurationError naming the path when the file is missing or
/// malformed.
ServiceConfig load_config(const std::filesystem::path& path);
ServiceConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
nlohmann::json to_json(const ServiceConfig& config);

}  // namespace curator::workflow
