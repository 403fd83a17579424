#include "curator/workflow/config.hpp"

#include "curator/calibrator/calibrator.hpp"
#include "curator/catalog/types.hpp"
#include "curator/common/errors.hpp"
#include "curator/common/image_io.hpp"

namespace curator::workflow {

namespace fs = std::filesystem;

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

// Provider and detector configs carry paths too.
nlohmann::json resolve_paths(nlohmann::json j, const fs::path& base, std::initializer_list<const char*> keys) {
  for (const char* key : keys) {
    if (j.contains(key) && j[key].is_string()) j[key] = resolve(base, j[key].get<std::string>()).string();
  }
  return j;
}

}  // namespace

void ServiceConfig::validate() const {
  if (default_level < calibrator::kMinLevel || default_level > calibrator::kMaxLevel) {
    throw ConfigurationError("default_level must be in [1, 5]");
  }
  if (workers < 1) throw ConfigurationError("workers must be at least 1");
  if (score_workers < 1) throw ConfigurationError("score_workers must be at least 1");
  if (fan_out < 1) throw ConfigurationError("fan_out must be at least 1");
  if (server.port < 0 || server.port > 65535) throw ConfigurationError("server port out of range");
  embedder.validate();
  training.validate();
  if (data && (data->train_fraction < 0 || data->val_fraction < 0 ||
               data->train_fraction + data->val_fraction > 1.0)) {
    throw ConfigurationError("data split fractions must be non-negative and sum to at most 1");
  }
}

const std::vector<std::string>& ServiceConfig::effective_vocabulary() const {
  return vocabulary.empty() ? catalog::voc_classes() : vocabulary;
}

ServiceConfig parse_config(const nlohmann::json& j, const fs::path& base) {
  ServiceConfig c;
  try {
    c.catalog = resolve(base, j.value("catalog", std::string("catalog")));
    c.vocabulary = j.value("vocabulary", std::vector<std::string>{});
    c.default_level = j.value("default_level", c.default_level);
    c.workers = j.value("workers", c.workers);
    c.score_workers = j.value("score_workers", c.score_workers);
    c.fan_out = j.value("fan_out", c.fan_out);
    c.default_provider = j.value("default_provider", c.default_provider);
    if (j.contains("providers")) {
      for (const auto& [name, p] : j.at("providers").items()) {
        c.providers[name] = resolve_paths(p, base, {"dir"});
      }
    }
    if (j.contains("detector")) {
      c.detector = resolve_paths(j.at("detector"), base, {"annotation_dir", "model_path"});
    }
    if (!c.vocabulary.empty() && !c.detector.contains("vocabulary")) c.detector["vocabulary"] = c.vocabulary;
    if (j.contains("embedder")) c.embedder = siamese::embedder_config_from_json(j.at("embedder"));
    c.checkpoint = resolve(base, j.value("checkpoint", std::string("model.ckpt")));
    if (j.contains("data")) {
      const auto& d = j.at("data");
      DataConfig data;
      data.dir = resolve(base, d.at("dir").get<std::string>());
      data.anchors = resolve(base, d.at("anchors").get<std::string>());
      data.crop = d.value("crop", data.crop);
      data.train_fraction = d.value("train_fraction", data.train_fraction);
      data.val_fraction = d.value("val_fraction", data.val_fraction);
      data.seed = d.value("seed", data.seed);
      c.data = data;
    }
    if (j.contains("training")) {
      const auto& t = j.at("training");
      c.training = siamese::train_config_from_json(t);
      if (t.contains("history")) c.history = resolve(base, t.at("history").get<std::string>());
    }
    if (j.contains("server")) {
      const auto& s = j.at("server");
      c.server.host = s.value("host", c.server.host);
      c.server.port = s.value("port", c.server.port);
      if (s.contains("ui_dir") && s["ui_dir"].is_string()) {
        c.server.ui_dir = resolve(base, s["ui_dir"].get<std::string>());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigurationError(std::string("invalid configuration: ") + e.what());
  }
  c.validate();
  return c;
}

ServiceConfig load_config(const fs::path& path) {
  if (!fs::exists(path)) {
    throw ConfigurationError("config file not found: " + path.string());
  }
  nlohmann::json j;
  try {
    const Bytes bytes = read_file(path);
    j = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigurationError("config file " + path.string() + " is not valid JSON: " + e.what());
  } catch (const IoError& e) {
    throw ConfigurationError("cannot read config file " + path.string() + ": " + e.what());
  }
  ServiceConfig c = parse_config(j, fs::absolute(path).parent_path());
  c.source = path;
  return c;
}

nlohmann::json to_json(const ServiceConfig& c) {
  nlohmann::json j = {{"catalog", c.catalog.string()},
                      {"default_level", c.default_level},
                      {"workers", c.workers},
                      {"score_workers", c.score_workers},
                      {"fan_out", c.fan_out},
                      {"default_provider", c.default_provider},
                      {"providers", c.providers},
                      {"detector", c.detector},
                      {"embedder", siamese::to_json(c.embedder)},
                      {"checkpoint", c.checkpoint.string()},
                      {"training", siamese::to_json(c.training)},
                      {"server", {{"host", c.server.host}, {"port", c.server.port}}}};
  if (!c.vocabulary.empty()) j["vocabulary"] = c.vocabulary;
  if (c.history) j["training"]["history"] = c.history->string();
  if (c.server.ui_dir) j["server"]["ui_dir"] = c.server.ui_dir->string();
  if (c.data) {
    j["data"] = {{"dir", c.data->dir.string()},
                 {"anchors", c.data->anchors.string()},
                 {"crop", c.data->crop},
                 {"train_fraction", c.data->train_fraction},
                 {"val_fraction", c.data->val_fraction},
                 {"seed", c.data->seed}};
  }
  return j;
}

}  // namespace curator::workflow
