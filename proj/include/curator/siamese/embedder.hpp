#pragma once

#include "curator/siamese/nn.hpp"

#include <filesystem>
#include <opencv2/core.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace curator::siamese {

using Embedding = std::vector<double>;

enum class Backbone { small, large, tiny_test };

std::string to_string(Backbone b);
/// Accepts "small", "large", "tiny-test"; throws ConfigurationError otherwise.
Backbone parse_backbone(const std::string& name);

struct EmbedderConfig {
  Backbone backbone = Backbone::tiny_test;
  int embedding_dim = 128;
  double margin = 2.0;
  int input_height = 32;
  int input_width = 32;
  std::uint64_t seed = 1;

  /// Default input size for the backbone: 32x32 for tiny-test, 224x224
  /// otherwise.
  static EmbedderConfig for_backbone(Backbone backbone);
  /// Throws ConfigurationError on embedding_dim < 2, margin <= 0 or a
  /// non-positive input size.
  void validate() const;
};

nlohmann::json to_json(const EmbedderConfig& config);
EmbedderConfig embedder_config_from_json(const nlohmann::json& j);

/// Resize to cover the input size, center crop, convert BGR to RGB and
/// standardize per channel. Throws EmbeddingError for an empty image.
nn::Tensor preprocess(const cv::Mat& bgr, const EmbedderConfig& config);

/// Shared-weight embedding network: backbone followed by a 3-layer head
/// (backbone-out -> 512 -> 256 -> embedding_dim, ELU between layers).
class Embedder {
 public:
  explicit Embedder(EmbedderConfig config);

  const EmbedderConfig& config() const noexcept { return config_; }

  Embedding embed(const nn::Tensor& input) const;
  /// Throws EmbeddingError for undecodable or empty pixels.
  Embedding embed(const cv::Mat& bgr) const;

  std::vector<nn::Tensor> forward_trace(const nn::Tensor& input) const;
  void backward(const std::vector<nn::Tensor>& trace, std::span<const double> grad_embedding);

  std::vector<nn::Parameter*> parameters() { return net_.parameters(); }
  std::size_t parameter_count() const { return net_.parameter_count(); }
  std::size_t backbone_output() const noexcept { return backbone_out_; }
  void zero_grad() { net_.zero_grad(); }

  /// Flattened copy of every parameter value, in a fixed order.
  std::vector<double> weights() const;
  void set_weights(std::span<const double> values);

 private:
  EmbedderConfig config_;
  nn::Sequential net_;
  std::size_t backbone_out_ = 0;
};

/// Euclidean distance; throws ContractError on a length mismatch.
double distance(std::span<const double> u, std::span<const double> v);

/// 0.5 * (y d^2 + (1 - y) max(0, m - d)^2), y = 1 for a similar pair.
/// Throws ContractError for y outside {0, 1}.
double contrastive_loss(int y, double d, double margin);
/// d(loss)/d(d).
double contrastive_loss_grad(int y, double d, double margin);

struct CheckpointMeta {
  EmbedderConfig config;
  std::uint64_t seed = 0;
  int epoch = 0;
  std::optional<double> val_average_f1;
};

/// Text header line, a JSON metadata line, then little-endian doubles.
void save_checkpoint(const std::filesystem::path& path, const Embedder& embedder,
                     const CheckpointMeta& meta);
/// Throws IoError for unreadable or malformed files.
Embedder load_checkpoint(const std::filesystem::path& path, CheckpointMeta* meta = nullptr);

}  // namespace curator::siamese
