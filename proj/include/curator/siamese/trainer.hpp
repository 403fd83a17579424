#pragma once

#include "curator/siamese/dataset.hpp"
#include "curator/siamese/embedder.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace curator::siamese {

struct TrainConfig {
  double learning_rate = 0.000015;
  int epochs = 30;
  int batch_size = 64;
  std::uint64_t seed = 1;
  double negative_ratio = 19.0;

  /// Throws ConfigurationError on a non-positive rate, epochs < 1 or
  /// batch_size < 1.
  void validate() const;
};

nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  std::optional<double> val_loss;
  std::optional<double> val_average_f1;
  // Over validation pairs: mean similar-pair distance and mean
  // min(dissimilar-pair distance, margin).
  std::optional<double> mean_positive_distance;
  std::optional<double> mean_negative_hinged;
};

struct TrainResult {
  Embedder model;  // weights of the selected epoch
  std::vector<EpochMetrics> history;
  int best_epoch = 0;
  std::optional<double> best_val_average_f1;
};

using EpochCallback = std::function<void(const EpochMetrics&)>;

/// Contrastive training with Adam. Selects the epoch with the best
/// validation average_F1 (lower validation loss, then the earlier epoch,
/// on ties; the last epoch when validation is empty). Throws TrainingError for an empty train split or a non-finite
/// loss, and ContractError when splits overlap or contain an anchor image.
TrainResult train(const std::vector<LabeledImage>& train_split, const std::vector<LabeledImage>& val_split,
                  const AnchorImages& anchors, const EmbedderConfig& embedder_config,
                  const TrainConfig& train_config, const EpochCallback& on_epoch = {});

/// CSV with header `epoch,train_loss,val_loss,val_average_f1`; undefined
/// values are empty fields.
std::string history_csv(const std::vector<EpochMetrics>& history);

}  // namespace curator::siamese
