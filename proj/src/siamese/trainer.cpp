#include "curator/siamese/trainer.hpp"

#include "curator/common/errors.hpp"
#include "curator/common/hash.hpp"
#include "curator/siamese/pairs.hpp"
#include "curator/siamese/scoring.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

namespace curator::siamese {

namespace {

class Adam {
 public:
  explicit Adam(std::vector<nn::Parameter*> params, double lr) : params_(std::move(params)), lr_(lr) {
    for (const auto* p : params_) {
      m_.emplace_back(p->value.size(), 0.0);
      v_.emplace_back(p->value.size(), 0.0);
    }
  }

  void step() {
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, t_);
    const double c2 = 1.0 - std::pow(kBeta2, t_);
    for (std::size_t k = 0; k < params_.size(); ++k) {
      auto& p = *params_[k];
      auto& m = m_[k];
      auto& v = v_[k];
      for (std::size_t i = 0; i < p.value.size(); ++i) {
        const double g = p.grad[i];
        m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g;
        v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g * g;
        p.value[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + kEps);
      }
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  std::vector<nn::Parameter*> params_;
  std::vector<std::vector<double>> m_, v_;
  double lr_;
  int t_ = 0;
};

std::string pixel_hash(const cv::Mat& m) {
  const cv::Mat c = m.isContinuous() ? m : m.clone();
  std::string key = std::to_string(c.rows) + "x" + std::to_string(c.cols) + "x" + std::to_string(c.type()) + ":";
  key.append(reinterpret_cast<const char*>(c.data), c.total() * c.elemSize());
  return sha256_hex(key);
}

void check_splits(const std::vector<LabeledImage>& train, const std::vector<LabeledImage>& val,
                  const AnchorImages& anchors) {
  std::set<std::string> ids;
  for (const auto& item : train) ids.insert(item.id);
  for (const auto& item : val) {
    if (ids.count(item.id)) throw ContractError("item " + item.id + " is in both train and validation splits");
  }
  std::set<std::string> anchor_hashes;
  for (const auto& [cls, image] : anchors) anchor_hashes.insert(pixel_hash(image));
  for (const auto* split : {&train, &val}) {
    for (const auto& item : *split) {
      if (anchor_hashes.count(pixel_hash(item.pixels))) {
        throw ContractError("item " + item.id + " is an anchor image");
      }
    }
  }
}

struct Prepared {
  std::vector<nn::Tensor> items;
  std::vector<std::string> classes;
  std::map<std::string, nn::Tensor> anchors;
};

Prepared prepare(const std::vector<LabeledImage>& split, const AnchorImages& anchors, const EmbedderConfig& config) {
  Prepared p;
  for (const auto& item : split) {
    p.items.push_back(preprocess(item.pixels, config));
    p.classes.push_back(item.class_name);
  }
  for (const auto& [cls, image] : anchors) p.anchors[cls] = preprocess(image, config);
  return p;
}

std::set<std::string> anchor_classes(const AnchorImages& anchors) {
  std::set<std::string> out;
  for (const auto& [cls, image] : anchors) out.insert(cls);
  return out;
}

std::string format_optional(const std::optional<double>& x) {
  if (!x) return "";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", *x);
  return buf;
}

// Validation pairs are drawn once so every epoch is measured on the same set.
void evaluate(const Embedder& model, const Prepared& val, const std::vector<PairSample>& pairs,
              const std::vector<LabeledImage>& val_split, const AnchorImages& anchors, EpochMetrics& out) {
  if (val.items.empty()) return;
  std::vector<Embedding> item_emb;
  for (const auto& t : val.items) item_emb.push_back(model.embed(t));
  std::map<std::string, Embedding> anchor_emb;
  for (const auto& [cls, t] : val.anchors) anchor_emb[cls] = model.embed(t);

  const double m = model.config().margin;
  double loss = 0.0, pos = 0.0, neg = 0.0;
  std::size_t n_pos = 0, n_neg = 0;
  for (const auto& p : pairs) {
    const double d = distance(item_emb[p.item], anchor_emb.at(p.anchor_class));
    loss += contrastive_loss(p.y, d, m);
    if (p.y == 1) {
      pos += d;
      ++n_pos;
    } else {
      neg += std::min(d, m);
      ++n_neg;
    }
  }
  if (!pairs.empty()) out.val_loss = loss / static_cast<double>(pairs.size());
  if (n_pos) out.mean_positive_distance = pos / static_cast<double>(n_pos);
  if (n_neg) out.mean_negative_hinged = neg / static_cast<double>(n_neg);

  DistanceTable table;
  const auto classes = anchor_classes(anchors);
  table.classes.assign(classes.begin(), classes.end());
  for (std::size_t i = 0; i < val.items.size(); ++i) {
    table.item_ids.push_back(val_split[i].id);
    table.item_classes.push_back(val.classes[i]);
    std::vector<double> row;
    for (const auto& cls : table.classes) row.push_back(distance(item_emb[i], anchor_emb.at(cls)));
    table.d.push_back(std::move(row));
  }
  out.val_average_f1 = macro_average_f1(table);
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigurationError("learning rate must be positive");
  }
  if (epochs < 1) throw ConfigurationError("epochs must be at least 1");
  if (batch_size < 1) throw ConfigurationError("batch size must be at least 1");
  if (!(negative_ratio >= 0.0)) throw ConfigurationError("negative_ratio must be non-negative");
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"epochs", c.epochs}, {"batch_size", c.batch_size},
          {"seed", c.seed},                   {"negative_ratio", c.negative_ratio}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.seed = j.value("seed", c.seed);
  c.negative_ratio = j.value("negative_ratio", c.negative_ratio);
  c.validate();
  return c;
}

TrainResult train(const std::vector<LabeledImage>& train_split, const std::vector<LabeledImage>& val_split,
                  const AnchorImages& anchors, const EmbedderConfig& embedder_config,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  if (train_split.empty()) {
    throw TrainingError("training split is empty");
  }
  check_splits(train_split, val_split, anchors);

  Embedder model(embedder_config);
  const double margin = embedder_config.margin;
  const Prepared train = prepare(train_split, anchors, embedder_config);
  const Prepared val = prepare(val_split, anchors, embedder_config);
  const auto classes = anchor_classes(anchors);
  const auto val_pairs = val.items.empty()
                             ? std::vector<PairSample>{}
                             : sample_pairs(val.classes, classes, config.negative_ratio, mix64(config.seed ^ 0x7661));

  Adam adam(model.parameters(), config.learning_rate);
  TrainResult result{Embedder(embedder_config), {}, 0, std::nullopt};
  std::vector<double> best_weights;
  std::optional<double> best_val_loss;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto pairs = sample_pairs(train.classes, classes, config.negative_ratio,
                                    mix64(config.seed + static_cast<std::uint64_t>(epoch)));
    double loss_sum = 0.0;
    const auto batch = static_cast<std::size_t>(config.batch_size);
    for (std::size_t start = 0, b = 0; start < pairs.size(); start += batch, ++b) {
      const std::size_t end = std::min(pairs.size(), start + batch);
      const double scale = 1.0 / static_cast<double>(end - start);

      const auto diagnostics = [&](const std::string& what) {
        return what + " at epoch " + std::to_string(epoch) + ", batch " + std::to_string(b) +
               " (learning rate " + std::to_string(config.learning_rate) + "); lower the learning rate";
      };
      // Embed each distinct image once; both branches share the weights.
      std::map<std::size_t, Embedding> items;
      std::map<std::string, Embedding> anchor_emb;
      try {
        for (std::size_t k = start; k < end; ++k) {
          if (!items.count(pairs[k].item)) items[pairs[k].item] = model.embed(train.items[pairs[k].item]);
          if (!anchor_emb.count(pairs[k].anchor_class)) {
            anchor_emb[pairs[k].anchor_class] = model.embed(train.anchors.at(pairs[k].anchor_class));
          }
        }
      } catch (const EmbeddingError&) {
        throw TrainingError(diagnostics("non-finite embedding"));
      }
      std::map<std::size_t, std::vector<double>> item_grad;
      std::map<std::string, std::vector<double>> anchor_grad;
      double batch_loss = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const auto& p = pairs[k];
        const Embedding& u = items[p.item];
        const Embedding& v = anchor_emb[p.anchor_class];
        const double d = distance(u, v);
        batch_loss += contrastive_loss(p.y, d, margin);
        const double g = contrastive_loss_grad(p.y, d, margin) * scale;
        if (g == 0.0 || d == 0.0) continue;
        auto& gu = item_grad.try_emplace(p.item, u.size(), 0.0).first->second;
        auto& gv = anchor_grad.try_emplace(p.anchor_class, v.size(), 0.0).first->second;
        for (std::size_t i = 0; i < u.size(); ++i) {
          const double gi = g * (u[i] - v[i]) / d;
          gu[i] += gi;
          gv[i] -= gi;
        }
      }
      if (!std::isfinite(batch_loss)) {
        throw TrainingError(diagnostics("non-finite loss"));
      }
      loss_sum += batch_loss;

      model.zero_grad();
      for (const auto& [idx, grad] : item_grad) model.backward(model.forward_trace(train.items[idx]), grad);
      for (const auto& [cls, grad] : anchor_grad) model.backward(model.forward_trace(train.anchors.at(cls)), grad);
      adam.step();
    }

    EpochMetrics metrics;
    metrics.epoch = epoch;
    metrics.train_loss = loss_sum / static_cast<double>(pairs.size());
    evaluate(model, val, val_pairs, val_split, anchors, metrics);
    result.history.push_back(metrics);

    // Higher validation F1 wins; F1 ties (common once it saturates) go to
    // the lower validation loss, then the earlier epoch. Without a defined
    // validation score the latest epoch wins.
    bool better = !result.best_val_average_f1;
    if (metrics.val_average_f1 && result.best_val_average_f1) {
      better = *metrics.val_average_f1 > *result.best_val_average_f1 ||
               (*metrics.val_average_f1 == *result.best_val_average_f1 && metrics.val_loss && best_val_loss &&
                *metrics.val_loss < *best_val_loss);
    }
    if (better) {
      best_val_loss = metrics.val_loss;
      best_weights = model.weights();
      result.best_epoch = epoch;
      result.best_val_average_f1 = metrics.val_average_f1;
    }
    if (on_epoch) on_epoch(metrics);
  }
  result.model.set_weights(best_weights);
  return result;
}

std::string history_csv(const std::vector<EpochMetrics>& history) {
  std::ostringstream out;
  out << "epoch,train_loss,val_loss,val_average_f1\n";
  for (const auto& h : history) {
    out << h.epoch << ',' << format_optional(h.train_loss) << ',' << format_optional(h.val_loss) << ','
        << format_optional(h.val_average_f1) << '\n';
  }
  return out.str();
}

}  // namespace curator::siamese
