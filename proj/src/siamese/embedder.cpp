#include "curator/siamese/embedder.hpp"

#include "curator/common/errors.hpp"
#include "curator/common/image_io.hpp"

#include <opencv2/imgproc.hpp>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace curator::siamese {

namespace {

constexpr const char* kCheckpointMagic = "CURATOR-SIAMESE 1";

struct Block {
  int out;
  int stride;
};

void add_conv(nn::Sequential& net, int in, int out, int k, int stride, int groups, nn::Initializer& init) {
  net.add(std::make_unique<nn::Conv2d>(in, out, k, stride, k / 2, groups, init));
  net.add(std::make_unique<nn::Elu>());
}

// Depthwise-separable stack: strided stem, (depthwise 3x3, pointwise 1x1)
// blocks, a 1x1 expansion and global average pooling.
std::size_t build_mobile(nn::Sequential& net, int stem, const std::vector<Block>& blocks, int head,
                         nn::Initializer& init) {
  add_conv(net, 3, stem, 3, 2, 1, init);
  int channels = stem;
  for (const Block& b : blocks) {
    add_conv(net, channels, channels, 3, b.stride, channels, init);
    add_conv(net, channels, b.out, 1, 1, 1, init);
    channels = b.out;
  }
  add_conv(net, channels, head, 1, 1, 1, init);
  net.add(std::make_unique<nn::GlobalAvgPool>());
  return static_cast<std::size_t>(head);
}

std::size_t build_tiny(nn::Sequential& net, const EmbedderConfig& config, nn::Initializer& init) {
  int channels = 3, h = config.input_height, w = config.input_width;
  for (int out : {8, 16, 32}) {
    add_conv(net, channels, out, 3, 1, 1, init);
    net.add(std::make_unique<nn::MaxPool2>());
    channels = out;
    h /= 2;
    w /= 2;
  }
  if (h < 1 || w < 1) {
    throw ConfigurationError("tiny-test input must be at least 8x8");
  }
  return static_cast<std::size_t>(channels) * h * w;
}

void put_u64(std::ostream& out, std::uint64_t x) {
  for (int i = 0; i < 8; ++i) out.put(static_cast<char>((x >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(std::istream& in) {
  std::uint64_t x = 0;
  for (int i = 0; i < 8; ++i) {
    const int c = in.get();
    if (c == EOF) throw IoError("checkpoint truncated");
    x |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return x;
}

}  // namespace

std::string to_string(Backbone b) {
  switch (b) {
    case Backbone::small: return "small";
    case Backbone::large: return "large";
    case Backbone::tiny_test: return "tiny-test";
  }
  return "unknown";
}

Backbone parse_backbone(const std::string& name) {
  if (name == "small") return Backbone::small;
  if (name == "large") return Backbone::large;
  if (name == "tiny-test") return Backbone::tiny_test;
  throw ConfigurationError("unknown backbone '" + name + "' (expected small, large or tiny-test)");
}

EmbedderConfig EmbedderConfig::for_backbone(Backbone backbone) {
  EmbedderConfig c;
  c.backbone = backbone;
  if (backbone != Backbone::tiny_test) {
    c.input_height = c.input_width = 224;
  }
  return c;
}

void EmbedderConfig::validate() const {
  if (embedding_dim < 2) throw ConfigurationError("embedding_dim must be at least 2");
  if (!(margin > 0.0) || !std::isfinite(margin)) throw ConfigurationError("margin must be positive");
  if (input_height < 1 || input_width < 1) throw ConfigurationError("input size must be positive");
}

nlohmann::json to_json(const EmbedderConfig& c) {
  return {{"backbone", to_string(c.backbone)}, {"embedding_dim", c.embedding_dim},
          {"margin", c.margin},                {"input_size", {c.input_height, c.input_width}},
          {"seed", c.seed}};
}

EmbedderConfig embedder_config_from_json(const nlohmann::json& j) {
  EmbedderConfig c = EmbedderConfig::for_backbone(parse_backbone(j.value("backbone", std::string("tiny-test"))));
  c.embedding_dim = j.value("embedding_dim", c.embedding_dim);
  c.margin = j.value("margin", c.margin);
  if (j.contains("input_size")) {
    c.input_height = j.at("input_size").at(0).get<int>();
    c.input_width = j.at("input_size").at(1).get<int>();
  }
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

nn::Tensor preprocess(const cv::Mat& bgr, const EmbedderConfig& config) {
  if (bgr.empty()) {
    throw EmbeddingError("cannot embed an empty image");
  }
  cv::Mat image = bgr;
  if (image.channels() == 1) {
    cv::cvtColor(image, image, cv::COLOR_GRAY2BGR);
  } else if (image.channels() == 4) {
    cv::cvtColor(image, image, cv::COLOR_BGRA2BGR);
  }
  const int th = config.input_height, tw = config.input_width;
  const double scale = std::max(static_cast<double>(th) / image.rows, static_cast<double>(tw) / image.cols);
  const int rh = std::max(th, static_cast<int>(std::lround(image.rows * scale)));
  const int rw = std::max(tw, static_cast<int>(std::lround(image.cols * scale)));
  cv::Mat resized;
  cv::resize(image, resized, cv::Size(rw, rh), 0, 0, scale < 1.0 ? cv::INTER_AREA : cv::INTER_LINEAR);
  const cv::Mat cropped = resized(cv::Rect((rw - tw) / 2, (rh - th) / 2, tw, th));

  std::array<double, 3> mean{0.5, 0.5, 0.5}, stdev{0.5, 0.5, 0.5};
  if (config.backbone != Backbone::tiny_test) {
    mean = {0.485, 0.456, 0.406};
    stdev = {0.229, 0.224, 0.225};
  }
  nn::Tensor t(3, th, tw);
  for (int y = 0; y < th; ++y) {
    const auto* row = cropped.ptr<cv::Vec3b>(y);
    for (int x = 0; x < tw; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double value = row[x][2 - c] / 255.0;  // BGR -> RGB
        t.at(c, y, x) = (value - mean[static_cast<std::size_t>(c)]) / stdev[static_cast<std::size_t>(c)];
      }
    }
  }
  return t;
}

Embedder::Embedder(EmbedderConfig config) : config_(config) {
  config_.validate();
  nn::Initializer init(config_.seed);
  switch (config_.backbone) {
    case Backbone::tiny_test:
      backbone_out_ = build_tiny(net_, config_, init);
      break;
    case Backbone::small:
      backbone_out_ = build_mobile(net_, 16, {{24, 2}, {24, 1}, {40, 2}, {48, 1}, {96, 2}, {96, 1}}, 576, init);
      break;
    case Backbone::large:
      backbone_out_ = build_mobile(
          net_, 16, {{24, 2}, {24, 1}, {40, 2}, {40, 1}, {80, 2}, {80, 1}, {112, 1}, {160, 2}, {160, 1}},
          960, init);
      break;
  }
  const int out = static_cast<int>(backbone_out_);
  net_.add(std::make_unique<nn::Linear>(out, 512, init));
  net_.add(std::make_unique<nn::Elu>());
  net_.add(std::make_unique<nn::Linear>(512, 256, init));
  net_.add(std::make_unique<nn::Elu>());
  net_.add(std::make_unique<nn::Linear>(256, config_.embedding_dim, init));
}

Embedding Embedder::embed(const nn::Tensor& input) const {
  if (input.c != 3 || input.h != config_.input_height || input.w != config_.input_width) {
    throw EmbeddingError("input tensor does not match the configured input size");
  }
  Embedding e = net_.forward(input).v;
  for (double x : e) {
    if (!std::isfinite(x)) throw EmbeddingError("embedding is not finite");
  }
  return e;
}

Embedding Embedder::embed(const cv::Mat& bgr) const { return embed(preprocess(bgr, config_)); }

std::vector<nn::Tensor> Embedder::forward_trace(const nn::Tensor& input) const {
  return net_.forward_trace(input);
}

void Embedder::backward(const std::vector<nn::Tensor>& trace, std::span<const double> grad_embedding) {
  nn::Tensor g(static_cast<int>(grad_embedding.size()), 1, 1);
  std::copy(grad_embedding.begin(), grad_embedding.end(), g.v.begin());
  net_.backward(trace, g);
}

std::vector<double> Embedder::weights() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (nn::Parameter* p : const_cast<nn::Sequential&>(net_).parameters()) {
    out.insert(out.end(), p->value.begin(), p->value.end());
  }
  return out;
}

void Embedder::set_weights(std::span<const double> values) {
  if (values.size() != parameter_count()) {
    throw ContractError("weight count mismatch: expected " + std::to_string(parameter_count()) + ", got " +
                        std::to_string(values.size()));
  }
  std::size_t offset = 0;
  for (nn::Parameter* p : net_.parameters()) {
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(offset), p->value.size(), p->value.begin());
    offset += p->value.size();
  }
}

double distance(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw ContractError("distance: embedding lengths differ (" + std::to_string(u.size()) + " vs " +
                        std::to_string(v.size()) + ")");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double d = u[i] - v[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

double contrastive_loss(int y, double d, double margin) {
  if (y != 0 && y != 1) {
    throw ContractError("contrastive loss label must be 0 or 1, got " + std::to_string(y));
  }
  const double hinge = std::max(0.0, margin - d);
  return 0.5 * (y * d * d + (1 - y) * hinge * hinge);
}

double contrastive_loss_grad(int y, double d, double margin) {
  if (y != 0 && y != 1) {
    throw ContractError("contrastive loss label must be 0 or 1, got " + std::to_string(y));
  }
  return y * d - (1 - y) * std::max(0.0, margin - d);
}

void save_checkpoint(const std::filesystem::path& path, const Embedder& embedder, const CheckpointMeta& meta) {
  nlohmann::json header = {{"config", to_json(embedder.config())},
                           {"seed", meta.seed},
                           {"epoch", meta.epoch},
                           {"val_average_f1", meta.val_average_f1 ? nlohmann::json(*meta.val_average_f1)
                                                                  : nlohmann::json(nullptr)},
                           {"parameter_count", embedder.parameter_count()}};
  std::ostringstream out;
  out << kCheckpointMagic << '\n' << header.dump() << '\n';
  const auto weights = embedder.weights();
  put_u64(out, weights.size());
  for (double w : weights) put_u64(out, std::bit_cast<std::uint64_t>(w));
  write_file_atomic(path, out.str());
}

Embedder load_checkpoint(const std::filesystem::path& path, CheckpointMeta* meta) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::string magic, header_line;
  std::getline(in, magic);
  if (magic != kCheckpointMagic) throw IoError("not a checkpoint: " + path.string());
  std::getline(in, header_line);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_line);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("corrupt checkpoint header in " + path.string() + ": " + e.what());
  }
  CheckpointMeta m;
  m.config = embedder_config_from_json(header.at("config"));
  m.seed = header.value("seed", std::uint64_t{0});
  m.epoch = header.value("epoch", 0);
  if (header.contains("val_average_f1") && !header["val_average_f1"].is_null()) {
    m.val_average_f1 = header["val_average_f1"].get<double>();
  }
  Embedder embedder(m.config);
  const std::uint64_t n = get_u64(in);
  if (n != embedder.parameter_count()) {
    throw IoError("checkpoint " + path.string() + " holds " + std::to_string(n) + " weights, expected " +
                  std::to_string(embedder.parameter_count()));
  }
  std::vector<double> weights(n);
  for (auto& w : weights) w = std::bit_cast<double>(get_u64(in));
  embedder.set_weights(weights);
  if (meta) *meta = m;
  return embedder;
}

}  // namespace curator::siamese
