#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

/// Minimal CPU neural-network layers in double precision. Layers keep no
/// activation state: forward is const and safe to call concurrently, and
/// backward receives the forward input/output and accumulates parameter
/// gradients.
namespace curator::siamese::nn {

struct Tensor {
  int c = 0;
  int h = 1;
  int w = 1;
  std::vector<double> v;

  Tensor() = default;
  Tensor(int channels, int height, int width, double fill = 0.0)
      : c(channels), h(height), w(width),
        v(static_cast<std::size_t>(channels) * height * width, fill) {}

  std::size_t size() const noexcept { return v.size(); }
  double& at(int ch, int y, int x) { return v[(static_cast<std::size_t>(ch) * h + y) * w + x]; }
  double at(int ch, int y, int x) const { return v[(static_cast<std::size_t>(ch) * h + y) * w + x]; }
};

struct Parameter {
  std::vector<double> value;
  std::vector<double> grad;

  explicit Parameter(std::size_t n = 0) : value(n, 0.0), grad(n, 0.0) {}
};

/// Portable seeded initializer; independent of the standard library's
/// distribution implementations.
class Initializer {
 public:
  explicit Initializer(std::uint64_t seed) : rng_(seed) {}
  double uniform(double lo, double hi);

 private:
  std::mt19937_64 rng_;
};

class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor forward(const Tensor& in) const = 0;
  /// Returns dL/d(in) and adds dL/d(params) into each parameter's grad.
  virtual Tensor backward(const Tensor& in, const Tensor& out, const Tensor& grad_out) = 0;
  virtual std::vector<Parameter*> parameters() { return {}; }
  virtual std::string describe() const = 0;
};

/// Square kernel convolution with zero padding and channel groups
/// (groups == in_channels gives a depthwise convolution).
class Conv2d final : public Layer {
 public:
  Conv2d(int in_channels, int out_channels, int kernel, int stride, int padding, int groups,
         Initializer& init);
  Tensor forward(const Tensor& in) const override;
  Tensor backward(const Tensor& in, const Tensor& out, const Tensor& grad_out) override;
  std::vector<Parameter*> parameters() override { return {&weight_, &bias_}; }
  std::string describe() const override;

  Parameter& weight() { return weight_; }

 private:
  int out_size(int n) const { return (n + 2 * pad_ - k_) / stride_ + 1; }

  int in_, out_, k_, stride_, pad_, groups_;
  Parameter weight_;  // [out][in / groups][k][k]
  Parameter bias_;
};

/// Fully connected layer over the flattened input.
class Linear final : public Layer {
 public:
  Linear(int in_features, int out_features, Initializer& init);
  Tensor forward(const Tensor& in) const override;
  Tensor backward(const Tensor& in, const Tensor& out, const Tensor& grad_out) override;
  std::vector<Parameter*> parameters() override { return {&weight_, &bias_}; }
  std::string describe() const override;

 private:
  int in_, out_;
  Parameter weight_;  // [out][in]
  Parameter bias_;
};

/// ELU with alpha = 1.
class Elu final : public Layer {
 public:
  Tensor forward(const Tensor& in) const override;
  Tensor backward(const Tensor& in, const Tensor& out, const Tensor& grad_out) override;
  std::string describe() const override { return "elu"; }
};

/// 2x2 max pooling, stride 2; odd trailing rows/columns are dropped.
class MaxPool2 final : public Layer {
 public:
  Tensor forward(const Tensor& in) const override;
  Tensor backward(const Tensor& in, const Tensor& out, const Tensor& grad_out) override;
  std::string describe() const override { return "maxpool2"; }
};

class GlobalAvgPool final : public Layer {
 public:
  Tensor forward(const Tensor& in) const override;
  Tensor backward(const Tensor& in, const Tensor& out, const Tensor& grad_out) override;
  std::string describe() const override { return "gap"; }
};

class Sequential {
 public:
  void add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }

  Tensor forward(const Tensor& in) const;
  /// All intermediate activations; trace[0] is the input.
  std::vector<Tensor> forward_trace(const Tensor& in) const;
  /// Backpropagates through a trace produced by forward_trace.
  Tensor backward(const std::vector<Tensor>& trace, const Tensor& grad_out);

  std::vector<Parameter*> parameters();
  std::size_t parameter_count() const;
  void zero_grad();
  std::size_t size() const noexcept { return layers_.size(); }
  Layer& layer(std::size_t i) { return *layers_[i]; }

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

}  // namespace curator::siamese::nn
