#include "curator/siamese/nn.hpp"

#include "curator/common/errors.hpp"

#include <cmath>

namespace curator::siamese::nn {

double Initializer::uniform(double lo, double hi) {
  const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

namespace {

void he_uniform(Parameter& p, int fan_in, Initializer& init) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (double& x : p.value) x = init.uniform(-bound, bound);
}

void require_shape(const Tensor& t, int c, const char* layer) {
  if (t.c != c) {
    throw ContractError(std::string(layer) + ": expected " + std::to_string(c) + " input channels, got " +
                        std::to_string(t.c));
  }
}

}  // namespace

// Conv2d -------------------------------------------------------------------------

Conv2d::Conv2d(int in_channels, int out_channels, int kernel, int stride, int padding, int groups,
               Initializer& init)
    : in_(in_channels), out_(out_channels), k_(kernel), stride_(stride), pad_(padding), groups_(groups) {
  if (groups < 1 || in_channels % groups != 0 || out_channels % groups != 0) {
    throw ConfigurationError("conv: channels must divide evenly into groups");
  }
  const int per_group = in_ / groups_;
  weight_ = Parameter(static_cast<std::size_t>(out_) * per_group * k_ * k_);
  bias_ = Parameter(static_cast<std::size_t>(out_));
  he_uniform(weight_, per_group * k_ * k_, init);
}

Tensor Conv2d::forward(const Tensor& in) const {
  require_shape(in, in_, "conv");
  const int oh = out_size(in.h), ow = out_size(in.w);
  Tensor out(out_, oh, ow);
  const int in_per = in_ / groups_, out_per = out_ / groups_;
  for (int oc = 0; oc < out_; ++oc) {
    const int ic0 = (oc / out_per) * in_per;
    const double* wbase = &weight_.value[static_cast<std::size_t>(oc) * in_per * k_ * k_];
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        double sum = bias_.value[static_cast<std::size_t>(oc)];
        for (int i = 0; i < in_per; ++i) {
          const double* wk = wbase + static_cast<std::size_t>(i) * k_ * k_;
          for (int ky = 0; ky < k_; ++ky) {
            const int iy = oy * stride_ - pad_ + ky;
            if (iy < 0 || iy >= in.h) continue;
            for (int kx = 0; kx < k_; ++kx) {
              const int ix = ox * stride_ - pad_ + kx;
              if (ix < 0 || ix >= in.w) continue;
              sum += wk[ky * k_ + kx] * in.at(ic0 + i, iy, ix);
            }
          }
        }
        out.at(oc, oy, ox) = sum;
      }
    }
  }
  return out;
}

Tensor Conv2d::backward(const Tensor& in, const Tensor& out, const Tensor& grad_out) {
  Tensor grad_in(in.c, in.h, in.w);
  const int in_per = in_ / groups_, out_per = out_ / groups_;
  for (int oc = 0; oc < out_; ++oc) {
    const int ic0 = (oc / out_per) * in_per;
    const std::size_t woff = static_cast<std::size_t>(oc) * in_per * k_ * k_;
    const double* wbase = &weight_.value[woff];
    double* gbase = &weight_.grad[woff];
    for (int oy = 0; oy < out.h; ++oy) {
      for (int ox = 0; ox < out.w; ++ox) {
        const double g = grad_out.at(oc, oy, ox);
        if (g == 0.0) continue;
        bias_.grad[static_cast<std::size_t>(oc)] += g;
        for (int i = 0; i < in_per; ++i) {
          const std::size_t koff = static_cast<std::size_t>(i) * k_ * k_;
          for (int ky = 0; ky < k_; ++ky) {
            const int iy = oy * stride_ - pad_ + ky;
            if (iy < 0 || iy >= in.h) continue;
            for (int kx = 0; kx < k_; ++kx) {
              const int ix = ox * stride_ - pad_ + kx;
              if (ix < 0 || ix >= in.w) continue;
              gbase[koff + ky * k_ + kx] += g * in.at(ic0 + i, iy, ix);
              grad_in.at(ic0 + i, iy, ix) += g * wbase[koff + ky * k_ + kx];
            }
          }
        }
      }
    }
  }
  return grad_in;
}

std::string Conv2d::describe() const {
  return "conv" + std::to_string(k_) + "x" + std::to_string(k_) + "(" + std::to_string(in_) + "->" +
         std::to_string(out_) + ",s" + std::to_string(stride_) + ",g" + std::to_string(groups_) + ")";
}

// Linear -------------------------------------------------------------------------

Linear::Linear(int in_features, int out_features, Initializer& init)
    : in_(in_features), out_(out_features),
      weight_(static_cast<std::size_t>(in_features) * out_features),
      bias_(static_cast<std::size_t>(out_features)) {
  he_uniform(weight_, in_, init);
}

Tensor Linear::forward(const Tensor& in) const {
  if (static_cast<int>(in.size()) != in_) {
    throw ContractError("linear: expected " + std::to_string(in_) + " inputs, got " +
                        std::to_string(in.size()));
  }
  Tensor out(out_, 1, 1);
  for (int o = 0; o < out_; ++o) {
    const double* row = &weight_.value[static_cast<std::size_t>(o) * in_];
    double sum = bias_.value[static_cast<std::size_t>(o)];
    for (int i = 0; i < in_; ++i) sum += row[i] * in.v[static_cast<std::size_t>(i)];
    out.v[static_cast<std::size_t>(o)] = sum;
  }
  return out;
}

Tensor Linear::backward(const Tensor& in, const Tensor&, const Tensor& grad_out) {
  Tensor grad_in(in.c, in.h, in.w);
  for (int o = 0; o < out_; ++o) {
    const double g = grad_out.v[static_cast<std::size_t>(o)];
    if (g == 0.0) continue;
    bias_.grad[static_cast<std::size_t>(o)] += g;
    const double* row = &weight_.value[static_cast<std::size_t>(o) * in_];
    double* grow = &weight_.grad[static_cast<std::size_t>(o) * in_];
    for (int i = 0; i < in_; ++i) {
      grow[i] += g * in.v[static_cast<std::size_t>(i)];
      grad_in.v[static_cast<std::size_t>(i)] += g * row[i];
    }
  }
  return grad_in;
}

std::string Linear::describe() const {
  return "linear(" + std::to_string(in_) + "->" + std::to_string(out_) + ")";
}

// Activations and pooling --------------------------------------------------------

Tensor Elu::forward(const Tensor& in) const {
  Tensor out = in;
  for (double& x : out.v) x = x > 0.0 ? x : std::expm1(x);
  return out;
}

Tensor Elu::backward(const Tensor& in, const Tensor& out, const Tensor& grad_out) {
  Tensor grad_in = grad_out;
  for (std::size_t i = 0; i < grad_in.size(); ++i) {
    if (in.v[i] <= 0.0) grad_in.v[i] *= out.v[i] + 1.0;
  }
  return grad_in;
}

Tensor MaxPool2::forward(const Tensor& in) const {
  Tensor out(in.c, in.h / 2, in.w / 2);
  for (int c = 0; c < in.c; ++c) {
    for (int y = 0; y < out.h; ++y) {
      for (int x = 0; x < out.w; ++x) {
        double m = in.at(c, 2 * y, 2 * x);
        m = std::max(m, in.at(c, 2 * y, 2 * x + 1));
        m = std::max(m, in.at(c, 2 * y + 1, 2 * x));
        m = std::max(m, in.at(c, 2 * y + 1, 2 * x + 1));
        out.at(c, y, x) = m;
      }
    }
  }
  return out;
}

Tensor MaxPool2::backward(const Tensor& in, const Tensor& out, const Tensor& grad_out) {
  Tensor grad_in(in.c, in.h, in.w);
  for (int c = 0; c < in.c; ++c) {
    for (int y = 0; y < out.h; ++y) {
      for (int x = 0; x < out.w; ++x) {
        // Route to the first maximal element in row-major window order.
        const double m = out.at(c, y, x);
        bool routed = false;
        for (int dy = 0; dy < 2 && !routed; ++dy) {
          for (int dx = 0; dx < 2 && !routed; ++dx) {
            if (in.at(c, 2 * y + dy, 2 * x + dx) == m) {
              grad_in.at(c, 2 * y + dy, 2 * x + dx) += grad_out.at(c, y, x);
              routed = true;
            }
          }
        }
      }
    }
  }
  return grad_in;
}

Tensor GlobalAvgPool::forward(const Tensor& in) const {
  Tensor out(in.c, 1, 1);
  const double n = static_cast<double>(in.h) * in.w;
  for (int c = 0; c < in.c; ++c) {
    double sum = 0.0;
    for (int y = 0; y < in.h; ++y) {
      for (int x = 0; x < in.w; ++x) sum += in.at(c, y, x);
    }
    out.v[static_cast<std::size_t>(c)] = sum / n;
  }
  return out;
}

Tensor GlobalAvgPool::backward(const Tensor& in, const Tensor&, const Tensor& grad_out) {
  Tensor grad_in(in.c, in.h, in.w);
  const double n = static_cast<double>(in.h) * in.w;
  for (int c = 0; c < in.c; ++c) {
    const double g = grad_out.v[static_cast<std::size_t>(c)] / n;
    for (int y = 0; y < in.h; ++y) {
      for (int x = 0; x < in.w; ++x) grad_in.at(c, y, x) = g;
    }
  }
  return grad_in;
}

// Sequential ---------------------------------------------------------------------

Tensor Sequential::forward(const Tensor& in) const {
  Tensor x = in;
  for (const auto& layer : layers_) x = layer->forward(x);
  return x;
}

std::vector<Tensor> Sequential::forward_trace(const Tensor& in) const {
  std::vector<Tensor> trace;
  trace.reserve(layers_.size() + 1);
  trace.push_back(in);
  for (const auto& layer : layers_) trace.push_back(layer->forward(trace.back()));
  return trace;
}

Tensor Sequential::backward(const std::vector<Tensor>& trace, const Tensor& grad_out) {
  if (trace.size() != layers_.size() + 1) {
    throw ContractError("backward: trace does not match the network");
  }
  Tensor g = grad_out;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    g = layers_[i]->backward(trace[i], trace[i + 1], g);
  }
  return g;
}

std::vector<Parameter*> Sequential::parameters() {
  std::vector<Parameter*> out;
  for (auto& layer : layers_) {
    for (Parameter* p : layer->parameters()) out.push_back(p);
  }
  return out;
}

std::size_t Sequential::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) {
    for (const Parameter* p : layer->parameters()) n += p->value.size();
  }
  return n;
}

void Sequential::zero_grad() {
  for (Parameter* p : parameters()) std::fill(p->grad.begin(), p->grad.end(), 0.0);
}

}  // namespace curator::siamese::nn
