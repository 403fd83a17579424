#include "curator/siamese/nn.hpp"

#include "curator/common/errors.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace curator::siamese::nn;

namespace {

Tensor random_tensor(int c, int h, int w, Initializer& init) {
  Tensor t(c, h, w);
  for (double& x : t.v) x = init.uniform(-1.0, 1.0);
  return t;
}

double dot(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.v[i] * b.v[i];
  return s;
}

double rel_error(double a, double b) { return std::abs(a - b) / std::max(1e-8, std::abs(a) + std::abs(b)); }

// Loss L = <layer(x), r>; compares analytic dL/dx and dL/dparams with central
// differences.
void check_gradients(Layer& layer, Tensor x, Initializer& init, double tol = 1e-6) {
  const Tensor out = layer.forward(x);
  const Tensor r = random_tensor(out.c, out.h, out.w, init);
  for (Parameter* p : layer.parameters()) std::fill(p->grad.begin(), p->grad.end(), 0.0);
  const Tensor gx = layer.backward(x, out, r);
  const double eps = 1e-6;

  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x.v[i];
    x.v[i] = saved + eps;
    const double up = dot(layer.forward(x), r);
    x.v[i] = saved - eps;
    const double down = dot(layer.forward(x), r);
    x.v[i] = saved;
    EXPECT_LT(rel_error(gx.v[i], (up - down) / (2 * eps)), tol) << layer.describe() << " input " << i;
  }
  for (Parameter* p : layer.parameters()) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double saved = p->value[i];
      p->value[i] = saved + eps;
      const double up = dot(layer.forward(x), r);
      p->value[i] = saved - eps;
      const double down = dot(layer.forward(x), r);
      p->value[i] = saved;
      EXPECT_LT(rel_error(p->grad[i], (up - down) / (2 * eps)), tol) << layer.describe() << " param " << i;
    }
  }
}

TEST(NnGradients, Conv2dStridedPadded) {
  Initializer init(1);
  Conv2d conv(2, 3, 3, 2, 1, 1, init);
  check_gradients(conv, random_tensor(2, 7, 6, init), init);
}

TEST(NnGradients, Conv2dDepthwise) {
  Initializer init(2);
  Conv2d conv(4, 4, 3, 1, 1, 4, init);
  check_gradients(conv, random_tensor(4, 5, 5, init), init);
}

TEST(NnGradients, Conv2dGrouped1x1) {
  Initializer init(3);
  Conv2d conv(4, 6, 1, 1, 0, 2, init);
  check_gradients(conv, random_tensor(4, 3, 4, init), init);
}

TEST(NnGradients, Linear) {
  Initializer init(4);
  Linear fc(12, 5, init);
  check_gradients(fc, random_tensor(3, 2, 2, init), init);
}

TEST(NnGradients, EluOnBothSidesOfZero) {
  Initializer init(5);
  Elu elu;
  check_gradients(elu, random_tensor(2, 4, 4, init), init);
}

TEST(NnGradients, MaxPoolAndGlobalAverage) {
  Initializer init(6);
  MaxPool2 pool;
  check_gradients(pool, random_tensor(3, 6, 5, init), init);
  GlobalAvgPool gap;
  check_gradients(gap, random_tensor(3, 4, 5, init), init);
}

TEST(NnGradients, SequentialChainsLayers) {
  Initializer init(7);
  Sequential net;
  net.add(std::make_unique<Conv2d>(3, 4, 3, 1, 1, 1, init));
  net.add(std::make_unique<Elu>());
  net.add(std::make_unique<MaxPool2>());
  net.add(std::make_unique<Linear>(4 * 3 * 3, 5, init));
  Tensor x = random_tensor(3, 6, 6, init);
  const auto trace = net.forward_trace(x);
  ASSERT_EQ(trace.size(), net.size() + 1);
  const Tensor r = random_tensor(5, 1, 1, init);
  net.zero_grad();
  const Tensor gx = net.backward(trace, r);
  const double eps = 1e-6;
  for (std::size_t i = 0; i < x.size(); i += 7) {
    const double saved = x.v[i];
    x.v[i] = saved + eps;
    const double up = dot(net.forward(x), r);
    x.v[i] = saved - eps;
    const double down = dot(net.forward(x), r);
    x.v[i] = saved;
    EXPECT_LT(rel_error(gx.v[i], (up - down) / (2 * eps)), 1e-6);
  }
}

TEST(Nn, ConvOutputShapeAndIdentityKernel) {
  Initializer init(8);
  Conv2d conv(1, 1, 3, 1, 1, 1, init);
  auto& w = conv.weight().value;
  std::fill(w.begin(), w.end(), 0.0);
  w[4] = 1.0;  // center tap
  const Tensor x = random_tensor(1, 5, 4, init);
  const Tensor y = conv.forward(x);
  ASSERT_EQ(y.h, 5);
  ASSERT_EQ(y.w, 4);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_DOUBLE_EQ(y.v[i], x.v[i]);
}

TEST(Nn, ShapeMismatchIsAContractError) {
  Initializer init(9);
  Conv2d conv(3, 4, 3, 1, 1, 1, init);
  EXPECT_THROW(conv.forward(Tensor(2, 4, 4)), curator::ContractError);
  Linear fc(10, 2, init);
  EXPECT_THROW(fc.forward(Tensor(3, 1, 1)), curator::ContractError);
  EXPECT_THROW(Conv2d(3, 4, 3, 1, 1, 2, init), curator::ConfigurationError);
}

TEST(Nn, InitializerIsSeeded) {
  Initializer a(42), b(42), c(43);
  for (int i = 0; i < 10; ++i) {
    const double x = a.uniform(0, 1);
    EXPECT_EQ(x, b.uniform(0, 1));
    EXPECT_GE(x, 0.0);
    EXPECT_LT(x, 1.0);
  }
  EXPECT_NE(a.uniform(0, 1), c.uniform(0, 1));
}

}  // namespace
