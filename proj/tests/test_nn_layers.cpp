#include "doctest.h"

#include "gradcheck.hpp"
#include "mmgest/errors.hpp"
#include "mmgest/nn/gemm.hpp"

using namespace mmgest;
using namespace mmgest::nn;

namespace {

void report(const gradcheck::Result& r) {
  INFO("worst: " << r.worst << " rel " << r.max_rel << " checked " << r.checked << " skipped " << r.skipped);
  CHECK(r.checked > 0);
  CHECK(r.ok());
}

}  // namespace

TEST_CASE("gemm variants agree with a naive product") {
  std::mt19937_64 rng(3);
  for (auto [m, n, k] : {std::tuple{1, 1, 1}, {5, 7, 3}, {17, 600, 130}, {4, 4, 4}, {33, 9, 260}}) {
    const auto a = gradcheck::random_tensor({std::size_t(m * k)}, rng);
    const auto b = gradcheck::random_tensor({std::size_t(k * n)}, rng);
    std::vector<double> ref(m * n, 0.0);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j)
        for (int p = 0; p < k; ++p) ref[i * n + j] += a[i * k + p] * b[p * n + j];
    std::vector<double> c(m * n, 1.0);
    gemm_nn(m, n, k, a.data(), b.data(), c.data(), false);
    for (int i = 0; i < m * n; ++i) CHECK(c[i] == doctest::Approx(ref[i]).epsilon(1e-12));
    // A stored transposed
    std::vector<double> at(k * m);
    for (int i = 0; i < m; ++i)
      for (int p = 0; p < k; ++p) at[p * m + i] = a[i * k + p];
    gemm_tn(m, n, k, at.data(), b.data(), c.data(), false);
    for (int i = 0; i < m * n; ++i) CHECK(c[i] == doctest::Approx(ref[i]).epsilon(1e-12));
    // B stored transposed, accumulate on top of the previous result
    std::vector<double> bt(n * k);
    for (int p = 0; p < k; ++p)
      for (int j = 0; j < n; ++j) bt[j * k + p] = b[p * n + j];
    gemm_nt(m, n, k, a.data(), bt.data(), c.data(), true);
    for (int i = 0; i < m * n; ++i) CHECK(c[i] == doctest::Approx(2 * ref[i]).epsilon(1e-12));
  }
}

TEST_CASE("conv2d gradients") {
  const std::vector<std::pair<Conv2dSpec, Shape>> cases = {
      {{1, 2, 3, 1, 1, true}, {2, 1, 5, 6}},
      {{2, 3, 3, 2, 1, true}, {2, 2, 7, 8}},
      {{1, 4, 7, 2, 3, false}, {2, 1, 9, 11}},
      {{3, 2, 1, 2, 0, false}, {3, 3, 5, 5}},
      {{2, 2, 2, 1, 0, true}, {1, 2, 4, 3}},
      {{4, 3, 3, 1, 1, true}, {2, 4, 3, 4}},
  };
  std::uint64_t seed = 10;
  for (const auto& [spec, shape] : cases) {
    Conv2d conv("conv", spec);
    std::mt19937_64 rng(seed);
    conv.initialize(rng);
    for (auto& b : conv.bias().value.values()) b = uniform(rng, -0.5, 0.5);
    report(gradcheck::check_layer(conv, gradcheck::random_tensor(shape, rng), seed++));
  }
}

TEST_CASE("batchnorm gradients") {
  std::uint64_t seed = 20;
  for (const Shape& shape : {Shape{2, 1, 3, 3}, Shape{4, 3, 2, 2}, Shape{1, 2, 5, 4}, Shape{3, 4, 1, 3}, Shape{8, 2, 2, 1}}) {
    BatchNorm2d bn("bn", shape[1]);
    std::mt19937_64 rng(seed);
    for (auto& g : bn.gamma().value.values()) g = uniform(rng, 0.5, 1.5);
    for (auto& b : bn.beta().value.values()) b = uniform(rng, -0.5, 0.5);
    report(gradcheck::check_layer(bn, gradcheck::random_tensor(shape, rng, -2.0, 3.0), seed++));
  }
}

TEST_CASE("relu gradients") {
  std::uint64_t seed = 30;
  for (const Shape& shape : {Shape{1, 1, 2, 2}, Shape{2, 3, 4, 5}, Shape{4, 7}, Shape{3, 1, 1, 9}, Shape{2, 2, 6, 3}}) {
    ReLU relu("relu");
    std::mt19937_64 rng(seed);
    report(gradcheck::check_layer(relu, gradcheck::away_from_zero(shape, rng), seed++));
  }
}

TEST_CASE("maxpool gradients") {
  std::uint64_t seed = 40;
  const std::vector<std::tuple<std::size_t, std::size_t, std::size_t, Shape>> cases = {
      {3, 2, 1, {2, 2, 7, 9}}, {2, 2, 0, {1, 3, 4, 6}}, {3, 1, 1, {2, 1, 5, 5}},
      {3, 2, 1, {1, 2, 15, 33}}, {2, 1, 1, {3, 1, 3, 4}}};
  for (const auto& [k, s, p, shape] : cases) {
    MaxPool2d pool("pool", k, s, p);
    std::mt19937_64 rng(seed);
    report(gradcheck::check_layer(pool, gradcheck::distinct_values(shape, rng), seed++));
  }
}

TEST_CASE("linear gradients") {
  std::uint64_t seed = 50;
  for (auto [n, in, out] : {std::tuple{1, 1, 1}, {3, 5, 4}, {8, 20, 6}, {2, 64, 3}, {5, 7, 11}}) {
    Linear lin("fc", in, out);
    std::mt19937_64 rng(seed);
    lin.initialize(rng);
    for (auto& b : lin.bias().value.values()) b = uniform(rng, -0.5, 0.5);
    report(gradcheck::check_layer(lin, gradcheck::random_tensor({std::size_t(n), std::size_t(in)}, rng), seed++));
  }
}

TEST_CASE("flatten gradients") {
  std::uint64_t seed = 55;
  for (const Shape& shape : {Shape{2, 3}, Shape{2, 3, 4}, Shape{1, 2, 3, 4}, Shape{4, 1, 1, 1}, Shape{3, 5, 2}}) {
    Flatten f("flat");
    std::mt19937_64 rng(seed);
    report(gradcheck::check_layer(f, gradcheck::random_tensor(shape, rng), seed++));
  }
}

TEST_CASE("residual block gradients") {
  std::uint64_t seed = 60;
  const std::vector<std::tuple<std::size_t, std::size_t, std::size_t, Shape>> cases = {
      {2, 3, 2, {2, 2, 5, 6}}, {2, 2, 1, {2, 2, 4, 4}}, {1, 2, 2, {3, 1, 6, 5}},
      {3, 3, 1, {2, 3, 3, 5}}, {2, 4, 2, {2, 2, 8, 9}}};
  for (const auto& [in, out, stride, shape] : cases) {
    ResidualBlock block("block", in, out, stride);
    std::mt19937_64 rng(seed);
    block.initialize(rng);
    report(gradcheck::check_layer(block, gradcheck::random_tensor(shape, rng), seed++, true));
  }
}

TEST_CASE("softmax cross-entropy gradients") {
  std::uint64_t seed = 70;
  for (auto [n, c] : {std::pair{1, 2}, {4, 4}, {7, 6}, {16, 3}, {3, 10}}) {
    report(gradcheck::check_cross_entropy(n, c, seed++));
  }
}

TEST_CASE("cross-entropy values") {
  SoftmaxCrossEntropy ce;
  CHECK(ce.forward(Tensor({2, 4}, 0.0), {0, 3}) == doctest::Approx(std::log(4.0)));
  CHECK(ce.forward(Tensor({1, 2}, std::vector<double>{1000.0, 0.0}), {0}) == doctest::Approx(0.0));
  CHECK_THROWS_AS(ce.forward(Tensor({2, 4}), {0}), ShapeError);
  CHECK_THROWS_AS(ce.forward(Tensor({1, 4}), {4}), InvalidArgument);
}

TEST_CASE("1x1 identity convolution returns its input") {
  Conv2d conv("id", {3, 3, 1, 1, 0, true});
  conv.weight().value.fill(0.0);
  for (std::size_t c = 0; c < 3; ++c) conv.weight().value[c * 3 + c] = 1.0;
  std::mt19937_64 rng(1);
  const auto x = gradcheck::random_tensor({2, 3, 4, 5}, rng);
  const auto y = conv.forward(x, false);
  CHECK(y.shape() == x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(y[i] == x[i]);
}

TEST_CASE("relu on negatives") {
  ReLU relu("r");
  const Tensor x({2, 3}, -0.5);
  const auto y = relu.forward(x, true);
  for (double v : y.values()) CHECK(v == 0.0);
  const auto g = relu.backward(Tensor({2, 3}, 1.0));
  for (double v : g.values()) CHECK(v == 0.0);
}

TEST_CASE("residual block with zero convolutions and identity shortcut reproduces its input") {
  ResidualBlock block("res", 4, 4, 1);
  CHECK_FALSE(block.has_projection());
  block.conv1().weight().value.fill(0.0);
  block.conv2().weight().value.fill(0.0);
  std::mt19937_64 rng(2);
  // the block ends in a relu, so the identity holds for non-negative inputs
  const auto x = gradcheck::random_tensor({2, 4, 5, 6}, rng, 0.0, 2.0);
  for (bool training : {false, true}) {
    const auto y = block.forward(x, training);
    REQUIRE(y.shape() == x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(y[i] == x[i]);
  }
  CHECK(ResidualBlock("p", 4, 8, 2).has_projection());
}

TEST_CASE("batchnorm running statistics") {
  BatchNorm2d bn("bn", 1);
  Tensor x({2, 1, 1, 2}, std::vector<double>{1.0, 2.0, 3.0, 6.0});
  bn.forward(x, true);
  // batch mean 3, biased var 3.5, unbiased 14/3
  CHECK(bn.running_mean()[0] == doctest::Approx(0.3));
  CHECK(bn.running_var()[0] == doctest::Approx(0.9 + 0.1 * 14.0 / 3.0));
  const auto y = bn.forward(x, false);
  CHECK(y[0] == doctest::Approx((1.0 - 0.3) / std::sqrt(bn.running_var()[0] + 1e-5)));
}

TEST_CASE("shape errors name both shapes") {
  Conv2d conv("c", {2, 4, 3, 1, 1, true});
  try {
    conv.forward(Tensor({1, 3, 5, 5}), false);
    FAIL("accepted wrong channel count");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("(1, 3, 5, 5)") != std::string::npos);
    CHECK(msg.find("2") != std::string::npos);
  }
  Linear lin("fc", 4, 2);
  CHECK_THROWS_AS(lin.forward(Tensor({3, 5}), false), ShapeError);
  BatchNorm2d bn("bn", 3);
  CHECK_THROWS_AS(bn.forward(Tensor({2, 2, 2, 2}), true), ShapeError);
  MaxPool2d pool("p", 3, 2, 1);
  CHECK_THROWS_AS(pool.forward(Tensor({4, 4}), false), ShapeError);
  try {
    expect_shape(Tensor({2, 3}), {3, 2}, "probe");
    FAIL("expect_shape accepted a mismatch");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("(3, 2)") != std::string::npos);
    CHECK(msg.find("(2, 3)") != std::string::npos);
  }
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1.0}), ShapeError);
  CHECK_THROWS_AS(Tensor({2, 2}).reshaped({3}), ShapeError);
}

TEST_CASE("non-finite activations raise a numeric error naming the layer") {
  Sequential seq("seq");
  seq.add<Linear>("seq.fc", 2, 2);
  seq.add<ReLU>("seq.relu");
  Tensor x({1, 2}, std::vector<double>{std::nan(""), 1.0});
  try {
    seq.forward(x, false);
    FAIL("NaN passed through");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("seq.fc") != std::string::npos);
  }
}
