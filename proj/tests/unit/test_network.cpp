#include <doctest.h>

#include <cmath>

#include "network.hpp"
#include "objectives.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace outpaint;
using testutil::error_kind;

TEST_CASE("generator layer table") {
  const NetworkSpec g = generator_spec();
  REQUIRE(g.layers.size() == 10);
  const int filters[] = {5, 3, 3, 3, 3, 3, 3, 4, 3, 3};
  const int dilations[] = {1, 1, 1, 2, 4, 8, 1, 1, 1, 1};
  const Stride strides[] = {Stride::kOne, Stride::kTwo, Stride::kOne, Stride::kOne, Stride::kOne,
                            Stride::kOne, Stride::kOne, Stride::kHalf, Stride::kOne, Stride::kOne};
  const int outputs[] = {64, 128, 256, 256, 256, 256, 256, 128, 64, 3};
  for (int i = 0; i < 10; ++i) {
    CAPTURE(i);
    CHECK(g.layers[i].filter == filters[i]);
    CHECK(g.layers[i].dilation == dilations[i]);
    CHECK(g.layers[i].stride == strides[i]);
    CHECK(g.layers[i].outputs == outputs[i]);
  }
  CHECK(g.layers[7].kind == LayerKind::kDeconv);
  CHECK(g.layers[9].kind == LayerKind::kOut);
  CHECK(g.layers[9].activation == Activation::kSigmoid);
  CHECK(format_table(g).find("DECONV") != std::string::npos);
}

TEST_CASE("generator maps 128x128x4 to 128x128x3") {
  const NetworkSpec g = generator_spec();
  const auto shapes = trace_shapes(g, {128, 128, 4});
  CHECK(shapes.back() == Shape{128, 128, 3});
  CHECK(shapes[1] == Shape{64, 64, 128});
  CHECK(shapes[6] == Shape{64, 64, 256});
  CHECK(shapes[7] == Shape{128, 128, 128});

  const auto params = init_params<float>(g, {128, 128, 4}, 1);
  const Tensor<float> x = oracle::random_tensor<float>({128, 128, 4}, 2);
  const Tensor<float> y = forward(g, params, x);
  CHECK(y.shape() == Shape{128, 128, 3});
  for (std::size_t i = 0; i < y.size(); ++i) {
    REQUIRE(y[i] > 0.0f);
    REQUIRE(y[i] < 1.0f);
  }
  // Same input, same params, same output.
  CHECK(forward(g, params, x) == y);
}

TEST_CASE("generator is fully convolutional") {
  const NetworkSpec g = generator_spec();
  CHECK(trace_shapes(g, {128, 192, 4}).back() == Shape{128, 192, 3});
  CHECK(trace_shapes(g, {32, 448, 4}).back() == Shape{32, 448, 3});
  CHECK(trace_shapes(g, {16, 18, 4}).back().width == 18);
  // Odd sizes come back one larger after the stride-2 round trip.
  CHECK(trace_shapes(g, {16, 17, 4}).back().width == 18);
  CHECK(trace_shapes(g, {15, 16, 4}).back().height == 16);
}

TEST_CASE("discriminator traces and feature widths") {
  const auto d = discriminator_specs(true);
  const auto global = trace_shapes(d.global, {128, 128, 3});
  const int expect_global[] = {64, 32, 16, 8, 4};
  for (int i = 0; i < 5; ++i) {
    CHECK(global[i].height == expect_global[i]);
    CHECK(global[i].width == expect_global[i]);
  }
  CHECK(global.back() == Shape{1, 1, 512});

  const auto local = trace_shapes(d.local, {128, 64, 3});
  const int expect_h[] = {64, 32, 16, 8};
  const int expect_w[] = {32, 16, 8, 4};
  for (int i = 0; i < 4; ++i) {
    CHECK(local[i].height == expect_h[i]);
    CHECK(local[i].width == expect_w[i]);
  }
  CHECK(local.back() == Shape{1, 1, 512});

  CHECK(Discriminator({128, 128, 3}, true).feature_width() == 1536);
  CHECK(Discriminator({128, 128, 3}, false).feature_width() == 512);
  CHECK(discriminator_specs(false).concat.layers.front().outputs == 512);
}

TEST_CASE("receptive field after layer 6") {
  CHECK(receptive_field(generator_spec({2, 4, 8}))[5] == 67.0);
  CHECK(receptive_field(generator_spec({1, 2, 4}))[5] == 39.0);
  CHECK(receptive_field(generator_spec({1, 1, 1}))[5] == 23.0);
}

TEST_CASE("receptive field agrees with explicit dependency tracing") {
  for (const Dilations d : {Dilations{1, 1, 1}, Dilations{1, 2, 4}, Dilations{2, 4, 8},
                            Dilations{3, 3, 3}, Dilations{1, 8, 2}}) {
    const NetworkSpec g = generator_spec(d);
    const auto rf = receptive_field(g);
    for (std::size_t n = 1; n <= 7; ++n) {
      const std::vector<LayerSpec> prefix(g.layers.begin(), g.layers.begin() + n);
      CHECK(rf[n - 1] == oracle::traced_receptive_field(prefix));
    }
  }
}

TEST_CASE("receptive field grows strictly with dilation") {
  const double a = receptive_field(generator_spec({1, 1, 1}))[5];
  const double b = receptive_field(generator_spec({1, 2, 4}))[5];
  const double c = receptive_field(generator_spec({2, 4, 8}))[5];
  CHECK(a < b);
  CHECK(b < c);
  const auto full = receptive_field(generator_spec());
  for (std::size_t i = 1; i < full.size(); ++i) CHECK(full[i] > full[i - 1]);
}

TEST_CASE("receptive field rejects dense layers") {
  CHECK(error_kind([] { receptive_field(discriminator_specs(true).concat); }) ==
        ErrorKind::kArgument);
}

TEST_CASE("invalid layers are rejected") {
  NetworkSpec s = generator_spec();
  s.layers[0].filter = 0;
  CHECK(error_kind([&] { trace_shapes(s, {8, 8, 4}); }) == ErrorKind::kArgument);
  s = generator_spec();
  s.layers[3].dilation = 0;
  CHECK(error_kind([&] { trace_shapes(s, {8, 8, 4}); }) == ErrorKind::kArgument);
}

TEST_CASE("initialization is seeded and biases start at zero") {
  const NetworkSpec g = oracle::mini_generator();
  const auto a = init_params<float>(g, {8, 8, 4}, 42);
  const auto b = init_params<float>(g, {8, 8, 4}, 42);
  const auto c = init_params<float>(g, {8, 8, 4}, 43);
  CHECK(a == b);
  CHECK(params_hash(a) == params_hash(b));
  CHECK(params_hash(a) != params_hash(c));
  for (const auto& l : a.layers)
    for (float v : l.bias) CHECK(v == 0.0f);
  auto d = a;
  d.layers[2].weight[5] += 1e-3f;
  CHECK(params_hash(d) != params_hash(a));
  CHECK(a.zeros_like().count() == a.count());
}

TEST_CASE("split_halves mirrors the right half") {
  Tensor<float> img(2, 6, 1);
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 6; ++x) img(y, x, 0) = static_cast<float>(10 * y + x);
  const auto [left, right] = split_halves(img);
  CHECK(left.shape() == Shape{2, 3, 1});
  CHECK(right.shape() == Shape{2, 3, 1});
  for (int y = 0; y < 2; ++y) {
    for (int x = 0; x < 3; ++x) {
      CHECK(left(y, x, 0) == 10 * y + x);
      CHECK(right(y, x, 0) == 10 * y + (5 - x));
    }
  }
}

TEST_CASE("discriminator output is a probability") {
  const Discriminator d({32, 32, 3}, true);
  const auto bundle = d.init<float>(5);
  for (int i = 0; i < 3; ++i) {
    const float p = d.forward(bundle, oracle::random_tensor<float>({32, 32, 3}, 10 + i));
    CHECK(p > 0.0f);
    CHECK(p < 1.0f);
  }
}

// ---- gradient checks on miniature networks ----

namespace {

struct MiniSetup {
  NetworkSpec gen = oracle::mini_generator();
  Discriminator disc{Shape{8, 8, 3}, oracle::mini_discriminator(true), true};
  Params<double> gp = init_params<double>(gen, {8, 8, 4}, 3);
  DiscriminatorBundle<double> dp = disc.init<double>(4);
  Mask mask = build_mask({8, 4, 2});
  Tensor<double> target = oracle::random_tensor<double>({8, 8, 3}, 5);
  Tensor<double> input;
  Tensor<double> real = oracle::random_tensor<double>({8, 8, 3}, 6);

  MiniSetup() {
    input = Tensor<double>(8, 8, 4);
    const auto noise = oracle::random_tensor<double>({8, 8, 4}, 7);
    for (std::size_t i = 0; i < input.size(); ++i) input[i] = noise[i];
    // Break the symmetry of zero biases so relu kinks are not hit exactly.
    std::mt19937_64 rng(8);
    std::normal_distribution<double> n(0.0, 0.05);
    for (auto& l : gp.layers)
      for (auto& b : l.bias) b = n(rng);
    for (auto* p : {&dp.global, &dp.local, &dp.concat})
      for (auto& l : p->layers)
        for (auto& b : l.bias) b = n(rng);
  }
};

}  // namespace

TEST_CASE("reconstruction loss gradient (generator)") {
  MiniSetup s;
  Trace<double> trace;
  const auto out = forward(s.gen, s.gp, s.input, &trace);
  Params<double> grads = s.gp.zeros_like();
  backward(s.gen, s.gp, trace, mse_loss_grad(out, s.target, s.mask), grads, false);
  const auto r = oracle::check_gradients(
      s.gp, grads, [&] { return mse_loss(forward(s.gen, s.gp, s.input), s.target, s.mask); },
      150, 9);
  CHECK(r.sampled == 150);
  CHECK(r.max_relative_error < 1e-4);
}

TEST_CASE("discriminator loss gradient (global, local and concatenator)") {
  MiniSetup s;
  const Tensor<double> fake = forward(s.gen, s.gp, s.input);
  DiscriminatorTrace<double> rt, ft;
  const double pr = s.disc.forward(s.dp, s.real, &rt);
  const double pf = s.disc.forward(s.dp, fake, &ft);
  DiscriminatorBundle<double> grads = s.dp.zeros_like();
  s.disc.backward(s.dp, rt, disc_loss_grad_real(pr), grads, false);
  s.disc.backward(s.dp, ft, disc_loss_grad_fake(pf), grads, false);
  auto loss = [&] { return disc_loss(s.disc.forward(s.dp, s.real), s.disc.forward(s.dp, fake)); };
  for (auto [p, g] : {std::pair{&s.dp.global, &grads.global}, std::pair{&s.dp.local, &grads.local},
                      std::pair{&s.dp.concat, &grads.concat}}) {
    const auto r = oracle::check_gradients(*p, *g, loss, 60, 10);
    CHECK(r.max_relative_error < 1e-4);
  }
}

TEST_CASE("joint generator loss gradient flows through the discriminator") {
  MiniSetup s;
  const double alpha = 0.5;
  Trace<double> trace;
  const auto out = forward(s.gen, s.gp, s.input, &trace);
  DiscriminatorTrace<double> dt;
  const double pf = s.disc.forward(s.dp, out, &dt);
  DiscriminatorBundle<double> unused = s.dp.zeros_like();
  Tensor<double> g_out = mse_loss_grad(out, s.target, s.mask);
  const Tensor<double> adv = s.disc.backward(s.dp, dt, gen_loss_grad_fake(pf, alpha), unused, true);
  for (std::size_t i = 0; i < g_out.size(); ++i) g_out[i] += adv[i];
  Params<double> grads = s.gp.zeros_like();
  backward(s.gen, s.gp, trace, g_out, grads, false);
  const auto r = oracle::check_gradients(
      s.gp, grads,
      [&] {
        const auto o = forward(s.gen, s.gp, s.input);
        return gen_loss(mse_loss(o, s.target, s.mask), s.disc.forward(s.dp, o), alpha);
      },
      150, 11);
  CHECK(r.max_relative_error < 1e-4);
}

TEST_CASE("discriminator input gradient matches finite differences") {
  MiniSetup s;
  Tensor<double> img = s.real;
  DiscriminatorTrace<double> dt;
  s.disc.forward(s.dp, img, &dt);
  DiscriminatorBundle<double> unused = s.dp.zeros_like();
  const Tensor<double> g = s.disc.backward(s.dp, dt, 1.0, unused, true);
  const double h = 1e-6;
  for (std::size_t i = 0; i < img.size(); i += 3) {
    const double saved = img[i];
    img[i] = saved + h;
    const double up = s.disc.forward(s.dp, img);
    img[i] = saved - h;
    const double down = s.disc.forward(s.dp, img);
    img[i] = saved;
    CHECK(oracle::relative_error(g[i], (up - down) / (2 * h)) < 1e-4);
  }
}
