#include <doctest.h>

#include <random>

#include "cfpn/autoencoder.hpp"
#include "cfpn/cost.hpp"
#include "cfpn/verify.hpp"

using namespace cfpn;

namespace {

Tensor random_batch(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  Tensor x({n, d});
  for (auto& v : x.values()) v = u(rng);
  return x;
}

bool all_ge(const Tensor& t, double lo) {
  for (double v : t.values())
    if (v < lo) return false;
  return true;
}

}  // namespace

TEST_CASE("init_ae is seeded Glorot with zero biases") {
  const AeDims dims{64};
  const auto a = init_ae(dims, 3), b = init_ae(dims, 3);
  for (auto [x, y] : {std::pair{&a.W1, &b.W1}, {&a.W3, &b.W3}, {&a.W6, &b.W6}}) CHECK(*x == *y);
  CHECK(a.W1 != init_ae(dims, 4).W1);
  const double bound = std::sqrt(6.0 / (64 + 128));
  for (double v : a.W1.values()) CHECK(std::abs(v) < bound);
  for (const Tensor* bias : {&a.b1, &a.b2, &a.b3, &a.b4, &a.b5, &a.b6})
    for (double v : bias->values()) CHECK(v == 0.0);
}

TEST_CASE("encoder shapes and degenerate parameters") {
  const AeDims dims{64};
  const auto x = random_batch(5, 64, 1);
  const auto enc = encode(x, init_ae(dims, 1));
  CHECK(enc.h1.shape() == std::vector<std::size_t>{5, 128});
  CHECK(enc.h2.shape() == std::vector<std::size_t>{5, 64});
  CHECK(enc.z.shape() == std::vector<std::size_t>{5, 32});

  const auto zero = encode(x, zero_ae(dims));
  CHECK(zero.h1 == Tensor({5, 128}));
  CHECK(zero.h2 == Tensor({5, 64}));
  CHECK(zero.z == Tensor({5, 32}));

  auto p = zero_ae(dims);
  p.b1.fill(0.7);
  CHECK(encode(x, p).h1 == Tensor({5, 128}, 0.7));

  CHECK_THROWS_AS(encode(random_batch(2, 63, 1), p), ShapeError);
}

TEST_CASE("decoder skip identities") {
  const AeDims dims{20, 12, 8, 4};
  auto p = init_ae(dims, 2);
  const auto x = random_batch(3, 20, 2);

  auto q = p;
  q.W4.fill(0.0);
  q.b4.fill(0.0);
  auto t = ae_forward(x, q);
  CHECK(t.h4 == Tensor({3, 8}));
  CHECK(t.h4_skip == t.enc.h2);

  q = p;
  q.W5.fill(0.0);
  q.b5.fill(0.0);
  t = ae_forward(x, q);
  CHECK(t.h5_skip == t.enc.h1);

  t = ae_forward(x, zero_ae(dims));
  CHECK(t.h6 == Tensor({3, 20}));
  CHECK(t.x_hat == Tensor({3, 20}, 0.5));
}

TEST_CASE("forward width chain for random dimensions") {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<std::size_t> ch(2, 16), t(8, 64);
  for (int i = 0; i < 25; ++i) {
    const std::size_t d = ch(rng) * t(rng);
    const auto tr = ae_forward(random_batch(2, d, i), init_ae({d}, i));
    CHECK(tr.enc.h1.dim(1) == 128);
    CHECK(tr.enc.z.dim(1) == 32);
    CHECK(tr.h4.dim(1) == 64);
    CHECK(tr.h5.dim(1) == 128);
    CHECK(tr.x_hat.dim(1) == d);
  }
}

TEST_CASE("trace ranges") {
  const AeDims dims{30, 16, 8, 4};
  const auto x = random_batch(4, 30, 5);
  for (auto out : {OutputActivation::relu, OutputActivation::linear}) {
    const auto t = ae_forward(x, init_ae(dims, 5), out);
    for (const Tensor* a : {&t.enc.h1, &t.enc.h2, &t.enc.z, &t.h4, &t.h5}) CHECK(all_ge(*a, 0.0));
    for (double v : t.x_hat.values()) {
      CHECK(v > 0.0);
      CHECK(v < 1.0);
    }
    if (out == OutputActivation::relu) {
      CHECK(all_ge(t.h6, 0.0));
      CHECK(all_ge(t.x_hat, 0.5));
    }
  }
}

TEST_CASE("forward is deterministic") {
  const AeDims dims{30, 16, 8, 4};
  const auto x = random_batch(4, 30, 6);
  const auto p = init_ae(dims, 6);
  CHECK(ae_forward(x, p).x_hat == ae_forward(x, p).x_hat);
}

TEST_CASE("reconstruction loss values") {
  const auto x = random_batch(3, 10, 7);
  CHECK(reconstruction_loss(x, x) == 0.0);
  auto off = x;
  for (auto& v : off.values()) v += 0.1;
  CHECK(reconstruction_loss(off, x) == doctest::Approx(0.01).epsilon(1e-12));
  Tensor half({2, 4}, 0.5), target({2, 4}, std::vector<double>{0, 1, 0, 1, 1, 0, 1, 0});
  CHECK(reconstruction_loss(half, target) == 0.25);
  CHECK_THROWS_AS(reconstruction_loss(half, Tensor({4, 2})), ShapeError);
}

TEST_CASE("ae_backward structural cases") {
  const AeDims dims{12, 8, 6, 3};
  auto p = init_ae(dims, 9);
  const auto x = random_batch(4, 12, 9);
  auto t = ae_forward(x, p);
  const auto zero = ae_backward(t, p, Tensor({4, 12}));
  zero.params.visit([](const std::string&, const Tensor& g) {
    for (double v : g.values()) CHECK(v == 0.0);
  });

  p.W4.fill(0.0);
  t = ae_forward(x, p);
  const auto g = ae_backward(t, p, random_batch(4, 12, 10));
  CHECK(g.h2 == g.h4_skip);

  CHECK_THROWS_AS(ae_backward(AeTrace{}, p, Tensor({4, 12})), StateError);
}

TEST_CASE("ae gradients match finite differences") {
  for (std::uint64_t seed : {0, 1, 2}) CHECK(check_ae_gradients(seed).max_relative_error < 1e-4);
}

TEST_CASE("autoencoder parameter count") {
  CHECK(count_ae_params({64, 128, 64, 32}) == 37344);
  CHECK(init_ae({64}, 0).W1.size() + init_ae({64}, 0).b1.size() == 8320);
}
