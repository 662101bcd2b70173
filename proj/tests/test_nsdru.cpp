#include <doctest.h>

#include <random>

#include "cfpn/nsdru.hpp"
#include "cfpn/signal.hpp"
#include "cfpn/verify.hpp"

using namespace cfpn;

namespace {

Tensor random_map(std::size_t ch, std::size_t t, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  Tensor m({1, ch, t});
  for (auto& v : m.values()) v = u(rng);
  return m;
}

}  // namespace

TEST_CASE("reshape_to_map inverts channel-major flattening") {
  const Epoch e{2, 3, {1, 2, 3, 4, 5, 6}, 100, 0, ""};
  const auto flat = flatten({e});
  const auto m = reshape_to_map(flat.values(), 2, 3);
  CHECK(m.shape() == std::vector<std::size_t>{1, 2, 3});
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t s = 0; s < 3; ++s) CHECK(m.at(0, c, s) == e.at(c, s));
  CHECK_THROWS_AS(reshape_to_map(std::vector<double>(7), 2, 4), ShapeError);
}

TEST_CASE("nsdru output halves both dimensions") {
  const auto p = init_nsdru(8, 1);
  CHECK(nsdru_forward(random_map(128, 400, 1), p).output.shape() == std::vector<std::size_t>{64, 200});
  CHECK(nsdru_forward(random_map(5, 7, 2), p).output.shape() == std::vector<std::size_t>{2, 3});
  const auto small = init_nsdru(2, 3);
  for (std::size_t ch = 2; ch <= 64; ch += 3)
    for (std::size_t t = 2; t <= 64; ++t)
      REQUIRE(nsdru_forward(Tensor({1, ch, t}, 0.3), small).output.shape() == std::vector<std::size_t>{ch / 2, t / 2});
  CHECK_THROWS_AS(nsdru_forward(Tensor({1, 1, 8}), p), ShapeError);
}

TEST_CASE("nsdru with zero parameters") {
  const auto out = nsdru_forward(random_map(6, 10, 4), zero_nsdru(8)).output;
  CHECK(out == Tensor({3, 5}));
}

TEST_CASE("nsdru activations are non-negative") {
  auto p = init_nsdru(8, 5);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (auto& v : p.conv1_bias.values()) v = u(rng);
  const auto t = nsdru_forward(random_map(8, 32, 5), p);
  for (double v : t.conv1.values()) CHECK(v >= 0.0);
  for (double v : t.pooled.values()) CHECK(v >= 0.0);
  for (double v : t.output.values()) CHECK(v >= 0.0);
}

TEST_CASE("maxpool routes the gradient to one cell per window") {
  Tensor in({1, 2, 2}, std::vector<double>{0.1, 0.9, 0.3, 0.2});
  const auto r = maxpool2d(in);
  const auto g = maxpool2d_backward(in.shape(), r.argmax, Tensor({1, 1, 1}, 2.5));
  CHECK(g == Tensor({1, 2, 2}, std::vector<double>{0, 2.5, 0, 0}));
}

TEST_CASE("doubling a window's unique max doubles the pooled value") {
  Tensor in({1, 4, 4});
  for (std::size_t i = 0; i < 16; ++i) in[i] = 0.05 * static_cast<double>((i * 7) % 16);
  const auto before = maxpool2d(in);
  auto scaled = in;
  scaled[before.argmax[0]] *= 2.0;
  const auto after = maxpool2d(scaled);
  CHECK(after.output[0] == 2.0 * before.output[0]);
  for (std::size_t i = 1; i < 4; ++i) CHECK(after.output[i] == before.output[i]);
}

TEST_CASE("nsdru_backward structural cases") {
  const auto p = init_nsdru(4, 6);
  const auto t = nsdru_forward(random_map(4, 6, 6), p);
  const auto g = nsdru_backward(t, p, Tensor({2, 3}));
  g.params.visit([](const std::string&, const Tensor& x) {
    for (double v : x.values()) CHECK(v == 0.0);
  });
  for (double v : g.input.values()) CHECK(v == 0.0);
  CHECK_THROWS_AS(nsdru_backward(NsdruTrace{}, p, Tensor({2, 3})), StateError);
}

TEST_CASE("nsdru gradients match finite differences") {
  for (std::uint64_t seed : {0, 1, 2}) CHECK(check_nsdru_gradients(seed).max_relative_error < 1e-4);
}
