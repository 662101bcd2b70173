#include <doctest.h>

#include <cmath>
#include <random>

#include "cfpn/head.hpp"
#include "cfpn/tensor.hpp"

using namespace cfpn;

namespace {

// Direct-count reference, written independently of head.cpp.
struct Reference {
  double accuracy, precision, recall, f1;
};

Reference reference_metrics(const std::vector<int>& pred, const std::vector<int>& label) {
  int tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] == 1 && label[i] == 1) ++tp;
    if (pred[i] == 1 && label[i] == 0) ++fp;
    if (pred[i] == 0 && label[i] == 0) ++tn;
    if (pred[i] == 0 && label[i] == 1) ++fn;
  }
  Reference r{};
  r.accuracy = double(tp + tn) / double(pred.size());
  r.precision = tp + fp ? double(tp) / double(tp + fp) : 0.0;
  r.recall = tp + fn ? double(tp) / double(tp + fn) : 0.0;
  r.f1 = r.precision + r.recall > 0 ? 2 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

std::vector<int> bits(unsigned mask, int n) {
  std::vector<int> v(n);
  for (int i = 0; i < n; ++i) v[i] = (mask >> i) & 1;
  return v;
}

}  // namespace

TEST_CASE("logits") {
  auto p = zero_head(3);
  p.b_fc = Tensor::vector({1, -1});
  CHECK(logits(std::vector<double>{4, 5, 6}, p) == std::vector<double>{1, -1});

  p = init_head(3, 1);
  p.b_fc = Tensor::vector({0.2, -0.3});
  CHECK(logits(std::vector<double>{0, 0, 0}, p) == std::vector<double>{0.2, -0.3});
  const auto o1 = logits(std::vector<double>{0.5, -1, 2}, p), o2 = logits(std::vector<double>{1, -2, 4}, p);
  CHECK(std::abs((o2[0] - 0.2) - 2 * (o1[0] - 0.2)) < 1e-12);
  CHECK(std::abs((o2[1] + 0.3) - 2 * (o1[1] + 0.3)) < 1e-12);
  CHECK_THROWS_AS(logits(std::vector<double>{1, 2}, p), ShapeError);
}

TEST_CASE("predict") {
  auto r = predict(std::vector<double>{0, 0});
  CHECK(r.probabilities == std::vector<double>{0.5, 0.5});
  CHECK(r.label == 0);
  r = predict(std::vector<double>{std::log(3.0), 0});
  CHECK(r.probabilities[0] == doctest::Approx(0.75));
  CHECK(r.label == 0);
  CHECK(predict(std::vector<double>{-1, 2}).label == 1);
}

TEST_CASE("argmax invariants over random logit pairs") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-50, 50);
  for (int i = 0; i < 10000; ++i) {
    const std::vector<double> o{u(rng), u(rng)};
    const auto r = predict(o);
    REQUIRE(r.label == (o[1] > o[0] ? 1 : 0));
    const double c = u(rng);
    REQUIRE(predict(std::vector<double>{o[0] + c, o[1] + c}).label == r.label);
    const auto s = softmax(std::vector<double>{o[0] + c, o[1] + c});
    REQUIRE(std::abs(s[0] - r.probabilities[0]) < 1e-12);
    REQUIRE(std::abs(r.probabilities[0] + r.probabilities[1] - 1.0) < 1e-12);
    REQUIRE(predict(std::vector<double>{o[0], o[0]}).label == 0);
  }
}

TEST_CASE("cross entropy") {
  CHECK(cross_entropy(std::vector<double>{0.5, 0.5}, 0) == doctest::Approx(0.693147).epsilon(1e-6));
  CHECK(cross_entropy(std::vector<double>{0.5, 0.5}, 1) == doctest::Approx(std::log(2.0)));
  CHECK(cross_entropy(std::vector<double>{1 - 1e-12, 1e-12}, 0) < 1e-11);
  const double clamped = cross_entropy(std::vector<double>{1.0, 0.0}, 1);
  CHECK(std::isfinite(clamped));
  CHECK(clamped == doctest::Approx(27.631021).epsilon(1e-7));
}

TEST_CASE("cross entropy logit gradient matches finite differences") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int i = 0; i < 50; ++i) {
    const std::vector<double> o{u(rng), u(rng)};
    const int label = i % 2;
    const auto g = cross_entropy_logit_grad(predict(o).probabilities, label);
    for (int j = 0; j < 2; ++j) {
      auto up = o, down = o;
      up[j] += 1e-6;
      down[j] -= 1e-6;
      const double fd = (cross_entropy(predict(up).probabilities, label) -
                         cross_entropy(predict(down).probabilities, label)) / 2e-6;
      CHECK(std::abs(fd - g[j]) < 1e-7);
    }
  }
}

TEST_CASE("confusion counts") {
  CHECK(confusion(std::vector<int>{1, 1, 0, 0}, std::vector<int>{1, 1, 0, 0}) == ConfusionCounts{2, 0, 2, 0});
  CHECK(confusion(std::vector<int>{1, 0}, std::vector<int>{0, 1}) == ConfusionCounts{0, 1, 0, 1});
  const std::vector<int> p{1, 0, 1, 1, 0}, l{1, 1, 0, 1, 0};
  const auto c = confusion(p, l);
  std::vector<int> inv(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) inv[i] = 1 - p[i];
  const auto ci = confusion(inv, l);
  CHECK(ci.tp == c.fn);
  CHECK(ci.fn == c.tp);
  CHECK(ci.tn == c.fp);
  CHECK(ci.fp == c.tn);
  CHECK_THROWS_AS(confusion(std::vector<int>{1}, std::vector<int>{1, 0}), ShapeError);
}

TEST_CASE("compute_metrics conventions") {
  const auto perfect = compute_metrics({3, 0, 4, 0});
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.recall == 1.0);
  CHECK(perfect.f1 == 1.0);
  const auto none = compute_metrics({0, 0, 5, 2});
  CHECK(none.precision == 0.0);
  CHECK(none.f1 == 0.0);
  CHECK_THROWS_AS(compute_metrics({}), ShapeError);
}

TEST_CASE("f1 from the reported mean precision and recall") {
  const double p = 0.791, r = 0.953;
  const double f1 = 2 * p * r / (p + r);
  CHECK(f1 == doctest::Approx(0.8645).epsilon(1e-4));
  CHECK(std::abs(f1 - 0.862) <= 0.005);
  // The same value through compute_metrics, from counts with those ratios.
  const auto m = compute_metrics({953, 252, 0, 47});
  CHECK(m.recall == doctest::Approx(0.953));
  CHECK(m.precision == doctest::Approx(0.791).epsilon(1e-3));
  CHECK(m.f1 == doctest::Approx(0.8645).epsilon(1e-3));
}

TEST_CASE("compute_metrics matches a direct count on every 6-sample case") {
  for (unsigned pm = 0; pm < 64; ++pm)
    for (unsigned lm = 0; lm < 64; ++lm) {
      const auto p = bits(pm, 6), l = bits(lm, 6);
      const auto m = compute_metrics(confusion(p, l));
      const auto ref = reference_metrics(p, l);
      REQUIRE(m.accuracy == ref.accuracy);
      REQUIRE(m.precision == ref.precision);
      REQUIRE(m.recall == ref.recall);
      REQUIRE(m.f1 == ref.f1);
      REQUIRE(m.accuracy == double(m.counts.tp + m.counts.tn) / 6.0);
      for (double v : {m.accuracy, m.precision, m.recall, m.f1}) REQUIRE((v >= 0.0 && v <= 1.0));
      if (m.precision > 0 && m.recall > 0) {
        REQUIRE(m.f1 <= std::max(m.precision, m.recall) + 1e-15);
        REQUIRE(m.f1 >= std::min(m.precision, m.recall) - 1e-15);
      }
    }
}

TEST_CASE("metrics csv row") {
  CHECK(metrics_csv_row("S1", compute_metrics({1, 1, 1, 1})) == "S1,0.500000,0.500000,0.500000,0.500000");
}
