#include <doctest.h>

#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "cfpn/epoch_file.hpp"
#include "cfpn/signal.hpp"

using namespace cfpn;
namespace fs = std::filesystem;

namespace {

Epoch sine_epoch(double hz, double fs, std::size_t n, double amp = 1.0) {
  Epoch e{1, n, std::vector<double>(n), fs, 0, "s"};
  for (std::size_t i = 0; i < n; ++i) e.data[i] = amp * std::sin(2 * std::numbers::pi * hz * i / fs);
  return e;
}

double rms(std::span<const double> x) {
  double s = 0;
  for (double v : x) s += v * v;
  return std::sqrt(s / x.size());
}

// Interior half of a signal, away from the filter's edge transients.
std::span<const double> interior(const std::vector<double>& x) { return {x.data() + x.size() / 4, x.size() / 2}; }

// Direct O(n²) DFT power of one channel at bin k.
double dft_power(std::span<const double> x, std::size_t k) {
  std::complex<double> acc = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    acc += x[i] * std::polar(1.0, -2 * std::numbers::pi * k * i / x.size());
  return std::norm(acc);
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / "cfpn_tests";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("bandpass design matches a reference DSP oracle") {
  const auto c = design_bandpass({0.5, 30.0, 4}, 500.0);
  REQUIRE(c.sections.size() == 2);

  // Single-pass |H| of scipy.signal.butter(4, [0.5, 30], 'bandpass', fs=500).
  const std::pair<double, double> gains[] = {{5, 0.99999059}, {10, 0.9967375}, {15, 0.97645224},
                                             {20, 0.92199407}, {60, 0.22070039}, {100, 0.06668812}};
  for (auto [hz, g] : gains) CHECK(c.magnitude(hz, 500.0) == doctest::Approx(g).epsilon(1e-6));

  std::vector<double> radii;
  for (auto p : c.poles()) radii.push_back(std::abs(p));
  std::sort(radii.begin(), radii.end());
  REQUIRE(radii.size() == 4);
  CHECK(radii[0] == doctest::Approx(0.772931845034).epsilon(1e-9));
  CHECK(radii[1] == doctest::Approx(0.772931845034).epsilon(1e-9));
  CHECK(radii[2] == doctest::Approx(0.995571965808).epsilon(1e-9));
  CHECK(radii[3] == doctest::Approx(0.995571965808).epsilon(1e-9));
  for (double r : radii) CHECK(r < 1.0);
}

TEST_CASE("bandpass passband, centre and stopband") {
  const auto c = design_bandpass({}, 500.0);
  for (double hz : {5.0, 10.0, 15.0, 20.0}) {
    CHECK(c.magnitude(hz, 500.0) >= 0.9);
    CHECK(c.magnitude(hz, 500.0) <= 1.05);
  }
  const double centre = std::sqrt(0.5 * 30.0);
  CHECK(c.magnitude(centre, 500.0) >= 0.99);
  CHECK(c.magnitude(centre, 500.0) <= 1.01);
  CHECK(20 * std::log10(c.zero_phase_gain(60.0, 500.0)) <= -20.0);
}

TEST_CASE("bandpass configuration errors") {
  CHECK_THROWS_AS(design_bandpass({0.5, 300.0, 4}, 500.0), ConfigError);
  CHECK_THROWS_AS(design_bandpass({0.5, 30.0, 3}, 500.0), ConfigError);
  CHECK_THROWS_AS(design_bandpass({40.0, 30.0, 4}, 500.0), ConfigError);
  CHECK_THROWS_AS(design_bandpass({0.5, 30.0, 0}, 500.0), ConfigError);
  for (int order : {2, 6, 8}) CHECK(design_bandpass({1.0, 40.0, order}, 250.0).sections.size() == order / 2);
}

TEST_CASE("apply_bandpass on pure tones and DC") {
  const auto c = design_bandpass({}, 500.0);
  const auto in10 = sine_epoch(10, 500, 2000);
  const auto out10 = apply_bandpass(in10, c);
  const double ratio = rms(interior(out10.data)) / rms(interior(in10.data));
  CHECK(ratio >= 0.95);
  CHECK(ratio <= 1.05);

  // the 0.5 Hz poles ring for a few thousand samples, so the stopband tone needs a long run
  const auto in100 = sine_epoch(100, 500, 8000);
  CHECK(rms(interior(apply_bandpass(in100, c).data)) <= 0.1 * rms(interior(in100.data)));

  Epoch dc{1, 2000, std::vector<double>(2000, 1.0), 500, 1, "dc"};
  const auto out = apply_bandpass(dc, c);
  double mean = 0;
  for (double v : interior(out.data)) mean += v;
  CHECK(std::abs(mean / 1000.0) < 0.02);
  CHECK(out.label == 1);
  CHECK(out.subject_id == "dc");

  dc.data[3] = NAN;
  CHECK_THROWS_AS(apply_bandpass(dc, c), NumericError);
}

TEST_CASE("zero-phase: a symmetric pulse stays centred") {
  const auto c = design_bandpass({}, 500.0);
  Epoch e{1, 801, std::vector<double>(801, 0.0), 500, 0, ""};
  for (int i = -20; i <= 20; ++i) e.data[400 + i] = std::exp(-0.5 * (i / 6.0) * (i / 6.0));
  const auto out = apply_bandpass(e, c);
  const auto peak = std::max_element(out.data.begin(), out.data.end()) - out.data.begin();
  CHECK(std::abs(peak - 400) <= 1);
}

TEST_CASE("apply_bandpass is linear") {
  const auto c = design_bandpass({}, 250.0);
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n(0, 1);
  Epoch x{2, 300, std::vector<double>(600), 250, 0, ""}, y = x, mix = x;
  for (auto& v : x.data) v = n(rng);
  for (auto& v : y.data) v = n(rng);
  const double a = 1.7, b = -0.4;
  for (std::size_t i = 0; i < 600; ++i) mix.data[i] = a * x.data[i] + b * y.data[i];
  const auto fx = apply_bandpass(x, c), fy = apply_bandpass(y, c), fm = apply_bandpass(mix, c);
  double worst = 0, scale = 0;
  for (std::size_t i = 0; i < 600; ++i) {
    worst = std::max(worst, std::abs(fm.data[i] - (a * fx.data[i] + b * fy.data[i])));
    scale = std::max(scale, std::abs(fm.data[i]));
  }
  CHECK(worst <= 1e-9 * scale);
}

TEST_CASE("minmax_normalize") {
  Epoch e{3, 3, {0, 5, 10, 3, 3, 3, -2, 4, 1}, 100, 0, ""};
  const auto n = minmax_normalize(e);
  CHECK(std::vector<double>(n.data.begin(), n.data.begin() + 3) == std::vector<double>{0, 0.5, 1});
  CHECK(std::vector<double>(n.data.begin() + 3, n.data.begin() + 6) == std::vector<double>{0.5, 0.5, 0.5});
  CHECK(*std::min_element(n.data.begin() + 6, n.data.end()) == 0.0);
  CHECK(*std::max_element(n.data.begin() + 6, n.data.end()) == 1.0);
}

TEST_CASE("flatten layout, round trip and errors") {
  Epoch a{2, 3, {1, 2, 3, 4, 5, 6}, 100, 0, ""}, b{2, 3, {7, 8, 9, 10, 11, 12}, 100, 1, ""};
  const auto f = flatten({a, b});
  CHECK(f.shape() == std::vector<std::size_t>{2, 6});
  CHECK(std::vector<double>(f.data(), f.data() + 6) == a.data);
  CHECK(unflatten_row(f, 1, 2, 3).data == b.data);

  Epoch c{2, 4, std::vector<double>(8), 100, 0, ""};
  CHECK_THROWS_AS(flatten({a, c}), ShapeError);

  std::mt19937_64 rng(8);
  std::uniform_int_distribution<std::size_t> dim(1, 12);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = dim(rng), ch = dim(rng), t = dim(rng);
    std::vector<Epoch> es(n, Epoch{ch, t, std::vector<double>(ch * t), 100, 0, ""});
    for (auto& e : es)
      for (auto& v : e.data) v = u(rng);
    const auto m = flatten(es);
    REQUIRE(m.shape() == std::vector<std::size_t>{n, ch * t});
    for (std::size_t i = 0; i < n; ++i) REQUIRE(unflatten_row(m, i, ch, t).data == es[i].data);
  }
}

TEST_CASE("synthetic data is deterministic and balanced") {
  const auto a = generate_synthetic(10, 4, 128, 250, 10, 42), b = generate_synthetic(10, 4, 128, 250, 10, 42);
  CHECK(a == b);
  CHECK(a != generate_synthetic(10, 4, 128, 250, 10, 43));
  std::size_t zeros = 0, ones = 0;
  for (const auto& e : a) (e.label == 0 ? zeros : ones)++;
  CHECK(zeros == 10);
  CHECK(ones == 10);
  CHECK_THROWS_AS(generate_synthetic(0, 4, 128, 250, 10, 1), ConfigError);
}

TEST_CASE("synthetic class 0 peaks at the theta frequency") {
  const double fs = 250;
  const std::size_t t = 256;
  for (const auto& e : generate_synthetic(3, 2, t, fs, 20, 5)) {
    if (e.label != 0) continue;
    std::vector<double> power(t / 2, 0.0);
    for (std::size_t c = 0; c < e.channels; ++c)
      for (std::size_t k = 1; k < t / 2; ++k) power[k] += dft_power({e.data.data() + c * t, t}, k);
    const auto k = std::max_element(power.begin(), power.end()) - power.begin();
    CHECK(std::abs(k * fs / t - kTheta) <= 1.0);
  }
}

TEST_CASE("synthetic classes separate in beta band power") {
  const double fs = 250;
  const std::size_t t = 256;
  auto beta_power = [&](const Epoch& e) {
    double p = 0;
    for (std::size_t c = 0; c < e.channels; ++c)
      for (std::size_t k = 1; k < t / 2; ++k) {
        const double hz = k * fs / t;
        if (hz >= 18 && hz <= 22) p += dft_power({e.data.data() + c * t, t}, k);
      }
    return p;
  };
  double max0 = 0, min1 = INFINITY;
  for (const auto& e : generate_synthetic(40, 8, t, fs, 10, 17))
    (e.label == 0 ? max0 = std::max(max0, beta_power(e)) : min1 = std::min(min1, beta_power(e)));
  CHECK(min1 > max0);
}

TEST_CASE("epoch file round trip") {
  auto e = generate_synthetic(1, 3, 16, 250, 10, 1).front();
  e.subject_id = "S07";
  const auto path = scratch("rt.eeg");
  write_epoch_file(e, path);
  const auto r = read_epoch_file(path);
  CHECK(r == e);
  CHECK(fs::file_size(path) == kEpochHeaderBytes + 3 * 16 * 4);
}

TEST_CASE("epoch file format errors") {
  const auto e = generate_synthetic(1, 2, 8, 250, 10, 1).front();
  auto bytes = encode_epoch(e);

  auto bad = bytes;
  bad.replace(0, 4, "XXXX");
  try {
    decode_epoch(bad);
    FAIL("expected FormatError");
  } catch (const FormatError& err) {
    CHECK(std::string(err.what()).find("offset 0") != std::string::npos);
  }

  bad = bytes;
  bad[4] = 2;
  CHECK_THROWS_AS(decode_epoch(bad), FormatError);

  CHECK_THROWS_WITH_AS(decode_epoch(bytes.substr(0, bytes.size() - 4)), doctest::Contains("trunc"), FormatError);
  CHECK_THROWS_AS(read_epoch_file(scratch("missing.eeg")), FormatError);
}

TEST_CASE("manifest reading") {
  const auto dir = scratch("ds");
  fs::create_directories(dir);
  const auto es = generate_synthetic(2, 2, 8, 250, 10, 3);
  for (std::size_t i = 0; i < es.size(); ++i) write_epoch_file(es[i], dir / ("e" + std::to_string(i) + ".eeg"));
  std::ofstream(dir / "manifest.txt") << "# comment\ne0.eeg\n\ne1.eeg\ne2.eeg\ne3.eeg\n";
  CHECK(read_manifest(dir / "manifest.txt").size() == 4);
  CHECK(load_dataset(dir / "manifest.txt") == es);
  std::ofstream(dir / "empty.txt") << "# nothing\n";
  CHECK_THROWS_AS(load_dataset(dir / "empty.txt"), FormatError);
}
