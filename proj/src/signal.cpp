#include "cfpn/signal.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

namespace cfpn {

using cplx = std::complex<double>;

std::vector<cplx> BiquadCascade::poles() const {
  std::vector<cplx> out;
  for (const auto& s : sections) {
    // z^2 + a1 z + a2 = 0
    const cplx disc = std::sqrt(cplx(s.a1 * s.a1 - 4.0 * s.a2, 0.0));
    out.push_back((-s.a1 + disc) / 2.0);
    out.push_back((-s.a1 - disc) / 2.0);
  }
  return out;
}

namespace {

cplx section_response(const Biquad& s, cplx z_inv) {
  return (s.b0 + s.b1 * z_inv + s.b2 * z_inv * z_inv) / (1.0 + s.a1 * z_inv + s.a2 * z_inv * z_inv);
}

cplx unit_circle_inv(double hz, double fs) {
  return std::polar(1.0, -2.0 * std::numbers::pi * hz / fs);
}

}  // namespace

double BiquadCascade::magnitude(double hz, double sampling_rate) const {
  const cplx z_inv = unit_circle_inv(hz, sampling_rate);
  cplx h = 1.0;
  for (const auto& s : sections) h *= section_response(s, z_inv);
  return std::abs(h);
}

BiquadCascade design_bandpass(const FilterSpec& spec, double sampling_rate) {
  if (!(spec.f_low > 0.0) || !(spec.f_low < spec.f_high))
    throw ConfigError("bandpass needs 0 < f_low < f_high");
  if (!(spec.f_high < sampling_rate / 2.0))
    throw ConfigError("bandpass f_high " + std::to_string(spec.f_high) +
                      " Hz is not below Nyquist " + std::to_string(sampling_rate / 2.0) + " Hz");
  if (spec.order <= 0 || spec.order % 2 != 0)
    throw ConfigError("bandpass order must be a positive even integer, got " +
                      std::to_string(spec.order));

  const double pi = std::numbers::pi;
  const double fs2 = 2.0 * sampling_rate;
  const double w_low = fs2 * std::tan(pi * spec.f_low / sampling_rate);
  const double w_high = fs2 * std::tan(pi * spec.f_high / sampling_rate);
  const double w0 = std::sqrt(w_low * w_high);
  const double bw = w_high - w_low;
  const int n = spec.order / 2;

  // Analog lowpass prototype poles -> bandpass poles -> digital poles.
  std::vector<cplx> digital;
  for (int k = 0; k < n; ++k) {
    const cplx p = std::polar(1.0, pi * (2.0 * k + n + 1) / (2.0 * n));
    const cplx pb = p * bw;
    const cplx root = std::sqrt(pb * pb - 4.0 * w0 * w0);
    for (const cplx s : {(pb + root) / 2.0, (pb - root) / 2.0})
      digital.push_back((fs2 + s) / (fs2 - s));
  }

  // Pair conjugates; real poles (rare, wide odd-prototype bands) pair with each other.
  std::vector<cplx> upper, real;
  for (const auto& z : digital) {
    if (std::abs(z.imag()) < 1e-12)
      real.push_back(z.real());
    else if (z.imag() > 0)
      upper.push_back(z);
  }
  std::sort(upper.begin(), upper.end(), [](cplx a, cplx b) { return std::abs(a) < std::abs(b); });
  std::sort(real.begin(), real.end(), [](cplx a, cplx b) { return a.real() < b.real(); });

  BiquadCascade cascade;
  auto push = [&](double a1, double a2) { cascade.sections.push_back({1.0, 0.0, -1.0, a1, a2}); };
  for (const auto& z : upper) push(-2.0 * z.real(), std::norm(z));
  for (std::size_t i = 0; i + 1 < real.size(); i += 2)
    push(-(real[i].real() + real[i + 1].real()), real[i].real() * real[i + 1].real());

  // Unit gain per section at the (prewarped) analog centre frequency.
  const double f_centre = sampling_rate / pi * std::atan(w0 / fs2);
  const cplx z_inv = unit_circle_inv(f_centre, sampling_rate);
  for (auto& s : cascade.sections) {
    const double g = std::abs(section_response(s, z_inv));
    s.b0 /= g;
    s.b1 /= g;
    s.b2 /= g;
  }
  return cascade;
}

namespace {

// Transposed direct form II, in place, starting from the given states.
void run_cascade(const BiquadCascade& cascade, std::vector<double>& x,
                 const std::vector<std::array<double, 2>>& init, double scale) {
  for (std::size_t k = 0; k < cascade.sections.size(); ++k) {
    const auto& s = cascade.sections[k];
    double s1 = init[k][0] * scale;
    double s2 = init[k][1] * scale;
    for (auto& v : x) {
      const double in = v;
      const double out = s.b0 * in + s1;
      s1 = s.b1 * in - s.a1 * out + s2;
      s2 = s.b2 * in - s.a2 * out;
      v = out;
    }
  }
}

// States that make a unit step input look like it has always been applied.
std::vector<std::array<double, 2>> steady_state(const BiquadCascade& cascade) {
  std::vector<std::array<double, 2>> zi;
  double level = 1.0;
  for (const auto& s : cascade.sections) {
    const double gain = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
    const double out = gain * level;
    const double s2 = s.b2 * level - s.a2 * out;
    const double s1 = s.b1 * level - s.a1 * out + s2;
    zi.push_back({s1, s2});
    level = out;
  }
  return zi;
}

}  // namespace

std::vector<double> filtfilt(const BiquadCascade& cascade, std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  const std::size_t pad = std::min<std::size_t>(3 * (2 * cascade.sections.size() + 1), n - 1);

  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  const auto zi = steady_state(cascade);
  run_cascade(cascade, ext, zi, ext.front());
  std::reverse(ext.begin(), ext.end());
  run_cascade(cascade, ext, zi, ext.front());
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(pad),
          ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

Epoch apply_bandpass(const Epoch& epoch, const BiquadCascade& cascade) {
  if (!all_finite(epoch.data)) throw NumericError("apply_bandpass: epoch contains non-finite samples");
  Epoch out = epoch;
  for (std::size_t c = 0; c < epoch.channels; ++c) {
    std::span<const double> row(epoch.data.data() + c * epoch.samples, epoch.samples);
    const auto y = filtfilt(cascade, row);
    std::copy(y.begin(), y.end(), out.data.begin() + static_cast<std::ptrdiff_t>(c * epoch.samples));
  }
  return out;
}

Epoch minmax_normalize(const Epoch& epoch) {
  Epoch out = epoch;
  for (std::size_t c = 0; c < epoch.channels; ++c) {
    const auto first = epoch.data.begin() + static_cast<std::ptrdiff_t>(c * epoch.samples);
    const auto [lo, hi] = std::minmax_element(first, first + static_cast<std::ptrdiff_t>(epoch.samples));
    const double range = *hi - *lo;
    for (std::size_t s = 0; s < epoch.samples; ++s)
      out.at(c, s) = range > 0.0 ? (epoch.at(c, s) - *lo) / range : 0.5;
  }
  return out;
}

Tensor flatten(const std::vector<Epoch>& epochs) {
  if (epochs.empty()) return Tensor({0, 0});
  const std::size_t ch = epochs.front().channels, t = epochs.front().samples;
  Tensor flat({epochs.size(), ch * t});
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    const auto& e = epochs[i];
    if (e.channels != ch || e.samples != t)
      throw ShapeError("flatten: epoch " + std::to_string(i) + " has shape (" +
                       std::to_string(e.channels) + "x" + std::to_string(e.samples) +
                       "), expected (" + std::to_string(ch) + "x" + std::to_string(t) + ")");
    std::copy(e.data.begin(), e.data.end(), flat.data() + i * ch * t);
  }
  return flat;
}

Epoch unflatten_row(const Tensor& flat, std::size_t row, std::size_t channels, std::size_t samples) {
  if (flat.rank() != 2 || flat.dim(1) != channels * samples || row >= flat.dim(0))
    throw ShapeError("unflatten: cannot read row " + std::to_string(row) + " of " +
                     shape_string(flat.shape()) + " as " + std::to_string(channels) + "x" +
                     std::to_string(samples));
  Epoch e;
  e.channels = channels;
  e.samples = samples;
  const double* begin = flat.data() + row * channels * samples;
  e.data.assign(begin, begin + channels * samples);
  return e;
}

std::vector<Epoch> generate_synthetic(std::size_t n_per_class, std::size_t channels,
                                      std::size_t samples, double sampling_rate, double snr_db,
                                      std::uint64_t seed) {
  if (n_per_class == 0) throw ConfigError("generate_synthetic needs n_per_class >= 1");
  constexpr double amplitude = 20.0;  // microvolts
  const double noise_sigma =
      std::sqrt(amplitude * amplitude / 2.0 / std::pow(10.0, snr_db / 10.0));

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> noise(0.0, noise_sigma);

  std::vector<Epoch> out;
  out.reserve(2 * n_per_class);
  for (std::size_t i = 0; i < 2 * n_per_class; ++i) {
    Epoch e;
    e.channels = channels;
    e.samples = samples;
    e.sampling_rate = static_cast<double>(static_cast<float>(sampling_rate));
    e.label = static_cast<std::uint8_t>(i % 2);
    e.subject_id = "SYN" + std::to_string(seed % 1000);
    e.data.resize(channels * samples);
    const double freq = e.label == 0 ? kTheta : kBeta;
    for (std::size_t c = 0; c < channels; ++c) {
      const double ph = phase(rng);
      for (std::size_t s = 0; s < samples; ++s) {
        const double t = static_cast<double>(s) / sampling_rate;
        const double v = amplitude * std::sin(2.0 * std::numbers::pi * freq * t + ph) + noise(rng);
        e.at(c, s) = static_cast<double>(static_cast<float>(v));
      }
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace cfpn
