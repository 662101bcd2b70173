#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "cfpn/tensor.hpp"

namespace cfpn {

/// One labeled EEG segment: channels × samples, channel-major.
struct Epoch {
  std::size_t channels = 0;
  std::size_t samples = 0;
  std::vector<double> data;  // channels * samples
  double sampling_rate = 0.0;
  std::uint8_t label = 0;  // 0 = negative, 1 = positive
  std::string subject_id;

  double& at(std::size_t c, std::size_t s) { return data[c * samples + s]; }
  double at(std::size_t c, std::size_t s) const { return data[c * samples + s]; }

  bool operator==(const Epoch&) const = default;
};

struct FilterSpec {
  double f_low = 0.5;
  double f_high = 30.0;
  int order = 4;  // total bandpass order, must be even
};

struct Biquad {
  double b0, b1, b2, a1, a2;
};

/// Second-order sections applied in sequence.
struct BiquadCascade {
  std::vector<Biquad> sections;

  std::vector<std::complex<double>> poles() const;
  /// Single-pass |H(e^{jw})| at frequency `hz`.
  double magnitude(double hz, double sampling_rate) const;
  /// Forward-backward response |H|^2, the effective gain of apply_bandpass.
  double zero_phase_gain(double hz, double sampling_rate) const {
    const double m = magnitude(hz, sampling_rate);
    return m * m;
  }
};

/// Butterworth bandpass via prewarped bilinear transform, split into
/// order/2 sections, each normalized to unit gain at the passband centre.
BiquadCascade design_bandpass(const FilterSpec& spec, double sampling_rate);

/// Zero-phase filtering of a single channel (odd-extension padding and
/// steady-state initial conditions, forward then reverse).
std::vector<double> filtfilt(const BiquadCascade& cascade, std::span<const double> x);

/// Filters every channel independently; metadata is preserved.
Epoch apply_bandpass(const Epoch& epoch, const BiquadCascade& cascade);

/// Per-channel min-max scaling into [0,1]; constant channels map to 0.5.
Epoch minmax_normalize(const Epoch& epoch);

/// Row i = epoch i flattened channel-major (column c*t + s).
Tensor flatten(const std::vector<Epoch>& epochs);
/// Inverse of flatten for one row; label and rate are not recoverable.
Epoch unflatten_row(const Tensor& flat, std::size_t row, std::size_t channels, std::size_t samples);

/// Balanced two-class synthetic set: class 0 carries a 6 Hz rhythm, class 1
/// a 20 Hz rhythm, each channel with random phase plus white noise at the
/// given SNR. Samples are rounded to float32 so epoch files round-trip.
std::vector<Epoch> generate_synthetic(std::size_t n_per_class, std::size_t channels,
                                      std::size_t samples, double sampling_rate, double snr_db,
                                      std::uint64_t seed);

inline constexpr double kTheta = 6.0;
inline constexpr double kBeta = 20.0;

}  // namespace cfpn
