#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "ppgad/types.hpp"

namespace ppgad::dsp {

// Fourth-order IIR band-pass (2nd-order Butterworth prototype per edge).
// Coefficients are normalized so that a[0] == 1.
struct BandpassFilter {
  std::array<double, 5> b{};
  std::array<double, 5> a{};
  double low_hz = 0.0;
  double high_hz = 0.0;
  double fs = 0.0;
};

// Analog Butterworth prototype, low-pass to band-pass transform and bilinear
// transform with pre-warped band edges. Throws ConfigError unless
// 0 < low_hz < high_hz < fs/2.
BandpassFilter design_butterworth_bandpass(double low_hz, double high_hz, double fs);

// Validates a band without designing anything.
void check_band(double low_hz, double high_hz, double fs);

// Complex response H(e^{jw}) at a physical frequency.
std::complex<double> frequency_response(const BandpassFilter& filter, double hz);

// Roots of the denominator polynomial.
std::vector<std::complex<double>> poles(const BandpassFilter& filter);

bool is_stable(const BandpassFilter& filter);

// Single forward pass, direct form II transposed, starting from state `zi`
// (length 4) or from rest when `zi` is empty.
std::vector<double> lfilter(const BandpassFilter& filter, std::span<const double> x,
                            std::span<const double> zi = {});

// Steady-state initial condition of lfilter for a unit step input.
std::array<double, 4> lfilter_zi(const BandpassFilter& filter);

// Zero-phase forward-backward filtering. The signal is extended at both ends
// by odd reflection (15 samples, or len-1 if shorter) and each pass starts
// from the steady-state initial condition scaled by the first sample.
std::vector<double> filtfilt(const BandpassFilter& filter, std::span<const double> x);

// filtfilt on a recording; metadata is copied. Throws ConfigError when the
// recording's sampling rate differs from the filter's design rate.
TimeSeries apply_filter(const BandpassFilter& filter, const TimeSeries& ts);

// Zero mean, unit population standard deviation over the whole recording.
// Throws DegenerateInputError for a constant signal.
TimeSeries znormalize(const TimeSeries& ts);
std::vector<double> znormalize(std::span<const double> x);

struct Segmentation {
  std::vector<Window> windows;
  bool too_short = false;  // signal shorter than a single window
};

// Windows of round(win_s*fs) samples every round((win_s-overlap_s)*fs)
// samples; a trailing partial window is dropped.
Segmentation segment(const TimeSeries& ts, double win_s, double overlap_s);

// Frequency-domain resampling: the spectrum is truncated or zero-padded, the
// Nyquist bin of even lengths is joined (downsampling) or split in half
// (upsampling), and the inverse transform is rescaled by target/source.
std::vector<double> fourier_resample(std::span<const double> x, std::size_t target_len);
Window fourier_resample(const Window& w, std::size_t target_len);

struct PipelineConfig {
  double low_hz = 0.1;
  double high_hz = 10.0;
  double window_s = 8.0;
  double overlap_s = 7.5;
  std::size_t target_len = 512;

  // Checks everything that does not depend on the sampling rate.
  void validate() const;
};

// filter -> z-normalize -> segment -> resample for one recording.
std::vector<Window> preprocess(const TimeSeries& ts, const PipelineConfig& config);

}  // namespace ppgad::dsp
