#include "ppgad/dsp.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "ppgad/error.hpp"

namespace ppgad::dsp {

namespace {

using cplx = std::complex<double>;

// Coefficients of prod(x - r) for the given roots, highest power first.
std::vector<cplx> poly_from_roots(const std::vector<cplx>& roots) {
  std::vector<cplx> c{1.0};
  for (const cplx& r : roots) {
    std::vector<cplx> next(c.size() + 1, 0.0);
    for (std::size_t i = 0; i < c.size(); ++i) {
      next[i] += c[i];
      next[i + 1] -= r * c[i];
    }
    c = std::move(next);
  }
  return c;
}

constexpr std::size_t kOrder = 4;

}  // namespace

void check_band(double low_hz, double high_hz, double fs) {
  if (!std::isfinite(low_hz) || !std::isfinite(high_hz) || !std::isfinite(fs) || fs <= 0.0) {
    throw ConfigError("band-pass: frequencies must be finite and fs positive");
  }
  if (!(low_hz > 0.0)) throw ConfigError("band-pass: low cutoff must be > 0 Hz");
  if (!(low_hz < high_hz)) {
    throw ConfigError("band-pass: low cutoff " + std::to_string(low_hz) +
                      " Hz must be below high cutoff " + std::to_string(high_hz) + " Hz");
  }
  if (!(high_hz < 0.5 * fs)) {
    throw ConfigError("band-pass: high cutoff " + std::to_string(high_hz) +
                      " Hz must be below Nyquist (" + std::to_string(0.5 * fs) + " Hz)");
  }
}

BandpassFilter design_butterworth_bandpass(double low_hz, double high_hz, double fs) {
  check_band(low_hz, high_hz, fs);

  // Pre-warped analog edges for the bilinear map s = 2 fs (z-1)/(z+1).
  const double k = 2.0 * fs;
  const double w1 = k * std::tan(std::numbers::pi * low_hz / fs);
  const double w2 = k * std::tan(std::numbers::pi * high_hz / fs);
  const double bw = w2 - w1;
  const double w0 = std::sqrt(w1 * w2);

  // 2nd-order analog Butterworth low-pass prototype, unit cutoff.
  const std::array<cplx, 2> proto{std::polar(1.0, 3.0 * std::numbers::pi / 4.0),
                                  std::polar(1.0, 5.0 * std::numbers::pi / 4.0)};

  // Low-pass -> band-pass: every prototype pole splits into two.
  std::vector<cplx> analog_poles;
  for (const cplx& p : proto) {
    const cplx half = p * (bw / 2.0);
    const cplx disc = std::sqrt(half * half - w0 * w0);
    analog_poles.push_back(half + disc);
    analog_poles.push_back(half - disc);
  }
  // Two zeros at s = 0; gain bw^2.
  const double analog_gain = bw * bw;

  // Bilinear transform. Zeros at s = 0 land on z = 1; the two zeros at
  // infinity land on z = -1.
  std::vector<cplx> z_poles;
  cplx denom_prod = 1.0;
  for (const cplx& p : analog_poles) {
    z_poles.push_back((k + p) / (k - p));
    denom_prod *= (k - p);
  }
  const std::vector<cplx> z_zeros{1.0, 1.0, -1.0, -1.0};
  const double gain = analog_gain * (k * k / denom_prod).real();

  const auto num = poly_from_roots(z_zeros);
  const auto den = poly_from_roots(z_poles);

  BandpassFilter f;
  for (std::size_t i = 0; i <= kOrder; ++i) {
    f.b[i] = gain * num[i].real();
    f.a[i] = den[i].real();
  }
  f.low_hz = low_hz;
  f.high_hz = high_hz;
  f.fs = fs;
  return f;
}

std::complex<double> frequency_response(const BandpassFilter& filter, double hz) {
  const double w = 2.0 * std::numbers::pi * hz / filter.fs;
  cplx num = 0.0;
  cplx den = 0.0;
  for (std::size_t i = 0; i <= kOrder; ++i) {
    const cplx e = std::polar(1.0, -w * static_cast<double>(i));
    num += filter.b[i] * e;
    den += filter.a[i] * e;
  }
  return num / den;
}

std::vector<std::complex<double>> poles(const BandpassFilter& filter) {
  // Eigenvalues of the companion matrix of a(z).
  Eigen::Matrix4d companion = Eigen::Matrix4d::Zero();
  for (std::size_t j = 0; j < kOrder; ++j) {
    companion(0, static_cast<Eigen::Index>(j)) = -filter.a[j + 1] / filter.a[0];
  }
  for (Eigen::Index i = 1; i < 4; ++i) companion(i, i - 1) = 1.0;
  Eigen::EigenSolver<Eigen::Matrix4d> solver(companion, false);
  std::vector<cplx> out;
  for (Eigen::Index i = 0; i < 4; ++i) out.push_back(solver.eigenvalues()(i));
  return out;
}

bool is_stable(const BandpassFilter& filter) {
  const auto p = poles(filter);
  return std::all_of(p.begin(), p.end(), [](const cplx& z) { return std::abs(z) < 1.0; });
}

std::vector<double> lfilter(const BandpassFilter& filter, std::span<const double> x,
                            std::span<const double> zi) {
  std::array<double, kOrder> z{};
  if (!zi.empty()) {
    if (zi.size() != kOrder) throw ContractViolation("lfilter: initial state must have length 4");
    std::copy(zi.begin(), zi.end(), z.begin());
  }
  const auto& b = filter.b;
  const auto& a = filter.a;
  std::vector<double> y(x.size());
  for (std::size_t n = 0; n < x.size(); ++n) {
    const double xn = x[n];
    const double yn = b[0] * xn + z[0];
    for (std::size_t i = 0; i + 1 < kOrder; ++i) {
      z[i] = b[i + 1] * xn + z[i + 1] - a[i + 1] * yn;
    }
    z[kOrder - 1] = b[kOrder] * xn - a[kOrder] * yn;
    y[n] = yn;
  }
  return y;
}

std::array<double, 4> lfilter_zi(const BandpassFilter& filter) {
  // Solve (I - A^T) zi = b[1:] - a[1:] b[0], A the companion matrix of a.
  Eigen::Matrix4d companion = Eigen::Matrix4d::Zero();
  for (Eigen::Index j = 0; j < 4; ++j) companion(0, j) = -filter.a[static_cast<std::size_t>(j) + 1];
  for (Eigen::Index i = 1; i < 4; ++i) companion(i, i - 1) = 1.0;
  const Eigen::Matrix4d lhs = Eigen::Matrix4d::Identity() - companion.transpose();
  Eigen::Vector4d rhs;
  for (Eigen::Index i = 0; i < 4; ++i) {
    const auto u = static_cast<std::size_t>(i) + 1;
    rhs(i) = filter.b[u] - filter.a[u] * filter.b[0];
  }
  const Eigen::Vector4d zi = lhs.partialPivLu().solve(rhs);
  return {zi(0), zi(1), zi(2), zi(3)};
}

std::vector<double> filtfilt(const BandpassFilter& filter, std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  const std::size_t pad = std::min<std::size_t>(3 * (kOrder + 1), n - 1);

  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  const auto zi = lfilter_zi(filter);
  auto scaled = [&zi](double v) {
    std::array<double, 4> s{};
    for (std::size_t i = 0; i < 4; ++i) s[i] = zi[i] * v;
    return s;
  };

  auto s0 = scaled(ext.front());
  std::vector<double> y = lfilter(filter, ext, s0);
  std::reverse(y.begin(), y.end());
  auto s1 = scaled(y.front());
  y = lfilter(filter, y, s1);
  std::reverse(y.begin(), y.end());

  return {y.begin() + static_cast<std::ptrdiff_t>(pad),
          y.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

TimeSeries apply_filter(const BandpassFilter& filter, const TimeSeries& ts) {
  if (ts.fs != filter.fs) {
    throw ConfigError("apply_filter: recording '" + ts.record + "' sampled at " +
                      std::to_string(ts.fs) + " Hz but filter designed for " +
                      std::to_string(filter.fs) + " Hz");
  }
  TimeSeries out = ts;
  out.samples = filtfilt(filter, ts.samples);
  return out;
}

std::vector<double> znormalize(std::span<const double> x) {
  if (x.empty()) throw DegenerateInputError("znormalize: empty signal");
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / n);
  if (!(sd > 0.0) || sd <= 1e-300) {
    throw DegenerateInputError("znormalize: signal has zero variance");
  }
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean) / sd;
  return out;
}

TimeSeries znormalize(const TimeSeries& ts) {
  TimeSeries out = ts;
  try {
    out.samples = znormalize(std::span<const double>(ts.samples));
  } catch (const DegenerateInputError& e) {
    throw DegenerateInputError(std::string(e.what()) + " (record '" + ts.record + "', subject '" +
                               ts.subject_id + "')");
  }
  return out;
}

Segmentation segment(const TimeSeries& ts, double win_s, double overlap_s) {
  if (!(win_s > 0.0) || !(overlap_s >= 0.0) || !(overlap_s < win_s)) {
    throw ConfigError("segment: need window > overlap >= 0 seconds");
  }
  if (!(ts.fs > 0.0)) throw ConfigError("segment: sampling rate must be positive");
  const auto win = static_cast<std::size_t>(std::llround(win_s * ts.fs));
  const auto stride = static_cast<std::size_t>(std::llround((win_s - overlap_s) * ts.fs));
  if (win == 0 || stride == 0) {
    throw ConfigError("segment: window or stride rounds to zero samples at fs=" +
                      std::to_string(ts.fs));
  }

  Segmentation out;
  if (ts.samples.size() < win) {
    out.too_short = true;
    return out;
  }
  const std::size_t count = (ts.samples.size() - win) / stride + 1;
  out.windows.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t off = i * stride;
    Window w;
    w.values.assign(ts.samples.begin() + static_cast<std::ptrdiff_t>(off),
                    ts.samples.begin() + static_cast<std::ptrdiff_t>(off + win));
    w.source_subject = ts.subject_id;
    w.source_activity = ts.activity;
    w.source_record = ts.record;
    w.offset = off;
    w.index = i;
    w.start_time_s = static_cast<double>(off) / ts.fs;
    out.windows.push_back(std::move(w));
  }
  return out;
}

std::vector<double> fourier_resample(std::span<const double> x, std::size_t target_len) {
  if (x.empty()) throw ContractViolation("fourier_resample: empty input");
  if (target_len < 2) throw ConfigError("fourier_resample: target length must be >= 2");
  const std::size_t nx = x.size();
  if (nx == target_len) return {x.begin(), x.end()};

  Eigen::FFT<double> fft;
  std::vector<cplx> in(x.begin(), x.end());
  std::vector<cplx> spec;
  fft.fwd(spec, in);

  const std::size_t num = target_len;
  const std::size_t n = std::min(num, nx);
  const std::size_t nyq = n / 2 + 1;
  std::vector<cplx> y(num, 0.0);
  for (std::size_t i = 0; i < nyq; ++i) y[i] = spec[i];
  if (n > 2) {
    const std::size_t tail = n - nyq;
    for (std::size_t j = 0; j < tail; ++j) y[num - tail + j] = spec[nx - tail + j];
  }
  if (n % 2 == 0) {
    if (num < nx) {
      y[n / 2] += spec[nx - n / 2];
    } else {
      y[n / 2] *= 0.5;
      y[num - n / 2] = y[n / 2];
    }
  }

  std::vector<cplx> back;
  fft.inv(back, y);  // includes the 1/num factor
  const double scale = static_cast<double>(num) / static_cast<double>(nx);
  std::vector<double> out(num);
  for (std::size_t i = 0; i < num; ++i) out[i] = back[i].real() * scale;
  return out;
}

Window fourier_resample(const Window& w, std::size_t target_len) {
  Window out = w;
  out.values = fourier_resample(std::span<const double>(w.values), target_len);
  return out;
}

void PipelineConfig::validate() const {
  if (!(low_hz > 0.0) || !(low_hz < high_hz)) {
    throw ConfigError("band: need 0 < low < high, got " + std::to_string(low_hz) + ":" +
                      std::to_string(high_hz));
  }
  if (!(window_s > 0.0) || !(overlap_s >= 0.0) || !(overlap_s < window_s)) {
    throw ConfigError("windowing: need window > overlap >= 0 seconds");
  }
  if (target_len < 2) throw ConfigError("target length must be >= 2");
}

std::vector<Window> preprocess(const TimeSeries& ts, const PipelineConfig& config) {
  config.validate();
  ts.validate();
  const auto filter = design_butterworth_bandpass(config.low_hz, config.high_hz, ts.fs);
  const TimeSeries normalized = znormalize(apply_filter(filter, ts));
  Segmentation seg = segment(normalized, config.window_s, config.overlap_s);
  std::vector<Window> out;
  out.reserve(seg.windows.size());
  for (const Window& w : seg.windows) out.push_back(fourier_resample(w, config.target_len));
  return out;
}

}  // namespace ppgad::dsp
