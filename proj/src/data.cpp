#include "ppgad/data.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "ppgad/dsp.hpp"
#include "ppgad/error.hpp"
#include "ppgad/rng.hpp"

namespace ppgad::data {

namespace fs = std::filesystem;

namespace {

constexpr const char* kManifestHeader = "ppgad-manifest";

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

bool parse_double(std::string_view s, double& out) {
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

bool parse_size(std::string_view s, std::size_t& out) {
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

std::vector<std::string> tokens_of(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Manifest

void DatasetManifest::validate() const {
  double rate = 0.0;
  for (const auto& r : records) {
    if (r.subject_id.empty()) throw ConfigError("manifest: record with empty subject id");
    if (!(r.fs > 0.0)) throw ConfigError("manifest: record '" + r.path + "' has fs <= 0");
    if (rate == 0.0) rate = r.fs;
    if (r.fs != rate) {
      throw ConfigError("manifest: sampling rate must be uniform (" + format_double(rate) +
                        " Hz vs " + format_double(r.fs) + " Hz in '" + r.path + "')");
    }
  }
  if (rate > 0.0) {
    dsp::check_band(low_hz, high_hz, rate);
  } else if (!(low_hz > 0.0 && low_hz < high_hz)) {
    throw ConfigError("manifest: invalid band");
  }
}

double DatasetManifest::fs() const { return records.empty() ? 0.0 : records.front().fs; }

std::string format_manifest(const DatasetManifest& m) {
  std::ostringstream out;
  out << kManifestHeader << " 1\n";
  out << "band " << format_double(m.low_hz) << ' ' << format_double(m.high_hz) << '\n';
  for (const auto& r : m.records) {
    out << "record " << r.subject_id << ' ' << r.activity.name() << ' ' << format_double(r.fs)
        << ' ' << r.sample_count << ' ' << r.path << '\n';
  }
  return out.str();
}

DatasetManifest parse_manifest(std::string_view text, const std::string& root) {
  DatasetManifest m;
  m.root = root;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  bool saw_header = false;
  bool saw_band = false;
  auto fail = [&lineno](const std::string& what) {
    throw IngestionError("manifest line " + std::to_string(lineno) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto tok = tokens_of(line);
    if (tok.empty()) continue;
    if (!saw_header) {
      if (tok.size() != 2 || tok[0] != kManifestHeader) fail("expected 'ppgad-manifest 1'");
      if (tok[1] != "1") fail("unsupported manifest version " + tok[1]);
      saw_header = true;
      continue;
    }
    if (tok[0] == "band") {
      if (tok.size() != 3 || !parse_double(tok[1], m.low_hz) || !parse_double(tok[2], m.high_hz)) {
        fail("expected 'band <low_hz> <high_hz>'");
      }
      saw_band = true;
    } else if (tok[0] == "record") {
      ManifestRecord r;
      if (tok.size() != 6) fail("expected 'record <subject> <activity> <fs> <count> <path>'");
      r.subject_id = tok[1];
      r.activity = Activity::parse(tok[2]);
      if (!parse_double(tok[3], r.fs)) fail("bad sampling rate '" + tok[3] + "'");
      if (!parse_size(tok[4], r.sample_count)) fail("bad sample count '" + tok[4] + "'");
      r.path = tok[5];
      m.records.push_back(std::move(r));
    } else {
      fail("unknown directive '" + tok[0] + "'");
    }
  }
  if (!saw_header) throw IngestionError("manifest: missing 'ppgad-manifest 1' header");
  if (!saw_band) throw IngestionError("manifest: missing 'band' line");
  return m;
}

DatasetManifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open manifest: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const fs::path p(path);
  return parse_manifest(buf.str(), p.has_parent_path() ? p.parent_path().string() : ".");
}

void write_manifest(const std::string& path, const DatasetManifest& manifest) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IngestionError("cannot write manifest: " + path);
  out << format_manifest(manifest);
  if (!out) throw IngestionError("failed writing manifest: " + path);
}

std::vector<double> read_samples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open sample file: " + path);
  std::vector<double> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    const std::string_view tok(line.data() + first, last - first + 1);
    double v = 0.0;
    if (!parse_double(tok, v)) {
      // from_chars rejects "nan"/"inf" spelled in other cases; report uniformly.
      throw IngestionError(path + ": line " + std::to_string(lineno) + " is not a number: '" +
                           std::string(tok) + "'");
    }
    if (!std::isfinite(v)) {
      throw IngestionError(path + ": non-finite sample at index " + std::to_string(out.size()));
    }
    out.push_back(v);
  }
  return out;
}

void write_samples(const std::string& path, std::span<const double> samples) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IngestionError("cannot write sample file: " + path);
  for (double v : samples) out << format_double(v) << '\n';
  if (!out) throw IngestionError("failed writing sample file: " + path);
}

LoadResult load_dataset(const DatasetManifest& manifest) {
  LoadResult out;
  if (manifest.records.empty()) {
    out.warnings.push_back("manifest lists no records");
    return out;
  }
  manifest.validate();
  for (const auto& r : manifest.records) {
    const std::string full = (fs::path(manifest.root) / r.path).string();
    const std::string label = "record " + r.subject_id + "/" + r.activity.name() + " (" + full + ")";
    if (!fs::exists(full)) throw IngestionError(label + ": file not found");
    std::vector<double> samples;
    try {
      samples = read_samples(full);
    } catch (const IngestionError& e) {
      throw IngestionError(label + ": " + e.what());
    }
    if (samples.size() != r.sample_count) {
      throw IngestionError(label + ": manifest says " + std::to_string(r.sample_count) +
                           " samples, file has " + std::to_string(samples.size()));
    }
    TimeSeries ts{std::move(samples), r.fs, r.subject_id, r.activity, r.path};
    out.series.push_back(std::move(ts));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic PPG

void SubjectProfile::validate() const {
  if (!(heart_rate_bpm >= 40.0 && heart_rate_bpm <= 200.0)) {
    throw ConfigError("subject profile: heart rate must lie in [40, 200] bpm");
  }
  if (!(systolic_rise > 0.0 && systolic_width > 0.0 && diastolic_width > 0.0 &&
        diastolic_phase > 0.0 && diastolic_phase < 1.0 && diastolic_amplitude > 0.0 &&
        respiration_hz > 0.0)) {
    throw ConfigError("subject profile: beat morphology and breathing rate must be positive");
  }
  const MotionProfile& m = motion;
  for (double v : {hr_variability, noise_sigma, respiration_baseline, respiration_am, artifact_rate,
                   m.wander_amp, m.wander_hz, m.harmonic, m.phase_jitter, m.am_depth,
                   m.burst_rate, m.hr_increase_bpm}) {
    if (!(v >= 0.0)) {
      throw ConfigError("subject profile: variability, noise and motion terms must be >= 0");
    }
  }
  if (respiration_am >= 1.0 || m.am_depth >= 1.0) {
    throw ConfigError("subject profile: modulation depths must be below 1");
  }
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Adds Hann-tapered Gaussian noise bursts arriving as a Poisson process.
void add_bursts(std::vector<double>& x, double fs, double rate, double min_len, double max_len,
                double min_amp, double max_amp, Rng& rng) {
  if (rate <= 0.0) return;
  const double duration = static_cast<double>(x.size()) / fs;
  double t = -std::log(rng.uniform_open()) / rate;
  while (t < duration) {
    const double length = rng.uniform(min_len, max_len);
    const double amp = rng.uniform(min_amp, max_amp);
    const auto i0 = static_cast<std::size_t>(std::ceil(t * fs));
    const auto i1 = std::min(x.size(), static_cast<std::size_t>(std::floor((t + length) * fs)) + 1);
    for (std::size_t i = i0; i < i1; ++i) {
      const double phase = (static_cast<double>(i) / fs - t) / length;
      x[i] += amp * (0.5 - 0.5 * std::cos(kTwoPi * phase)) * rng.normal();
    }
    t += length - std::log(rng.uniform_open()) / rate;
  }
}

}  // namespace

TimeSeries synth_subject(const SubjectProfile& profile, const Activity& activity,
                         double duration_s, double fs, std::uint64_t seed,
                         const std::string& subject_id) {
  profile.validate();
  if (!(fs > 0.0)) throw ConfigError("synth_subject: fs must be positive");
  const MotionProfile& mp = profile.motion;
  const bool walking = activity.kind() == ActivityKind::Walking && mp.active();
  const double hr = profile.heart_rate_bpm + (walking ? mp.hr_increase_bpm : 0.0);
  const double period = 60.0 / hr;
  if (!(duration_s >= period)) {
    throw ConfigError("synth_subject: duration shorter than one beat period");
  }
  const auto n = static_cast<std::size_t>(std::llround(duration_s * fs));
  std::vector<double> x(n, 0.0);

  Rng beats(Rng::derive(seed, "beats"));
  const double breath_phase = beats.uniform(0.0, kTwoPi);
  auto breath = [&](double t) {
    return std::sin(kTwoPi * profile.respiration_hz * t + breath_phase);
  };
  std::vector<double> centers;
  for (double t = beats.uniform(0.0, period) - period; t < duration_s + period;) {
    centers.push_back(t);
    double step = period * (1.0 + profile.hr_variability * beats.normal());
    step = std::clamp(step, 0.5 * period, 1.5 * period);
    t += step;
  }

  const double sw = profile.systolic_width;
  const double dw = profile.diastolic_width;
  const double delay = profile.diastolic_phase * period;
  for (double c : centers) {
    const double amp = 1.0 + profile.respiration_am * breath(c);
    const double from = c - 5.0 * sw;
    const double to = c + delay + 5.0 * dw;
    const auto i0 = static_cast<std::ptrdiff_t>(std::ceil(std::max(0.0, from) * fs));
    const auto i1 = std::min(static_cast<std::ptrdiff_t>(n),
                             static_cast<std::ptrdiff_t>(std::floor(to * fs)) + 1);
    for (std::ptrdiff_t i = i0; i < i1; ++i) {
      const double t = static_cast<double>(i) / fs;
      const double ds = (t - c) / (t < c ? profile.systolic_rise : sw);
      const double dd = (t - c - delay) / dw;
      x[static_cast<std::size_t>(i)] +=
          amp * (std::exp(-0.5 * ds * ds) +
                 profile.diastolic_amplitude * std::exp(-0.5 * dd * dd));
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    x[i] += profile.respiration_baseline * breath(static_cast<double>(i) / fs) +
            profile.noise_sigma * beats.normal();
  }

  Rng motion(Rng::derive(seed, "motion"));
  add_bursts(x, fs, profile.artifact_rate, 0.3, 1.0, 1.0, 3.0, motion);

  if (walking) {
    const double am_phase = motion.uniform(0.0, kTwoPi);
    const double harmonic_phase = motion.uniform(0.0, kTwoPi);
    double phase = motion.uniform(0.0, kTwoPi);
    const double dt = 1.0 / fs;
    const double jitter = mp.phase_jitter * std::sqrt(dt);
    for (std::size_t i = 0; i < n; ++i) {
      const double modulation = 1.0 + mp.am_depth * std::sin(0.5 * phase + am_phase);
      x[i] = x[i] * modulation +
             mp.wander_amp * (std::sin(phase) + mp.harmonic * std::sin(2.0 * phase + harmonic_phase));
      phase += kTwoPi * mp.wander_hz * dt + jitter * motion.normal();
    }
    add_bursts(x, fs, mp.burst_rate, 0.2, 0.6, 0.5, 1.5, motion);
  }

  TimeSeries ts;
  ts.samples = std::move(x);
  ts.fs = fs;
  ts.subject_id = subject_id;
  ts.activity = activity;
  ts.record = subject_id + "_" + activity.name() + ".txt";
  return ts;
}

SubjectProfile draw_profile(std::uint64_t seed) {
  Rng rng(seed);
  SubjectProfile p;
  p.heart_rate_bpm = rng.uniform(55.0, 95.0);
  p.hr_variability = rng.uniform(0.02, 0.06);
  p.systolic_width = rng.uniform(0.06, 0.10);
  p.diastolic_width = rng.uniform(0.08, 0.16);
  p.diastolic_phase = rng.uniform(0.25, 0.40);
  p.diastolic_amplitude = rng.uniform(0.25, 0.65);
  p.noise_sigma = rng.uniform(0.02, 0.06);
  p.respiration_hz = rng.uniform(0.20, 0.33);
  p.respiration_baseline = rng.uniform(0.10, 0.40);
  p.respiration_am = rng.uniform(0.05, 0.20);
  p.artifact_rate = rng.uniform(0.01, 0.04);
  p.motion.wander_amp = rng.uniform(0.5, 1.5);
  p.motion.wander_hz = rng.uniform(1.4, 2.0);
  p.motion.harmonic = rng.uniform(0.3, 0.8);
  p.motion.phase_jitter = rng.uniform(0.5, 1.5);
  p.motion.am_depth = rng.uniform(0.2, 0.5);
  p.motion.burst_rate = rng.uniform(0.2, 0.5);
  p.motion.hr_increase_bpm = rng.uniform(15.0, 35.0);
  p.systolic_rise = rng.uniform(0.03, 0.05);
  return p;
}

namespace {

std::string subject_name(std::size_t i, std::size_t n) {
  const std::size_t width = std::max<std::size_t>(2, std::to_string(n).size());
  std::string digits = std::to_string(i + 1);
  return "S" + std::string(width - digits.size(), '0') + digits;
}

}  // namespace

Cohort make_cohort_from_profiles(const std::vector<SubjectProfile>& profiles, std::uint64_t seed,
                                 const CohortOptions& options) {
  if (profiles.empty()) throw ConfigError("cohort: need at least one subject");
  Cohort c;
  c.manifest.root = ".";
  c.manifest.low_hz = options.low_hz;
  c.manifest.high_hz = options.high_hz;
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    const std::string id = subject_name(i, profiles.size());
    for (const Activity& act : {Activity(ActivityKind::Sitting), Activity(ActivityKind::Walking)}) {
      const std::uint64_t rs = Rng::derive(seed, "record/" + id + "/" + act.name());
      TimeSeries ts = synth_subject(profiles[i], act, options.duration_s, options.fs, rs, id);
      c.manifest.records.push_back({id, act, options.fs, ts.samples.size(), ts.record});
      c.series.push_back(std::move(ts));
    }
  }
  return c;
}

Cohort make_synthetic_cohort(std::size_t n_subjects, std::uint64_t seed,
                             const CohortOptions& options) {
  if (n_subjects == 0) throw ConfigError("cohort: need at least one subject");
  std::vector<SubjectProfile> profiles;
  for (std::size_t i = 0; i < n_subjects; ++i) {
    profiles.push_back(draw_profile(Rng::derive(seed, "profile/" + subject_name(i, n_subjects))));
  }
  return make_cohort_from_profiles(profiles, seed, options);
}

void write_cohort(const std::string& dir, const Cohort& cohort) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IngestionError("cannot create directory " + dir + ": " + ec.message());
  for (const auto& ts : cohort.series) {
    write_samples((fs::path(dir) / ts.record).string(), ts.samples);
  }
  write_manifest((fs::path(dir) / "manifest.txt").string(), cohort.manifest);
}

}  // namespace ppgad::data
