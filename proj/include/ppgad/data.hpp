#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ppgad/types.hpp"

namespace ppgad::data {

// ---------------------------------------------------------------------------
// Manifest
//
// Plain text, one directive per line, '#' starts a comment:
//
//   ppgad-manifest 1
//   band <low_hz> <high_hz>
//   record <subject_id> <activity> <fs_hz> <sample_count> <relative_path>
//
// The first non-comment line must be the version header. Tokens are
// whitespace-separated, so ids and paths cannot contain spaces. Paths are
// resolved against the directory holding the manifest.

struct ManifestRecord {
  std::string subject_id;
  Activity activity;
  double fs = 0.0;
  std::size_t sample_count = 0;
  std::string path;

  friend bool operator==(const ManifestRecord&, const ManifestRecord&) = default;
};

struct DatasetManifest {
  std::string root;  // directory the record paths are relative to
  double low_hz = 0.1;
  double high_hz = 10.0;
  std::vector<ManifestRecord> records;

  // Uniform fs, nonempty ids, valid band. Throws ConfigError.
  void validate() const;
  double fs() const;
};

std::string format_manifest(const DatasetManifest& manifest);
DatasetManifest parse_manifest(std::string_view text, const std::string& root);
DatasetManifest read_manifest(const std::string& path);
void write_manifest(const std::string& path, const DatasetManifest& manifest);

// Sample files: one decimal sample per line, written in shortest
// round-trip form.
std::vector<double> read_samples(const std::string& path);
void write_samples(const std::string& path, std::span<const double> samples);

struct LoadResult {
  std::vector<TimeSeries> series;
  std::vector<std::string> warnings;
};

// One TimeSeries per manifest record. Throws IngestionError naming the
// record for a missing file, a count mismatch, or a non-finite sample.
LoadResult load_dataset(const DatasetManifest& manifest);

// ---------------------------------------------------------------------------
// Synthetic PPG

struct MotionProfile {
  double wander_amp = 0.0;      // step-locked artifact amplitude (pulse units)
  double wander_hz = 0.0;       // step frequency
  double harmonic = 0.0;        // second-harmonic amplitude relative to the fundamental
  double phase_jitter = 0.0;    // random-walk phase drift, rad / sqrt(s)
  double am_depth = 0.0;        // amplitude-modulation depth, at half the step rate
  double burst_rate = 0.0;      // noise bursts per second
  double hr_increase_bpm = 0.0; // heart-rate rise while walking

  bool active() const {
    return wander_amp > 0.0 || am_depth > 0.0 || burst_rate > 0.0 || hr_increase_bpm > 0.0;
  }
};

struct SubjectProfile {
  double heart_rate_bpm = 70.0;
  double hr_variability = 0.03;  // relative std of beat periods
  double systolic_rise = 0.04;   // s, Gaussian sigma of the upstroke
  double systolic_width = 0.08;  // s, Gaussian sigma of the decay
  double diastolic_width = 0.12;
  double diastolic_phase = 0.33;  // delay after the systolic peak, in beat periods
  double diastolic_amplitude = 0.4;
  double noise_sigma = 0.03;
  double respiration_hz = 0.25;
  double respiration_baseline = 0.0;  // baseline swing at the breathing rate
  double respiration_am = 0.0;        // pulse amplitude modulation depth
  double artifact_rate = 0.0;         // brief artifacts per second, any activity
  MotionProfile motion;

  void validate() const;
};

// Beats are a skewed systolic Gaussian (steep upstroke, slower decay) plus
// a diastolic Gaussian, on jittered periods and modulated by breathing, with
// white noise and occasional brief artifacts on top. For Walking the heart
// rate rises and the motion profile adds step-locked artifacts with their
// harmonic, amplitude modulation and noise bursts. Beats, breathing and noise come
// from Rng::derive(seed, "beats"), artifacts and motion from
// Rng::derive(seed, "motion").
TimeSeries synth_subject(const SubjectProfile& profile, const Activity& activity,
                         double duration_s, double fs, std::uint64_t seed,
                         const std::string& subject_id = "synthetic");

// Profile drawn from the cohort's parameter ranges.
SubjectProfile draw_profile(std::uint64_t seed);

struct Cohort {
  std::vector<TimeSeries> series;
  DatasetManifest manifest;
};

struct CohortOptions {
  double duration_s = 120.0;
  double fs = 64.0;
  double low_hz = 0.1;
  double high_hz = 10.0;
};

// Sitting and Walking recordings for every subject (ids S01, S02, ...).
Cohort make_synthetic_cohort(std::size_t n_subjects, std::uint64_t seed,
                             const CohortOptions& options = {});

// Same, from explicit profiles.
Cohort make_cohort_from_profiles(const std::vector<SubjectProfile>& profiles, std::uint64_t seed,
                                 const CohortOptions& options = {});

// Writes every series as a sample file next to the manifest.
void write_cohort(const std::string& dir, const Cohort& cohort);

// ---------------------------------------------------------------------------
// Windows archive
//
//   line 1: "PPGAD-WINDOWS 1"
//   line 2: JSON header {format, version, target_len, fs, window_s,
//           overlap_s, band, count, provenance: [[subject, activity, record,
//           offset, index, start_time_s], ...]}
//   then count * target_len little-endian float64 samples, window-major.

struct WindowsArchive {
  std::size_t target_len = 512;
  double fs = 0.0;
  double window_s = 8.0;
  double overlap_s = 7.5;
  double low_hz = 0.0;
  double high_hz = 0.0;
  std::vector<Window> windows;
};

void save_windows(const std::string& path, const WindowsArchive& archive);
WindowsArchive load_windows(const std::string& path);

}  // namespace ppgad::data
