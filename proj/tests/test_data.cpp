#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "ppgad/data.hpp"
#include "ppgad/dsp.hpp"
#include "ppgad/error.hpp"

using namespace ppgad;
namespace fs = std::filesystem;

namespace {

fs::path golden(const std::string& name) { return fs::path(PPGAD_GOLDEN_DIR) / name; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path temp_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("ppgad-test-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

// Magnitude of the discrete Fourier transform at `hz`, computed directly.
double dft_magnitude(const std::vector<double>& x, double fs, double hz) {
  std::complex<double> acc = 0.0;
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  for (std::size_t n = 0; n < x.size(); ++n) {
    const double phase = -2.0 * std::numbers::pi * hz * static_cast<double>(n) / fs;
    acc += (x[n] - mean) * std::polar(1.0, phase);
  }
  return std::abs(acc);
}

double variance(const std::vector<double>& x) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double s = 0.0;
  for (double v : x) s += (v - mean) * (v - mean);
  return s / static_cast<double>(x.size());
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("manifest golden file parses and formats back byte-identically") {
  const std::string text = slurp(golden("manifest.txt"));
  const auto m = data::parse_manifest(text, "/data");
  CHECK(m.root == "/data");
  CHECK(m.low_hz == 0.1);
  CHECK(m.high_hz == 10.0);
  REQUIRE(m.records.size() == 4);
  CHECK(m.records[0].subject_id == "S01");
  CHECK(m.records[1].activity == Activity(ActivityKind::Walking));
  CHECK(m.records[3].activity == Activity::other("running"));
  CHECK(m.records[2].sample_count == 1280);
  CHECK(m.fs() == 64.0);
  CHECK_NOTHROW(m.validate());
  CHECK(data::format_manifest(m) == text);
}

TEST_CASE("manifest comments, blank lines and errors") {
  const auto m = data::parse_manifest(
      "# cohort\n\nppgad-manifest 1  # header\nband 0.35 20\nrecord A sitting 500 10 a.txt\n", ".");
  CHECK(m.records.size() == 1);
  CHECK(m.high_hz == 20.0);

  auto fails_at = [](const std::string& text, const std::string& needle) {
    try {
      data::parse_manifest(text, ".");
    } catch (const IngestionError& e) {
      return std::string(e.what()).find(needle) != std::string::npos;
    }
    return false;
  };
  CHECK(fails_at("band 0.1 10\n", "line 1"));
  CHECK(fails_at("ppgad-manifest 2\nband 0.1 10\n", "version"));
  CHECK(fails_at("ppgad-manifest 1\nrecord A sitting 64 10 a.txt\n", "band"));
  CHECK(fails_at("ppgad-manifest 1\nband 0.1 10\nrecord A sitting x 10 a.txt\n", "line 3"));
  CHECK(fails_at("ppgad-manifest 1\nband 0.1 10\nrecord A sitting 64 -1 a.txt\n", "count"));
  CHECK(fails_at("ppgad-manifest 1\nband 0.1 10\nfoo\n", "unknown directive"));

  data::DatasetManifest mixed;
  mixed.records = {{"A", ActivityKind::Sitting, 64, 1, "a"}, {"B", ActivityKind::Sitting, 128, 1, "b"}};
  CHECK_THROWS_AS(mixed.validate(), ConfigError);
  data::DatasetManifest bad_band;
  bad_band.low_hz = 5;
  bad_band.high_hz = 40;
  bad_band.records = {{"A", ActivityKind::Sitting, 64, 1, "a"}};
  CHECK_THROWS_AS(bad_band.validate(), ConfigError);
}

TEST_CASE("sample files: golden formatting and exact round-trip") {
  const auto dir = temp_dir("samples");
  const std::vector<double> values{0.1, -2.5e-07, 3.0, 1e300, -0.0, 0.1 + 0.2, 123456.789};
  data::write_samples((dir / "s.txt").string(), values);
  CHECK(slurp(dir / "s.txt") == slurp(golden("samples.txt")));
  const auto back = data::read_samples(golden("samples.txt").string());
  REQUIRE(back.size() == values.size());
  for (std::size_t i = 0; i < values.size(); ++i) CHECK(back[i] == values[i]);
  CHECK(std::signbit(back[4]));
}

TEST_CASE("load_dataset: counts and ingestion errors naming the record") {
  const auto dir = temp_dir("load");
  const std::vector<double> x{1.0, 2.0, 3.0};
  for (const char* name : {"a1.txt", "a2.txt", "b1.txt", "b2.txt"}) {
    data::write_samples((dir / name).string(), x);
  }
  data::DatasetManifest m;
  m.root = dir.string();
  m.low_hz = 0.1;
  m.high_hz = 10.0;
  m.records = {{"A", ActivityKind::Sitting, 64, 3, "a1.txt"},
               {"A", ActivityKind::Walking, 64, 3, "a2.txt"},
               {"B", ActivityKind::Sitting, 64, 3, "b1.txt"},
               {"B", ActivityKind::Walking, 64, 3, "b2.txt"}};
  const auto loaded = data::load_dataset(m);
  REQUIRE(loaded.series.size() == 4);
  CHECK(loaded.series[3].subject_id == "B");
  CHECK(loaded.series[3].activity == Activity(ActivityKind::Walking));
  CHECK(loaded.series[3].samples == x);
  CHECK(loaded.series[3].record == "b2.txt");

  auto message_of = [](const data::DatasetManifest& man) -> std::string {
    try {
      data::load_dataset(man);
    } catch (const IngestionError& e) {
      return e.what();
    }
    return "";
  };
  auto missing = m;
  missing.records[1].path = "nope.txt";
  CHECK(message_of(missing).find("A/Walking") != std::string::npos);
  auto count = m;
  count.records[2].sample_count = 4;
  CHECK(message_of(count).find("B/Sitting") != std::string::npos);

  write_text(dir / "nan.txt", "1\n2\nnan\n4\n");
  auto nan = m;
  nan.records[0].path = "nan.txt";
  nan.records[0].sample_count = 4;
  const auto msg = message_of(nan);
  CHECK(msg.find("nan.txt") != std::string::npos);
  CHECK(msg.find("index 2") != std::string::npos);

  write_text(dir / "junk.txt", "1\nabc\n");
  auto junk = m;
  junk.records[0].path = "junk.txt";
  CHECK(message_of(junk).find("line 2") != std::string::npos);

  data::DatasetManifest empty;
  const auto none = data::load_dataset(empty);
  CHECK(none.series.empty());
  CHECK(none.warnings.size() == 1);
}

TEST_CASE("synth_subject: spectral peak at the heart rate") {
  data::SubjectProfile p;
  p.heart_rate_bpm = 60.0;
  const auto ts = data::synth_subject(p, ActivityKind::Sitting, 10.0, 64.0, 1);
  CHECK(ts.samples.size() == 640);
  CHECK(ts.fs == 64.0);
  double best_hz = 0.0;
  double best = -1.0;
  for (double hz = 0.3; hz <= 8.0; hz += 0.01) {
    const double mag = dft_magnitude(ts.samples, 64.0, hz);
    if (mag > best) {
      best = mag;
      best_hz = hz;
    }
  }
  CHECK(std::abs(best_hz - 1.0) <= 0.1);
}

TEST_CASE("synth_subject: walking adds energy; output is deterministic") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto p = data::draw_profile(seed);
    const auto sit = data::synth_subject(p, ActivityKind::Sitting, 60.0, 64.0, seed, "X");
    const auto walk = data::synth_subject(p, ActivityKind::Walking, 60.0, 64.0, seed, "X");
    CHECK(variance(walk.samples) > variance(sit.samples));
    CHECK(data::synth_subject(p, ActivityKind::Sitting, 60.0, 64.0, seed, "X").samples ==
          sit.samples);
    CHECK(sit.subject_id == "X");
    CHECK(walk.activity == Activity(ActivityKind::Walking));
  }
  data::SubjectProfile p;
  CHECK_THROWS_AS(data::synth_subject(p, ActivityKind::Sitting, 0.1, 64.0, 1), ConfigError);
  p.heart_rate_bpm = 250;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("synthetic cohort: counts, ids, seeding, windows per record") {
  const auto c = data::make_synthetic_cohort(5, 3);
  REQUIRE(c.series.size() == 10);
  std::set<std::string> ids;
  for (const auto& ts : c.series) ids.insert(ts.subject_id);
  CHECK(ids == std::set<std::string>{"S01", "S02", "S03", "S04", "S05"});
  CHECK(c.manifest.records.size() == 10);
  CHECK(c.manifest.records[0].sample_count == 120 * 64);

  const auto p3 = data::draw_profile(3);
  const auto p4 = data::draw_profile(4);
  CHECK(p3.heart_rate_bpm != p4.heart_rate_bpm);
  CHECK(p3.systolic_width != p4.systolic_width);
  const auto again = data::make_synthetic_cohort(5, 3);
  CHECK(again.series[7].samples == c.series[7].samples);
  CHECK(data::make_synthetic_cohort(5, 4).series[0].samples != c.series[0].samples);
  CHECK_THROWS_AS(data::make_synthetic_cohort(0, 1), ConfigError);

  const dsp::PipelineConfig pipe;
  for (const auto& ts : c.series) {
    const auto windows = dsp::preprocess(ts, pipe);
    CHECK(windows.size() == 225);
    for (const auto& w : windows) {
      CHECK(w.values.size() == 512);
      CHECK(w.source_record == ts.record);
      CHECK(w.offset == 32 * w.index);
    }
  }
}

TEST_CASE("write_cohort writes samples and a readable manifest") {
  const auto dir = temp_dir("cohort");
  data::CohortOptions opt;
  opt.duration_s = 12.0;
  const auto c = data::make_synthetic_cohort(2, 9, opt);
  data::write_cohort(dir.string(), c);
  const auto m = data::read_manifest((dir / "manifest.txt").string());
  CHECK(m.root == dir.string());
  const auto loaded = data::load_dataset(m);
  REQUIRE(loaded.series.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(loaded.series[i].samples == c.series[i].samples);
}

TEST_CASE("windows archive round-trips provenance and samples exactly") {
  const auto dir = temp_dir("archive");
  data::WindowsArchive a;
  a.target_len = 4;
  a.fs = 64.0;
  a.low_hz = 0.1;
  a.high_hz = 10.0;
  for (int i = 0; i < 3; ++i) {
    Window w;
    w.values = {0.1 * i, -1.0 / 3.0, 1e-300, static_cast<double>(i)};
    w.source_subject = "S0" + std::to_string(i);
    w.source_activity = i == 2 ? Activity::other("cycling") : Activity(ActivityKind::Walking);
    w.source_record = "r" + std::to_string(i) + ".txt";
    w.offset = 32 * i;
    w.index = i;
    w.start_time_s = 0.5 * i;
    a.windows.push_back(w);
  }
  const auto path = (dir / "w.bin").string();
  data::save_windows(path, a);
  const auto b = data::load_windows(path);
  CHECK(b.target_len == 4);
  CHECK(b.fs == 64.0);
  CHECK(b.window_s == 8.0);
  REQUIRE(b.windows.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(b.windows[i].values == a.windows[i].values);
    CHECK(b.windows[i].source_subject == a.windows[i].source_subject);
    CHECK(b.windows[i].source_activity == a.windows[i].source_activity);
    CHECK(b.windows[i].source_record == a.windows[i].source_record);
    CHECK(b.windows[i].offset == a.windows[i].offset);
    CHECK(b.windows[i].index == a.windows[i].index);
    CHECK(b.windows[i].start_time_s == a.windows[i].start_time_s);
  }
  data::save_windows((dir / "w2.bin").string(), b);
  CHECK(slurp(dir / "w2.bin") == slurp(path));

  a.windows[1].values.pop_back();
  CHECK_THROWS_AS(data::save_windows(path, a), ContractViolation);
  write_text(dir / "bad.bin", "PPGAD-WINDOWS 1\n{\"target_len\": 4}\n");
  CHECK_THROWS_AS(data::load_windows((dir / "bad.bin").string()), IngestionError);
  write_text(dir / "trunc.bin", slurp(path).substr(0, slurp(path).size() - 5));
  CHECK_THROWS_AS(data::load_windows((dir / "trunc.bin").string()), IngestionError);
}

}  // TEST_SUITE
