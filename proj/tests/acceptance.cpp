// Acceptance runner. With no arguments every criterion runs; otherwise only
// the listed ones. Prints one PASS/FAIL line per criterion and exits nonzero
// if any failed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "ppgad/cli.hpp"
#include "ppgad/data.hpp"
#include "ppgad/detectors.hpp"
#include "ppgad/dsp.hpp"
#include "ppgad/eval.hpp"
#include "ppgad/nn.hpp"

using namespace ppgad;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

// ---------------------------------------------------------------------------
// Shared end-to-end setup

constexpr std::uint64_t kCohortSeed = 7;
constexpr std::uint64_t kTrainSeed = 7;
constexpr std::size_t kSubjects = 5;
constexpr std::size_t kWindowLen = 256;

std::vector<Window> cohort_windows() {
  const auto cohort = data::make_synthetic_cohort(kSubjects, kCohortSeed);
  dsp::PipelineConfig pipe;
  pipe.target_len = kWindowLen;
  std::vector<Window> out;
  for (const auto& ts : cohort.series) {
    auto w = dsp::preprocess(ts, pipe);
    out.insert(out.end(), w.begin(), w.end());
  }
  return out;
}

// Two blocks, latent 16, 50 epochs; narrow and short-kerneled so one
// encoder trains in seconds.
nn::ArchitectureSpec tiny_encoder(std::size_t latent = 16) {
  nn::ArchitectureSpec s;
  s.input_len = kWindowLen;
  s.kernel = 8;
  s.channels = 4;
  s.blocks = 2;
  s.latent_dim = latent;
  return s;
}

nn::TrainConfig tiny_training() { return {1e-3, 0.0, 32, 50, kTrainSeed, 1}; }

eval::PretextSelection tiny_selection() {
  eval::PretextSelection sel;
  sel.stride = 8;
  sel.activities = {ActivityKind::Sitting};
  return sel;
}

eval::ScenarioConfig scenario(eval::Task task, eval::Mode mode, eval::RepresentationKind rep) {
  eval::ScenarioConfig c;
  c.task = task;
  c.mode = mode;
  c.representation = rep;
  c.detector.kind = detectors::DetectorKind::Mvn;
  c.seed = kCohortSeed;
  return c;
}

std::string summary(const eval::EvalResult& r) {
  return fmt("%.3f", r.mean) + " +- " + fmt("%.3f", r.std);
}

// ---------------------------------------------------------------------------
// Criteria

Verdict architecture() {
  const nn::ArchitectureSpec spec;
  const auto shapes = nn::layer_shapes(spec);
  // head conv, then a pool per block, then flatten
  const std::vector<std::size_t> pools = {224, 112, 56, 28, 14};
  bool shape_ok = !shapes.empty() && shapes.front().length == 449;
  std::vector<std::size_t> seen_pools;
  std::size_t flat = 0;
  for (const auto& s : shapes) {
    if (s.name.find("pool") != std::string::npos) seen_pools.push_back(s.length);
    if (s.name == "flatten") flat = s.length;
  }
  shape_ok = shape_ok && seen_pools == pools && flat == 448;
  const auto params = nn::init_params(spec, 0);
  const std::vector<double> x(512, 0.25);
  const bool traced_ok = nn::traced_shapes(params, x) == shapes;
  const std::size_t count = spec.parameter_count();
  return {count == 686756 && params.size() == 686756 && shape_ok && traced_ok,
          std::to_string(count) + " parameters, shapes " + (shape_ok ? "match" : "differ") +
              ", traced " + (traced_ok ? "match" : "differ")};
}

Verdict gradients() {
  double worst = 0.0;
  std::size_t checked = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto c = oracle::random_tiny_case(seed);
    const auto g = oracle::check_gradient(c.params, c.batch, c.labels);
    worst = std::max(worst, g.max_rel_error);
    checked += g.parameters;
  }
  return {worst < 1e-5, "100 nets, " + std::to_string(checked) + " parameters, max rel error " +
                            fmt("%.2e", worst)};
}

Verdict detector_oracles() {
  using detectors::Matrix;
  Rng rng(2);
  Matrix h(500, 1);
  for (Eigen::Index i = 0; i < h.rows(); ++i) h(i, 0) = rng.normal(1.0, 2.0);
  const auto m = detectors::fit_mvn(h);
  const double mu = m.mean(0);
  const double var = m.covariance(0, 0);
  double closed_err = 0.0;
  for (double x : {-3.0, -0.2, 0.0, 1.7, 6.0}) {
    const double want = 0.5 * std::log(2.0 * std::numbers::pi * var) + 0.5 * (x - mu) * (x - mu) / var;
    closed_err = std::max(closed_err, std::abs(detectors::score_mvn(m, std::vector<double>{x}) - want));
  }
  const double sd = std::sqrt(var);
  const double mass = oracle::simpson(
      [&](double x) { return std::exp(-detectors::score_mvn(m, std::vector<double>{x})); },
      mu - 14 * sd, mu + 14 * sd, 4000);

  bool half = true;
  for (std::size_t n : {2u, 3u, 10u, 256u}) {
    const double c = detectors::average_path_length(n);
    half = half && detectors::iforest_score_from_path(c, c) == 0.5;
  }
  Matrix cloud(300, 4);
  for (Eigen::Index i = 0; i < cloud.rows(); ++i)
    for (Eigen::Index j = 0; j < cloud.cols(); ++j) cloud(i, j) = rng.normal();
  const auto forest = detectors::fit_iforest(cloud, 5);
  bool open_unit = true;
  for (int t = 0; t < 200; ++t) {
    std::vector<double> p(4);
    for (double& v : p) v = rng.normal(0.0, 3.0);
    const double s = detectors::score_iforest(forest, p);
    open_unit = open_unit && s > 0.0 && s < 1.0;
  }

  Eigen::MatrixXd mixing(4, 4);
  for (Eigen::Index i = 0; i < 16; ++i) mixing(i) = rng.uniform(-1.0, 1.0);
  const Matrix mixed = cloud * mixing;
  const auto pca = detectors::fit_pca(mixed, 0.9);
  double pyth = 0.0;
  double inside = 0.0;
  for (int t = 0; t < 100; ++t) {
    Eigen::VectorXd z(pca.components.cols());
    for (Eigen::Index j = 0; j < z.size(); ++j) z(j) = rng.normal(0.0, 3.0);
    const Eigen::VectorXd in = pca.mean + pca.components * z;
    inside = std::max(inside, detectors::score_pca(pca, std::vector<double>(in.data(), in.data() + in.size())));
    std::vector<double> p(4);
    for (double& v : p) v = rng.normal(0.0, 4.0);
    const Eigen::VectorXd c = Eigen::Map<Eigen::VectorXd>(p.data(), 4) - pca.mean;
    const double want = c.squaredNorm() - (pca.components.transpose() * c).squaredNorm();
    pyth = std::max(pyth, std::abs(detectors::score_pca(pca, p) - want) / std::max(1.0, c.squaredNorm()));
  }
  const bool pass = closed_err < 1e-9 && std::abs(mass - 1.0) < 1e-6 && half && open_unit &&
                    pyth < 1e-9 && inside < 1e-9;
  return {pass, "mvn closed-form err " + fmt("%.1e", closed_err) + ", mass " + fmt("%.9f", mass) +
                    "; iforest s(c)=0.5 " + (half ? "yes" : "no") + ", scores in (0,1) " +
                    (open_unit ? "yes" : "no") + "; pca Pythagoras err " + fmt("%.1e", pyth) +
                    ", in-subspace " + fmt("%.1e", inside)};
}

Verdict auc_oracle() {
  Rng rng(12);
  int mismatches = 0;
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> normal(1 + rng.below(40));
    std::vector<double> anomalous(1 + rng.below(40));
    const std::size_t levels = 1 + rng.below(12);
    for (double& v : normal) v = static_cast<double>(rng.below(levels));
    for (double& v : anomalous) v = static_cast<double>(rng.below(levels)) + 0.5 * rng.below(2);
    if (detectors::auc(normal, anomalous) != oracle::brute_force_auc(normal, anomalous).value()) {
      ++mismatches;
    }
  }
  return {mismatches == 0, "1000 tied instances, " + std::to_string(mismatches) + " mismatches"};
}

Verdict dsp_oracles() {
  double design = 0.0;
  for (auto [lo, hi, fs] : {std::tuple{0.35, 20.0, 500.0}, std::tuple{0.1, 10.0, 64.0},
                            std::tuple{1.0, 40.0, 250.0}, std::tuple{0.5, 3.0, 30.0}}) {
    const auto f = dsp::design_butterworth_bandpass(lo, hi, fs);
    const auto [b, a] = oracle::butterworth_bandpass(lo, hi, fs);
    for (int i = 0; i < 5; ++i) {
      if (b[i] != 0.0) design = std::max(design, std::abs(f.b[i] - b[i]) / std::abs(b[i]));
      else design = std::max(design, std::abs(f.b[i]));
      design = std::max(design, std::abs(f.a[i] - a[i]) / std::abs(a[i]));
    }
  }
  const auto f = dsp::design_butterworth_bandpass(0.1, 10.0, 64.0);
  const double half_power = 1.0 / std::sqrt(2.0);
  const double edge = std::max(std::abs(std::abs(dsp::frequency_response(f, 0.1)) - half_power),
                               std::abs(std::abs(dsp::frequency_response(f, 10.0)) - half_power));

  std::vector<double> x(4000);
  for (std::size_t t = 0; t < x.size(); ++t)
    x[t] = std::cos(2.0 * std::numbers::pi * 5.0 * static_cast<double>(t) / 4000.0) +
           0.5 * std::sin(2.0 * std::numbers::pi * 40.0 * static_cast<double>(t) / 4000.0);
  const auto r = dsp::fourier_resample(x, 512);
  double resample = 0.0;
  for (std::size_t t = 0; t < r.size(); ++t) {
    const double want = std::cos(2.0 * std::numbers::pi * 5.0 * static_cast<double>(t) / 512.0) +
                        0.5 * std::sin(2.0 * std::numbers::pi * 40.0 * static_cast<double>(t) / 512.0);
    resample = std::max(resample, std::abs(r[t] - want));
  }
  return {design < 1e-8 && edge < 1e-3 && resample < 1e-6,
          "design rel err " + fmt("%.1e", design) + ", edge gain err " + fmt("%.1e", edge) +
              ", resample err " + fmt("%.1e", resample)};
}

Verdict movement_end_to_end() {
  const auto data = cohort_windows();
  using eval::Mode;
  using eval::RepresentationKind;
  using eval::Task;
  const eval::PretextEncoderRepresentation learned(tiny_encoder(), tiny_training(), tiny_selection());
  const eval::OriginalRepresentation original;
  const auto gen = eval::run_scenario(data, scenario(Task::MovementDetection, Mode::Generalized, RepresentationKind::Learned), learned);
  const auto per = eval::run_scenario(data, scenario(Task::MovementDetection, Mode::Personalized, RepresentationKind::Learned), learned);
  const auto ogen = eval::run_scenario(data, scenario(Task::MovementDetection, Mode::Generalized, RepresentationKind::Original), original);
  const auto oper = eval::run_scenario(data, scenario(Task::MovementDetection, Mode::Personalized, RepresentationKind::Original), original);
  const bool pass = gen.mean >= 0.85 && per.mean >= gen.mean && gen.mean - ogen.mean >= 0.05;
  return {pass, "learned generalized " + summary(gen) + ", personalized " + summary(per) +
                    "; original generalized " + summary(ogen) + ", personalized " + summary(oper)};
}

Verdict biometric_end_to_end() {
  const auto data = cohort_windows();
  using eval::Mode;
  using eval::RepresentationKind;
  using eval::Task;
  const eval::PretextEncoderRepresentation learned(tiny_encoder(), tiny_training(), tiny_selection());
  const auto gen = eval::run_scenario(data, scenario(Task::BiometricIdentification, Mode::Generalized, RepresentationKind::Learned), learned);
  const auto per = eval::run_scenario(data, scenario(Task::BiometricIdentification, Mode::Personalized, RepresentationKind::Learned), learned);
  return {per.mean > gen.mean,
          "learned personalized " + summary(per) + " vs generalized " + summary(gen)};
}

Verdict dimensionality_sweep() {
  const auto data = cohort_windows();
  eval::SweepConfig cfg;
  cfg.scenario = scenario(eval::Task::MovementDetection, eval::Mode::Generalized,
                          eval::RepresentationKind::Learned);
  cfg.spec = tiny_encoder();
  cfg.train = tiny_training();
  cfg.pretext = tiny_selection();
  const auto sweep = eval::sweep_dimensionality(data, {2, 8, 32, 64}, cfg);
  if (!sweep.all_succeeded()) return {false, "a sweep entry failed"};
  std::string series;
  double at2 = 0.0;
  double best_above = 0.0;
  for (const auto& [dim, entry] : sweep.by_dim) {
    const double m = std::get<eval::EvalResult>(entry).mean;
    series += (series.empty() ? "" : ", ") + std::to_string(dim) + ":" + fmt("%.3f", m);
    if (dim == 2) at2 = m;
    else best_above = std::max(best_above, m);
  }
  series += ", original:" + fmt("%.3f", std::get<eval::EvalResult>(sweep.baseline).mean);
  // Comparing the best dim with dim 2 holds whenever dim 2 is itself the best,
  // so the check asks a larger dim to reach the dim-2 level.
  return {best_above >= at2, "mean AUC by dim " + series + "; best above dim 2: " +
                                 fmt("%.3f", best_above) + " vs " + fmt("%.3f", at2)};
}

// --- determinism, through the command-line front end

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

int ppgad(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  if (code != cli::kOk) std::fprintf(stderr, "ppgad %s failed: %s", args.front().c_str(), err.str().c_str());
  return code;
}

Verdict determinism() {
  const fs::path root = fs::temp_directory_path() / "ppgad-acceptance-determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  auto p = [&](const std::string& leaf) { return (root / leaf).string(); };
  const std::vector<std::string> net = {"--target-len", "128", "--kernel", "8", "--channels", "4",
                                        "--blocks", "2", "--latent-dim", "8", "--epochs", "3",
                                        "--lr", "1e-3", "--batch", "32", "--pretext-stride", "8",
                                        "--seed", "3"};
  auto with = [](std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };
  std::vector<std::string> failures;
  auto same = [&](const std::string& a, const std::string& b) {
    if (!fs::exists(p(a)) || slurp(p(a)) != slurp(p(b))) failures.push_back(a + " vs " + b);
  };

  // Both runs use the same paths, since reports echo their inputs; the
  // first run's outputs are moved aside before the second starts.
  bool ran = true;
  for (const char* run : {"1", "2"}) {
    const std::string r(run);
    ran = ran && ppgad({"synth", "--n-subjects", "3", "--duration-s", "40", "--seed", "9", "--out", p("work/cohort")}) == 0;
    ran = ran && ppgad({"preprocess", "--manifest", p("work/cohort/manifest.txt"), "--target-len", "128",
                        "--out", p("work/windows.win")}) == 0;
    ran = ran && ppgad(with({"train", "--windows", p("work/windows.win"), "--out", p("work/model")}, net)) == 0;
    ran = ran && ppgad(with({"scenario", "--windows", p("work/windows.win"), "--train-encoder", "--trees", "30",
                             "--jobs", r, "--out", p("work/scenario")}, net)) == 0;
    ran = ran && ppgad(with({"sweep", "--windows", p("work/windows.win"), "--dims", "2,8", "--out", p("work/sweep")},
                            net)) == 0;
    if (!ran) break;
    fs::rename(root / "work", root / ("run" + r));
  }
  if (!ran) {
    fs::remove_all(root);
    return {false, "a pipeline stage failed to run"};
  }
  const std::vector<std::string> outputs = {
      "cohort/S01_Sitting.txt", "cohort/S03_Walking.txt", "cohort/manifest.txt", "windows.win",
      "model/checkpoint-r0.ckpt", "model/trace-r0.csv", "scenario/report.json", "scenario/report.txt",
      "sweep/sweep.json", "sweep/sweep.txt", "sweep/sweep.csv"};
  for (const auto& f : outputs) same("run1/" + f, "run2/" + f);
  fs::remove_all(root);
  std::string detail = "cohort, windows, checkpoint, trace, 24-row scenario report (1 vs 2 jobs) and sweep";
  if (failures.empty()) return {true, detail + " byte-identical"};
  for (const auto& f : failures) detail += "; differs: " + f;
  return {false, detail};
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* title;
    double budget_s;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> all = {
      {1, "architecture fidelity", 1.0, architecture},
      {2, "gradient correctness", 60.0, gradients},
      {3, "detector oracles", 10.0, detector_oracles},
      {4, "AUC oracle", 10.0, auc_oracle},
      {5, "DSP oracles", 10.0, dsp_oracles},
      {6, "synthetic movement detection", 600.0, movement_end_to_end},
      {7, "synthetic biometric identification", 600.0, biometric_end_to_end},
      {8, "dimensionality sweep", 1200.0, dimensionality_sweep},
      {9, "determinism", 600.0, determinism},
  };
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));

  bool all_pass = true;
  for (const auto& c : all) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.budget_s;
    const bool pass = v.pass && in_time;
    all_pass = all_pass && pass;
    std::printf("criterion %d (%s): %s  %s  [%.1f s of %.0f s%s]\n", c.id, c.title, pass ? "PASS" : "FAIL",
                v.detail.c_str(), secs, c.budget_s, in_time ? "" : ", over budget");
    std::fflush(stdout);
  }
  return all_pass ? 0 : 1;
}
