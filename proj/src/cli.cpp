#include "ppgad/cli.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "ppgad/augment.hpp"
#include "ppgad/data.hpp"
#include "ppgad/detectors.hpp"
#include "ppgad/dsp.hpp"
#include "ppgad/error.hpp"
#include "ppgad/eval.hpp"
#include "ppgad/nn.hpp"
#include "ppgad/report.hpp"
#include "ppgad/version.hpp"

namespace ppgad::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Options {
  // inputs and outputs
  std::string manifest;
  std::string windows;
  std::vector<std::string> checkpoints;
  std::string model;
  std::string out;

  // preprocessing
  std::string band;
  double window_s = 8.0;
  double overlap_s = 7.5;
  std::size_t target_len = 512;

  // architecture and training
  std::size_t latent_dim = 64;
  std::size_t blocks = 5;
  std::size_t channels = 32;
  std::size_t kernel = 64;
  double lr = 1e-4;
  double decay = 1e-3;
  std::size_t batch = 64;
  std::size_t epochs = 400;
  std::size_t repeats = 1;
  std::uint64_t seed = 0;
  std::size_t pretext_stride = 1;
  std::vector<std::string> pretext_activities;

  // detectors and scenarios
  std::string detector;
  std::size_t n_trees = 100;
  std::size_t subsample = 256;
  double variance = 0.99;
  std::string task;
  std::string mode;
  std::string representation;
  bool train_encoder = false;
  std::size_t folds = 5;
  std::size_t jobs = 1;
  std::string dims;
  std::vector<std::string> subjects;
  std::string activity = "sitting";

  // synthetic cohorts
  std::size_t n_subjects = 5;
  double duration_s = 120.0;
  double fs = 64.0;
};

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_number(const std::string& text, const std::string& what) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ConfigError(what + ": '" + text + "' is not a number");
  }
  return v;
}

std::pair<double, double> parse_band(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ConfigError("--band expects LOW:HIGH, got '" + text + "'");
  return {parse_number(text.substr(0, colon), "--band"),
          parse_number(text.substr(colon + 1), "--band")};
}

std::vector<std::size_t> parse_dims(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream in(text);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    if (tok.empty()) continue;
    std::size_t v = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
      throw ConfigError("--dims: '" + tok + "' is not a positive integer");
    }
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("--dims needs at least one dimension");
  return out;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kConfig;
  if (dynamic_cast<const IngestionError*>(&e)) return kIngestion;
  if (dynamic_cast<const DegenerateInputError*>(&e) || dynamic_cast<const FitError*>(&e) ||
      dynamic_cast<const EvaluationError*>(&e) || dynamic_cast<const ContractViolation*>(&e)) {
    return kComputation;
  }
  return kUnexpected;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IngestionError("cannot write " + path.string());
  f << text;
  if (!f) throw IngestionError("failed writing " + path.string());
}

void ensure_parent(const fs::path& path) {
  if (!path.has_parent_path()) return;
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  if (ec) throw IngestionError("cannot create " + path.parent_path().string() + ": " + ec.message());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IngestionError("cannot create " + dir.string() + ": " + ec.message());
}

// ---------------------------------------------------------------------------
// Configuration assembly; everything here runs before any file is written.

dsp::PipelineConfig pipeline_config(const Options& o) {
  dsp::PipelineConfig pc;
  if (!o.band.empty()) std::tie(pc.low_hz, pc.high_hz) = parse_band(o.band);
  pc.window_s = o.window_s;
  pc.overlap_s = o.overlap_s;
  pc.target_len = o.target_len;
  pc.validate();
  return pc;
}

nn::ArchitectureSpec architecture(const Options& o, std::size_t input_len) {
  nn::ArchitectureSpec spec;
  spec.input_len = input_len;
  spec.latent_dim = o.latent_dim;
  spec.blocks = o.blocks;
  spec.channels = o.channels;
  spec.kernel = o.kernel;
  spec.validate();
  return spec;
}

nn::TrainConfig train_config(const Options& o) {
  nn::TrainConfig tc;
  tc.learning_rate = o.lr;
  tc.decay = o.decay;
  tc.batch_size = o.batch;
  tc.epochs = o.epochs;
  tc.seed = o.seed;
  tc.repeats = o.repeats;
  tc.validate();
  return tc;
}

// Empty list or "all" keeps every activity; "normal" stands for `normal`.
eval::PretextSelection pretext_selection(const Options& o, const Activity& normal,
                                         bool default_to_normal) {
  eval::PretextSelection sel;
  if (o.pretext_stride < 1) throw ConfigError("--pretext-stride must be at least 1");
  sel.stride = o.pretext_stride;
  std::vector<std::string> names = o.pretext_activities;
  if (names.empty() && default_to_normal) names.push_back("normal");
  for (const auto& name : names) {
    if (name == "all") return {sel.stride, {}};
    sel.activities.push_back(name == "normal" ? normal : Activity::parse(name));
  }
  return sel;
}

detectors::DetectorSettings detector_settings(const Options& o, detectors::DetectorKind kind) {
  detectors::DetectorSettings s;
  s.kind = kind;
  s.n_trees = o.n_trees;
  s.subsample = o.subsample;
  s.variance_threshold = o.variance;
  s.seed = o.seed;
  return s;
}

json pipeline_json(const dsp::PipelineConfig& pc) {
  return {{"band", {pc.low_hz, pc.high_hz}},
          {"window_s", pc.window_s},
          {"overlap_s", pc.overlap_s},
          {"target_len", pc.target_len}};
}

json training_json(const nn::ArchitectureSpec& spec, const nn::TrainConfig& tc,
                   const eval::PretextSelection& sel) {
  std::vector<std::string> acts;
  for (const auto& a : sel.activities) acts.push_back(a.name());
  return {{"architecture",
           {{"input_len", spec.input_len},
            {"kernel", spec.kernel},
            {"channels", spec.channels},
            {"blocks", spec.blocks},
            {"latent_dim", spec.latent_dim}}},
          {"learning_rate", tc.learning_rate},
          {"decay", tc.decay},
          {"batch_size", tc.batch_size},
          {"epochs", tc.epochs},
          {"seed", tc.seed},
          {"pretext_stride", sel.stride},
          {"pretext_activities", acts}};
}

// ---------------------------------------------------------------------------
// Inputs

struct Input {
  data::WindowsArchive archive;
  json echo;
};

// Reads the manifest, applies the band override and checks it against the
// sampling rate. No data files are touched.
data::DatasetManifest checked_manifest(const Options& o, dsp::PipelineConfig& pc) {
  data::DatasetManifest m = data::read_manifest(o.manifest);
  if (o.band.empty()) {
    pc.low_hz = m.low_hz;
    pc.high_hz = m.high_hz;
  } else {
    m.low_hz = pc.low_hz;
    m.high_hz = pc.high_hz;
  }
  pc.validate();
  m.validate();
  return m;
}

data::WindowsArchive preprocess_manifest(const data::DatasetManifest& m,
                                         const dsp::PipelineConfig& pc, std::ostream& err) {
  const auto loaded = data::load_dataset(m);
  for (const auto& w : loaded.warnings) err << "warning: " << w << '\n';
  data::WindowsArchive a;
  a.target_len = pc.target_len;
  a.fs = m.fs();
  a.window_s = pc.window_s;
  a.overlap_s = pc.overlap_s;
  a.low_hz = pc.low_hz;
  a.high_hz = pc.high_hz;
  for (const auto& ts : loaded.series) {
    auto windows = dsp::preprocess(ts, pc);
    if (windows.empty()) {
      err << "warning: record " << ts.subject_id << '/' << ts.activity.name()
          << " is shorter than one window; skipped\n";
    }
    for (auto& w : windows) a.windows.push_back(std::move(w));
  }
  return a;
}

// Windows from --windows, or preprocessed in memory from --manifest.
Input load_input(const Options& o, std::ostream& err) {
  if (o.windows.empty() == o.manifest.empty()) {
    throw ConfigError("give exactly one of --windows or --manifest");
  }
  Input in;
  if (!o.windows.empty()) {
    in.archive = data::load_windows(o.windows);
    in.echo = {{"windows", o.windows}};
  } else {
    dsp::PipelineConfig pc = pipeline_config(o);
    const auto m = checked_manifest(o, pc);
    in.archive = preprocess_manifest(m, pc, err);
    in.echo = {{"manifest", o.manifest}, {"preprocessing", pipeline_json(pc)}};
  }
  if (in.archive.windows.empty()) throw IngestionError("input holds no windows");
  return in;
}

std::vector<nn::Checkpoint> load_checkpoints(const Options& o, std::size_t input_len) {
  std::vector<nn::Checkpoint> out;
  for (const auto& path : o.checkpoints) {
    out.push_back(nn::load_checkpoint(path));
    if (out.back().params.spec().input_len != input_len) {
      throw ConfigError("checkpoint " + path + " expects windows of " +
                        std::to_string(out.back().params.spec().input_len) +
                        " samples but the input has " + std::to_string(input_len));
    }
  }
  return out;
}

std::string window_key(const Window& w) {
  return w.source_subject + ',' + w.source_activity.name() + ',' + w.source_record + ',' +
         std::to_string(w.index);
}

// ---------------------------------------------------------------------------
// Commands

int cmd_synth(const Options& o, std::ostream& out) {
  if (o.n_subjects == 0) throw ConfigError("--n-subjects must be at least 1");
  if (o.out.empty()) throw ConfigError("--out is required");
  if (!(o.duration_s > 0.0) || !(o.fs > 0.0)) {
    throw ConfigError("--duration-s and --fs must be positive");
  }
  data::CohortOptions co;
  co.duration_s = o.duration_s;
  co.fs = o.fs;
  if (!o.band.empty()) std::tie(co.low_hz, co.high_hz) = parse_band(o.band);
  dsp::check_band(co.low_hz, co.high_hz, co.fs);

  const auto cohort = data::make_synthetic_cohort(o.n_subjects, o.seed, co);
  data::write_cohort(o.out, cohort);
  out << "wrote " << cohort.series.size() << " recordings and manifest.txt to " << o.out << '\n';
  return kOk;
}

int cmd_preprocess(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.manifest.empty()) throw ConfigError("--manifest is required");
  if (o.out.empty()) throw ConfigError("--out is required");
  dsp::PipelineConfig pc = pipeline_config(o);
  const auto m = checked_manifest(o, pc);
  const auto archive = preprocess_manifest(m, pc, err);

  ensure_parent(o.out);
  data::save_windows(o.out, archive);
  std::map<std::pair<std::string, std::string>, std::size_t> counts;
  for (const auto& w : archive.windows) ++counts[{w.source_subject, w.source_activity.name()}];
  for (const auto& [key, n] : counts) {
    out << key.first << ' ' << key.second << ' ' << n << " windows\n";
  }
  out << "total " << archive.windows.size() << " windows -> " << o.out << '\n';
  return kOk;
}

int cmd_train(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.out.empty()) throw ConfigError("--out is required");
  const nn::TrainConfig tc = train_config(o);
  architecture(o, o.target_len);  // flag-level check before reading anything
  const Input in = load_input(o, err);
  const auto spec = architecture(o, in.archive.target_len);
  const auto sel = pretext_selection(o, Activity(ActivityKind::Sitting), false);

  std::vector<Window> chosen;
  for (const auto& w : in.archive.windows) {
    if (w.index % sel.stride != 0) continue;
    if (!sel.activities.empty() && std::find(sel.activities.begin(), sel.activities.end(),
                                             w.source_activity) == sel.activities.end()) {
      continue;
    }
    chosen.push_back(w);
  }
  if (chosen.empty()) throw ConfigError("no windows match the pretext selection");
  const auto dataset = augment::build_pretext_dataset(chosen);

  ensure_dir(o.out);
  for (std::size_t r = 0; r < tc.repeats; ++r) {
    nn::TrainConfig run = tc;
    run.seed = tc.seed + r;
    std::ostringstream trace;
    trace << "epoch,loss,auc\n";
    auto result = nn::train_pretext(dataset, spec, run, [&trace](const nn::EpochStats& s) {
      trace << s.epoch << ',' << shortest(s.loss) << ',' << shortest(s.auc) << '\n';
    });
    const fs::path ckpt = fs::path(o.out) / ("checkpoint-r" + std::to_string(r) + ".ckpt");
    nn::save_checkpoint(ckpt.string(), {std::move(result.params), run, run.seed, kVersion});
    write_file(fs::path(o.out) / ("trace-r" + std::to_string(r) + ".csv"), trace.str());
    out << "repeat " << r << " (seed " << run.seed << "): ";
    if (result.trace.empty()) {
      out << "no epochs";
    } else {
      out << "loss " << result.trace.back().loss
          << ", pretext AUC " << result.trace.back().auc;
    }
    out << " -> " << ckpt.string() << '\n';
  }
  return kOk;
}

std::unique_ptr<eval::Representation> fixed_representation(const Options& o,
                                                           std::size_t input_len) {
  const bool original =
      !o.representation.empty() &&
      eval::parse_representation(o.representation) == eval::RepresentationKind::Original;
  if (original) return std::make_unique<eval::OriginalRepresentation>();
  if (o.checkpoints.size() != 1) {
    throw ConfigError("the learned representation needs exactly one --checkpoint");
  }
  auto ck = load_checkpoints(o, input_len);
  return std::make_unique<eval::EncoderRepresentation>(std::move(ck.front().params),
                                                       o.checkpoints.front());
}

int cmd_extract(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.out.empty()) throw ConfigError("--out is required");
  if (!o.representation.empty()) eval::parse_representation(o.representation);
  const Input in = load_input(o, err);
  const auto rep = fixed_representation(o, in.archive.target_len);
  const auto features = rep->features(in.archive.windows, "");

  std::ostringstream csv;
  csv << "subject,activity,record,index";
  for (Eigen::Index j = 0; j < features.cols(); ++j) csv << ",h" << j;
  csv << '\n';
  for (std::size_t i = 0; i < in.archive.windows.size(); ++i) {
    csv << window_key(in.archive.windows[i]);
    for (Eigen::Index j = 0; j < features.cols(); ++j) {
      csv << ',' << shortest(features(static_cast<Eigen::Index>(i), j));
    }
    csv << '\n';
  }
  ensure_parent(o.out);
  write_file(o.out, csv.str());
  out << "wrote " << features.rows() << " x " << features.cols() << " features -> " << o.out
      << '\n';
  return kOk;
}

int cmd_fit(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.out.empty()) throw ConfigError("--out is required");
  const auto kind = detectors::parse_detector_kind(o.detector.empty() ? "mvn" : o.detector);
  const Activity activity = Activity::parse(o.activity);
  if (!o.representation.empty()) eval::parse_representation(o.representation);
  const Input in = load_input(o, err);
  const auto rep = fixed_representation(o, in.archive.target_len);

  std::vector<Window> chosen;
  for (const auto& w : in.archive.windows) {
    const bool subject_ok = o.subjects.empty() || std::find(o.subjects.begin(), o.subjects.end(),
                                                            w.source_subject) != o.subjects.end();
    if (subject_ok && w.source_activity == activity) chosen.push_back(w);
  }
  if (chosen.empty()) throw ConfigError("no windows match the requested subjects and activity");
  const auto model = detectors::fit_detector(detector_settings(o, kind), rep->features(chosen, ""));
  ensure_parent(o.out);
  write_file(o.out, detectors::serialize_detector(model, o.seed));
  out << "fitted " << detectors::to_string(kind) << " on " << chosen.size() << " windows -> "
      << o.out << '\n';
  return kOk;
}

int cmd_score(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.out.empty()) throw ConfigError("--out is required");
  if (o.model.empty()) throw ConfigError("--model is required");
  if (!o.representation.empty()) eval::parse_representation(o.representation);
  std::ifstream mf(o.model);
  if (!mf) throw IngestionError("cannot open detector model: " + o.model);
  std::stringstream text;
  text << mf.rdbuf();
  const auto stored = detectors::deserialize_detector(text.str());
  const Input in = load_input(o, err);
  const auto rep = fixed_representation(o, in.archive.target_len);
  const auto features = rep->features(in.archive.windows, "");
  if (static_cast<std::size_t>(features.cols()) != detectors::input_dim(stored.model)) {
    throw ConfigError("detector expects " + std::to_string(detectors::input_dim(stored.model)) +
                      "-dimensional features, the representation gives " +
                      std::to_string(features.cols()));
  }
  const auto scores = detectors::score_rows(stored.model, features);
  std::ostringstream csv;
  csv << "subject,activity,record,index,score\n";
  for (std::size_t i = 0; i < scores.size(); ++i) {
    csv << window_key(in.archive.windows[i]) << ',' << shortest(scores[i]) << '\n';
  }
  ensure_parent(o.out);
  write_file(o.out, csv.str());
  out << "scored " << scores.size() << " windows -> " << o.out << '\n';
  return kOk;
}

template <typename T, typename Parse>
std::vector<T> choices(const std::string& flag, std::vector<T> all, Parse parse) {
  if (flag.empty()) return all;
  return {parse(flag)};
}

int cmd_scenario(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.out.empty()) throw ConfigError("--out is required");
  using eval::Mode;
  using eval::RepresentationKind;
  using eval::Task;
  const auto tasks = choices<Task>(o.task, {Task::MovementDetection, Task::BiometricIdentification},
                                   eval::parse_task);
  const auto modes =
      choices<Mode>(o.mode, {Mode::Generalized, Mode::Personalized}, eval::parse_mode);
  const auto kinds = choices<detectors::DetectorKind>(
      o.detector,
      {detectors::DetectorKind::Mvn, detectors::DetectorKind::IForest, detectors::DetectorKind::Pca},
      detectors::parse_detector_kind);
  const auto reps = choices<RepresentationKind>(
      o.representation, {RepresentationKind::Learned, RepresentationKind::Original},
      eval::parse_representation);
  const bool wants_learned =
      std::find(reps.begin(), reps.end(), RepresentationKind::Learned) != reps.end();
  if (wants_learned && o.checkpoints.empty() && !o.train_encoder) {
    throw ConfigError("the learned representation needs --checkpoint or --train-encoder");
  }
  if (!o.checkpoints.empty() && o.train_encoder) {
    throw ConfigError("--checkpoint and --train-encoder are mutually exclusive");
  }
  if (o.jobs < 1) throw ConfigError("--jobs must be at least 1");
  std::optional<nn::TrainConfig> tc;
  if (o.train_encoder) {
    tc = train_config(o);
    architecture(o, o.target_len);
  }
  eval::ScenarioConfig base;
  base.folds = o.folds;
  base.seed = o.seed;
  base.jobs = o.jobs;
  base.validate();
  const auto sel = pretext_selection(o, base.normal_activity, true);

  const Input in = load_input(o, err);
  const auto& windows = in.archive.windows;

  // Learned representations: one per checkpoint, or a freshly trained
  // encoder per held-out subject.
  std::vector<std::unique_ptr<eval::Representation>> learned;
  json learned_echo;
  if (wants_learned) {
    if (o.train_encoder) {
      const auto spec = architecture(o, in.archive.target_len);
      for (std::size_t r = 0; r < tc->repeats; ++r) {
        nn::TrainConfig run = *tc;
        run.seed = tc->seed + r;
        learned.push_back(std::make_unique<eval::PretextEncoderRepresentation>(spec, run, sel));
      }
      learned_echo = training_json(spec, *tc, sel);
      learned_echo["repeats"] = tc->repeats;
    } else {
      auto cks = load_checkpoints(o, in.archive.target_len);
      for (std::size_t i = 0; i < cks.size(); ++i) {
        learned.push_back(std::make_unique<eval::EncoderRepresentation>(
            std::move(cks[i].params), o.checkpoints[i]));
      }
      learned_echo = {{"checkpoints", o.checkpoints}};
    }
  }
  const eval::OriginalRepresentation original;

  std::string ref;
  for (const auto& c : o.checkpoints) ref += (ref.empty() ? "" : ";") + c;
  std::vector<eval::EvalResult> results;
  for (Task task : tasks) {
    for (Mode mode : modes) {
      for (auto kind : kinds) {
        for (RepresentationKind rk : reps) {
          eval::ScenarioConfig sc = base;
          sc.task = task;
          sc.mode = mode;
          sc.detector = detector_settings(o, kind);
          sc.representation = rk;
          if (rk == RepresentationKind::Original) {
            results.push_back(eval::run_scenario(windows, sc, original));
            continue;
          }
          sc.representation_ref = o.train_encoder ? "trained-per-unit" : ref;
          std::vector<eval::EvalResult> runs;
          for (const auto& rep : learned) runs.push_back(eval::run_scenario(windows, sc, *rep));
          results.push_back(runs.size() == 1 ? runs.front() : eval::average_repeats(runs));
        }
      }
    }
  }

  json run = {{"command", "scenario"},
              {"input", in.echo},
              {"folds", o.folds},
              {"seed", o.seed},
              {"detector_params",
               {{"n_trees", o.n_trees}, {"subsample", o.subsample}, {"variance", o.variance}}}};
  if (wants_learned) run["learned"] = learned_echo;
  report::write_scenario_report(o.out, results, run);
  out << report::format_table(results);
  return kOk;
}

int cmd_sweep(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.out.empty()) throw ConfigError("--out is required");
  const auto dims = parse_dims(o.dims);
  for (std::size_t d : dims) {
    if (d == 0) throw ConfigError("--dims entries must be at least 1");
  }
  if (o.jobs < 1) throw ConfigError("--jobs must be at least 1");
  eval::SweepConfig cfg;
  cfg.scenario.task = eval::parse_task(o.task.empty() ? "movement" : o.task);
  cfg.scenario.mode = eval::parse_mode(o.mode.empty() ? "generalized" : o.mode);
  cfg.scenario.detector =
      detector_settings(o, detectors::parse_detector_kind(o.detector.empty() ? "mvn" : o.detector));
  cfg.scenario.folds = o.folds;
  cfg.scenario.seed = o.seed;
  cfg.scenario.jobs = o.jobs;
  cfg.scenario.validate();
  cfg.train = train_config(o);
  cfg.pretext = pretext_selection(o, cfg.scenario.normal_activity, true);
  architecture(o, o.target_len);

  const Input in = load_input(o, err);
  cfg.spec = architecture(o, in.archive.target_len);
  const auto sweep = eval::sweep_dimensionality(in.archive.windows, dims, cfg);
  for (const auto& w : sweep.warnings) err << "warning: " << w << '\n';

  json run = {{"command", "sweep"},
              {"input", in.echo},
              {"dims", dims},
              {"training", training_json(cfg.spec, cfg.train, cfg.pretext)}};
  report::write_sweep_report(o.out, sweep, run);
  out << report::format_sweep_table(sweep);
  return sweep.all_succeeded() ? kOk : kComputation;
}

// ---------------------------------------------------------------------------
// Flag registration

void add_input_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--windows", o.windows, "Windows archive written by 'preprocess'");
  cmd->add_option("--manifest", o.manifest, "Dataset manifest (preprocessed in memory)");
}

void add_dsp_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--band", o.band, "Band-pass edges LOW:HIGH in Hz (default: from manifest)");
  cmd->add_option("--window-s", o.window_s, "Window length in seconds")->capture_default_str();
  cmd->add_option("--overlap-s", o.overlap_s, "Overlap of consecutive windows in seconds")
      ->capture_default_str();
  cmd->add_option("--target-len", o.target_len, "Samples per window after resampling")
      ->capture_default_str();
}

void add_train_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--latent-dim", o.latent_dim, "Size of the learned representation")
      ->capture_default_str();
  cmd->add_option("--blocks", o.blocks, "Convolution blocks")->capture_default_str();
  cmd->add_option("--channels", o.channels, "Convolution channels")->capture_default_str();
  cmd->add_option("--kernel", o.kernel, "Convolution kernel length")->capture_default_str();
  cmd->add_option("--lr", o.lr, "Adam learning rate")->capture_default_str();
  cmd->add_option("--decay", o.decay, "Inverse-time learning-rate decay")->capture_default_str();
  cmd->add_option("--batch", o.batch, "Mini-batch size")->capture_default_str();
  cmd->add_option("--epochs", o.epochs, "Training epochs")->capture_default_str();
  cmd->add_option("--repeats", o.repeats, "Independent training runs (seeds seed..seed+n-1)")
      ->capture_default_str();
  cmd->add_option("--pretext-stride", o.pretext_stride,
                  "Use every n-th window of each recording for pretext training")
      ->capture_default_str();
  cmd->add_option("--pretext-activity", o.pretext_activities,
                  "Activities used for pretext training: names, 'normal' or 'all'");
}

void add_detector_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--detector", o.detector, "mvn, iforest or pca");
  cmd->add_option("--trees", o.n_trees, "Isolation forest size")->capture_default_str();
  cmd->add_option("--subsample", o.subsample, "Isolation forest subsample")->capture_default_str();
  cmd->add_option("--variance", o.variance, "PCA explained-variance threshold")
      ->capture_default_str();
}

void add_representation_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--representation", o.representation, "learned or original");
  cmd->add_option("--checkpoint", o.checkpoints, "Encoder checkpoint(s)");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"PPG anomaly detection with self-supervised representations", "ppgad"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "Generate a synthetic Sitting/Walking cohort");
  synth->add_option("--n-subjects", o.n_subjects, "Number of subjects")->capture_default_str();
  synth->add_option("--duration-s", o.duration_s, "Seconds per recording")->capture_default_str();
  synth->add_option("--fs", o.fs, "Sampling rate in Hz")->capture_default_str();
  synth->add_option("--band", o.band, "Band written to the manifest, LOW:HIGH");
  synth->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  synth->add_option("--out", o.out, "Output directory");

  auto* pre = app.add_subcommand("preprocess", "Filter, normalize, segment and resample");
  pre->add_option("--manifest", o.manifest, "Dataset manifest");
  add_dsp_flags(pre, o);
  pre->add_option("--out", o.out, "Windows archive to write");

  auto* train = app.add_subcommand("train", "Train the encoder on the pretext task");
  add_input_flags(train, o);
  add_dsp_flags(train, o);
  add_train_flags(train, o);
  train->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  train->add_option("--out", o.out, "Directory for checkpoints and traces");

  auto* extract = app.add_subcommand("extract", "Write per-window features as CSV");
  add_input_flags(extract, o);
  add_dsp_flags(extract, o);
  add_representation_flags(extract, o);
  extract->add_option("--out", o.out, "CSV file to write");

  auto* fit = app.add_subcommand("fit", "Fit a detector on selected windows");
  add_input_flags(fit, o);
  add_dsp_flags(fit, o);
  add_representation_flags(fit, o);
  add_detector_flags(fit, o);
  fit->add_option("--subject", o.subjects, "Restrict training to these subjects");
  fit->add_option("--activity", o.activity, "Activity to train on")->capture_default_str();
  fit->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  fit->add_option("--out", o.out, "Detector model (JSON) to write");

  auto* score = app.add_subcommand("score", "Score windows with a fitted detector");
  add_input_flags(score, o);
  add_dsp_flags(score, o);
  add_representation_flags(score, o);
  score->add_option("--model", o.model, "Detector model written by 'fit'");
  score->add_option("--out", o.out, "CSV file to write");

  auto* scenario = app.add_subcommand("scenario", "Run evaluation scenarios");
  add_input_flags(scenario, o);
  add_dsp_flags(scenario, o);
  add_representation_flags(scenario, o);
  add_detector_flags(scenario, o);
  add_train_flags(scenario, o);
  scenario->add_flag("--train-encoder", o.train_encoder,
                     "Train encoders inside the protocol instead of loading checkpoints");
  scenario->add_option("--task", o.task, "movement or biometric (default: both)");
  scenario->add_option("--mode", o.mode, "generalized or personalized (default: both)");
  scenario->add_option("--folds", o.folds, "Cross-validation folds")->capture_default_str();
  scenario->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  scenario->add_option("--jobs", o.jobs, "Concurrent evaluation units")->capture_default_str();
  scenario->add_option("--out", o.out, "Report directory");

  auto* sweep = app.add_subcommand("sweep", "Sweep the representation size");
  add_input_flags(sweep, o);
  add_dsp_flags(sweep, o);
  add_detector_flags(sweep, o);
  add_train_flags(sweep, o);
  sweep->add_option("--dims", o.dims, "Comma-separated latent sizes, e.g. 2,8,64");
  sweep->add_option("--task", o.task, "movement or biometric")->default_str("movement");
  sweep->add_option("--mode", o.mode, "generalized or personalized")->default_str("generalized");
  sweep->add_option("--folds", o.folds, "Cross-validation folds")->capture_default_str();
  sweep->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  sweep->add_option("--jobs", o.jobs, "Concurrent evaluation units")->capture_default_str();
  sweep->add_option("--out", o.out, "Report directory");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*synth) return cmd_synth(o, out);
    if (*pre) return cmd_preprocess(o, out, err);
    if (*train) return cmd_train(o, out, err);
    if (*extract) return cmd_extract(o, out, err);
    if (*fit) return cmd_fit(o, out, err);
    if (*score) return cmd_score(o, out, err);
    if (*scenario) return cmd_scenario(o, out, err);
    if (*sweep) return cmd_sweep(o, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return kUnexpected;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace ppgad::cli
