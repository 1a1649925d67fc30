#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ppgad/detectors.hpp"
#include "ppgad/nn.hpp"
#include "ppgad/types.hpp"

namespace ppgad::eval {

enum class Task { MovementDetection, BiometricIdentification };
enum class Mode { Generalized, Personalized };
enum class RepresentationKind { Learned, Original };

std::string to_string(Task task);
std::string to_string(Mode mode);
std::string to_string(RepresentationKind kind);
// "movement"/"biometric", "generalized"/"personalized", "learned"/"original".
Task parse_task(std::string_view text);
Mode parse_mode(std::string_view text);
RepresentationKind parse_representation(std::string_view text);

struct ScenarioConfig {
  Task task = Task::MovementDetection;
  Mode mode = Mode::Generalized;
  Activity normal_activity = ActivityKind::Sitting;
  Activity anomalous_activity = ActivityKind::Walking;  // movement task only
  detectors::DetectorSettings detector;  // detector.seed is replaced per fit
  RepresentationKind representation = RepresentationKind::Learned;
  std::string representation_ref;  // e.g. checkpoint path, echoed in reports
  std::size_t folds = 5;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;  // concurrent evaluation units

  // Throws ConfigError.
  void validate() const;
};

struct EvalResult {
  std::map<std::string, double> per_unit_auc;
  double mean = 0.0;
  double std = 0.0;
  ScenarioConfig config;
  std::string representation;  // description of the feature extractor
  std::size_t feature_dim = 0;
  std::size_t folds_used = 0;
  std::vector<std::string> warnings;
};

// Arithmetic mean and population standard deviation. Throws EvaluationError
// when empty.
std::pair<double, double> aggregate(std::span<const double> values);

// Seeded permutation of 0..n-1 cut into k contiguous blocks; the first
// n % k blocks get one extra element.
std::vector<std::vector<std::size_t>> make_folds(std::size_t n, std::size_t k, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Feature extraction

class Representation {
 public:
  virtual ~Representation() = default;

  virtual RepresentationKind kind() const = 0;
  virtual std::string describe() const = 0;

  // One row per window. `held_out` names a subject whose recordings the
  // extractor must not have been fit on; empty means no restriction.
  virtual detectors::Matrix features(const std::vector<Window>& windows,
                                     const std::string& held_out) const = 0;
};

// The resampled window itself.
class OriginalRepresentation final : public Representation {
 public:
  RepresentationKind kind() const override { return RepresentationKind::Original; }
  std::string describe() const override { return "original"; }
  detectors::Matrix features(const std::vector<Window>& windows,
                             const std::string& held_out) const override;
};

// A single frozen encoder, used for every evaluation unit.
class EncoderRepresentation final : public Representation {
 public:
  EncoderRepresentation(nn::ModelParams params, std::string label);

  RepresentationKind kind() const override { return RepresentationKind::Learned; }
  std::string describe() const override { return label_; }
  detectors::Matrix features(const std::vector<Window>& windows,
                             const std::string& held_out) const override;

 private:
  nn::ModelParams params_;
  std::string label_;
};

// Which windows feed pretext training.
struct PretextSelection {
  std::size_t stride = 1;             // keep windows whose index is a multiple of this
  std::vector<Activity> activities;   // empty keeps every activity
};

// Trains a fresh encoder on the pretext task for every distinct held-out
// subject, using the selected windows of the other subjects. Encoders are
// cached per held-out subject and shared by concurrent callers.
class PretextEncoderRepresentation final : public Representation {
 public:
  PretextEncoderRepresentation(nn::ArchitectureSpec spec, nn::TrainConfig train,
                               PretextSelection selection = {});

  RepresentationKind kind() const override { return RepresentationKind::Learned; }
  std::string describe() const override;
  detectors::Matrix features(const std::vector<Window>& windows,
                             const std::string& held_out) const override;

  // Trains (or fetches) the encoder for a held-out subject.
  const nn::ModelParams& encoder(const std::vector<Window>& windows,
                                 const std::string& held_out) const;
  // Subjects whose windows fed the pretext training for `held_out`.
  std::vector<std::string> training_subjects(const std::vector<Window>& windows,
                                             const std::string& held_out) const;

 private:
  std::vector<Window> training_windows(const std::vector<Window>& windows,
                                       const std::string& held_out) const;

  nn::ArchitectureSpec spec_;
  nn::TrainConfig train_;
  PretextSelection selection_;
  mutable std::mutex mutex_;
  mutable std::map<std::string, std::shared_future<std::shared_ptr<const nn::ModelParams>>> cache_;
};

// ---------------------------------------------------------------------------
// Scenarios
//
// `data` holds preprocessed windows from any number of subjects and
// activities; windows are identified by their position in `data`.

struct SplitAudit {
  std::string unit;
  std::size_t fold = 0;
  std::string pairing;  // other subject in biometric-personalized, else empty
  std::string held_out;  // subject the representation excluded
  const std::vector<std::size_t>& train;
  const std::vector<std::size_t>& test_normal;
  const std::vector<std::size_t>& test_anomalous;
};

struct RunHooks {
  // Called for every detector fit/test split; must be thread-safe when
  // config.jobs > 1.
  std::function<void(const SplitAudit&)> audit;
  // Each training row is repeated this many times before fitting.
  std::size_t train_replication = 1;
};

EvalResult movement_generalized(const std::vector<Window>& data, const ScenarioConfig& config,
                                const Representation& rep, const RunHooks& hooks = {});
EvalResult movement_personalized(const std::vector<Window>& data, const ScenarioConfig& config,
                                 const Representation& rep, const RunHooks& hooks = {});
EvalResult biometric_generalized(const std::vector<Window>& data, const ScenarioConfig& config,
                                 const Representation& rep, const RunHooks& hooks = {});
EvalResult biometric_personalized(const std::vector<Window>& data, const ScenarioConfig& config,
                                  const Representation& rep, const RunHooks& hooks = {});

// Dispatches on config.task and config.mode.
EvalResult run_scenario(const std::vector<Window>& data, const ScenarioConfig& config,
                        const Representation& rep, const RunHooks& hooks = {});

// Per-unit AUCs averaged across repeated runs of the same scenario; the
// mean is the mean of the runs' means.
EvalResult average_repeats(const std::vector<EvalResult>& runs);

// ---------------------------------------------------------------------------
// Dimensionality sweep

struct SweepConfig {
  ScenarioConfig scenario;
  nn::ArchitectureSpec spec;  // latent_dim is overridden per entry
  nn::TrainConfig train;
  PretextSelection pretext;
};

using SweepEntry = std::variant<EvalResult, std::string>;  // result or error message

struct SweepResult {
  std::map<std::size_t, SweepEntry> by_dim;
  SweepEntry baseline;  // original representation
  std::vector<std::string> warnings;

  bool all_succeeded() const;
};

// Duplicate dims are dropped with a warning. Throws ConfigError for an
// empty list or a zero dimension; failures of single entries are recorded
// in place.
SweepResult sweep_dimensionality(const std::vector<Window>& data,
                                 const std::vector<std::size_t>& dims,
                                 const SweepConfig& config, const RunHooks& hooks = {});

}  // namespace ppgad::eval
