#include "ppgad/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <exception>
#include <numeric>
#include <set>
#include <thread>

#include "ppgad/augment.hpp"
#include "ppgad/error.hpp"
#include "ppgad/rng.hpp"

namespace ppgad::eval {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Runs fn(0..n-1) on up to `jobs` threads. The exception of the lowest
// failing index is rethrown, so failures do not depend on scheduling.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(n);
  const std::size_t workers = std::min(std::max<std::size_t>(jobs, 1), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// Window positions grouped by subject and activity, in data order.
class WindowIndex {
 public:
  explicit WindowIndex(const std::vector<Window>& data) {
    for (std::size_t i = 0; i < data.size(); ++i) {
      groups_[data[i].source_subject][data[i].source_activity.name()].push_back(i);
    }
  }

  const std::vector<std::size_t>& get(const std::string& subject, const Activity& act) const {
    static const std::vector<std::size_t> empty;
    const auto s = groups_.find(subject);
    if (s == groups_.end()) return empty;
    const auto a = s->second.find(act.name());
    return a == s->second.end() ? empty : a->second;
  }

  std::vector<std::string> subjects() const {
    std::vector<std::string> out;
    for (const auto& [s, _] : groups_) out.push_back(s);
    return out;
  }

 private:
  std::map<std::string, std::map<std::string, std::vector<std::size_t>>> groups_;
};

std::vector<std::size_t> pick(const std::vector<std::size_t>& positions,
                              const std::vector<std::size_t>& fold) {
  std::vector<std::size_t> out;
  out.reserve(fold.size());
  for (std::size_t f : fold) out.push_back(positions[f]);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> pick_except(const std::vector<std::size_t>& positions,
                                     const std::vector<std::size_t>& fold) {
  std::vector<bool> drop(positions.size(), false);
  for (std::size_t f : fold) drop[f] = true;
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (!drop[i]) out.push_back(positions[i]);
  }
  return out;
}

void append(std::vector<std::size_t>& to, const std::vector<std::size_t>& from) {
  to.insert(to.end(), from.begin(), from.end());
}

std::vector<double> row_of(const detectors::Matrix& m, std::size_t r) {
  std::vector<double> out(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index c = 0; c < m.cols(); ++c) out[c] = m(static_cast<Eigen::Index>(r), c);
  return out;
}

class Evaluator {
 public:
  Evaluator(const ScenarioConfig& config, const RunHooks& hooks) : config_(config), hooks_(hooks) {}

  detectors::DetectorModel fit(const detectors::Matrix& features,
                               const std::vector<std::size_t>& train, const std::string& unit,
                               std::size_t fold) const {
    const std::size_t reps = std::max<std::size_t>(hooks_.train_replication, 1);
    detectors::Matrix x(static_cast<Eigen::Index>(train.size() * reps), features.cols());
    Eigen::Index r = 0;
    for (std::size_t rep = 0; rep < reps; ++rep) {
      for (std::size_t i : train) x.row(r++) = features.row(static_cast<Eigen::Index>(i));
    }
    detectors::DetectorSettings settings = config_.detector;
    settings.seed = Rng::derive(config_.seed, "detector/" + unit + "/" + std::to_string(fold));
    return detectors::fit_detector(settings, x);
  }

  static std::vector<double> scores(const detectors::DetectorModel& model,
                                    const detectors::Matrix& features,
                                    const std::vector<std::size_t>& rows) {
    std::vector<double> out;
    out.reserve(rows.size());
    for (std::size_t i : rows) out.push_back(detectors::score(model, row_of(features, i)));
    return out;
  }

  void audit(const std::string& unit, std::size_t fold, const std::string& pairing,
             const std::string& held_out, const std::vector<std::size_t>& train,
             const std::vector<std::size_t>& normal,
             const std::vector<std::size_t>& anomalous) const {
    if (hooks_.audit) hooks_.audit(SplitAudit{unit, fold, pairing, held_out, train, normal, anomalous});
  }

  // Fits on `train`, scores both test sets, returns the AUC.
  double run_split(const detectors::Matrix& features, const std::string& unit, std::size_t fold,
                   const std::string& held_out, const std::vector<std::size_t>& train,
                   const std::vector<std::size_t>& normal,
                   const std::vector<std::size_t>& anomalous) const {
    audit(unit, fold, "", held_out, train, normal, anomalous);
    const auto model = fit(features, train, unit, fold);
    return detectors::auc(scores(model, features, normal), scores(model, features, anomalous));
  }

  std::uint64_t fold_seed(const std::string& subject, const Activity& act) const {
    return Rng::derive(config_.seed, "folds/" + subject + "/" + act.name());
  }

 private:
  const ScenarioConfig& config_;
  const RunHooks& hooks_;
};

// Largest usable fold count not above the request; at least 2.
std::size_t usable_folds(std::size_t requested, std::size_t available, const std::string& what,
                         std::vector<std::string>& warnings) {
  if (available >= requested) return requested;
  if (available < 2) {
    throw EvaluationError(what + " has " + std::to_string(available) +
                          " window(s); at least 2 are needed for cross-validation");
  }
  warnings.push_back(what + " has only " + std::to_string(available) + " windows; using " +
                     std::to_string(available) + " folds instead of " + std::to_string(requested));
  return available;
}

struct UnitOutcome {
  std::string unit;
  double auc = 0.0;
  std::vector<std::string> warnings;
};

EvalResult finish(const ScenarioConfig& config, const Representation& rep, std::size_t dim,
                  std::size_t folds_used, std::vector<std::string> warnings,
                  const std::vector<UnitOutcome>& outcomes) {
  EvalResult r;
  r.config = config;
  r.representation = rep.describe();
  r.feature_dim = dim;
  r.folds_used = folds_used;
  r.warnings = std::move(warnings);
  std::vector<double> values;
  for (const auto& o : outcomes) {
    r.per_unit_auc[o.unit] = o.auc;
    r.warnings.insert(r.warnings.end(), o.warnings.begin(), o.warnings.end());
  }
  for (const auto& [_, v] : r.per_unit_auc) values.push_back(v);
  std::tie(r.mean, r.std) = aggregate(values);
  return r;
}

void check_representation(const ScenarioConfig& config, const Representation& rep) {
  config.validate();
  if (rep.kind() != config.representation) {
    throw ConfigError("scenario expects the " + to_string(config.representation) +
                      " representation but was given " + to_string(rep.kind()));
  }
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

// ---------------------------------------------------------------------------

std::string to_string(Task task) {
  return task == Task::MovementDetection ? "movement" : "biometric";
}

std::string to_string(Mode mode) { return mode == Mode::Generalized ? "generalized" : "personalized"; }

std::string to_string(RepresentationKind kind) {
  return kind == RepresentationKind::Learned ? "learned" : "original";
}

Task parse_task(std::string_view text) {
  const auto t = lower(text);
  if (t == "movement") return Task::MovementDetection;
  if (t == "biometric") return Task::BiometricIdentification;
  throw ConfigError("unknown task '" + std::string(text) + "' (expected movement or biometric)");
}

Mode parse_mode(std::string_view text) {
  const auto t = lower(text);
  if (t == "generalized") return Mode::Generalized;
  if (t == "personalized") return Mode::Personalized;
  throw ConfigError("unknown mode '" + std::string(text) +
                    "' (expected generalized or personalized)");
}

RepresentationKind parse_representation(std::string_view text) {
  const auto t = lower(text);
  if (t == "learned") return RepresentationKind::Learned;
  if (t == "original") return RepresentationKind::Original;
  throw ConfigError("unknown representation '" + std::string(text) +
                    "' (expected learned or original)");
}

void ScenarioConfig::validate() const {
  if (folds < 2) throw ConfigError("folds must be at least 2");
  if (jobs < 1) throw ConfigError("jobs must be at least 1");
  if (task == Task::MovementDetection && normal_activity == anomalous_activity) {
    throw ConfigError("movement detection needs distinct normal and anomalous activities");
  }
  if (detector.n_trees < 1) throw ConfigError("isolation forest needs at least one tree");
  if (detector.subsample < 2) throw ConfigError("isolation forest subsample must be at least 2");
  if (!(detector.variance_threshold > 0.0 && detector.variance_threshold <= 1.0)) {
    throw ConfigError("PCA variance threshold must lie in (0, 1]");
  }
}

std::pair<double, double> aggregate(std::span<const double> values) {
  if (values.empty()) throw EvaluationError("cannot aggregate an empty set of AUCs");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / n)};
}

std::vector<std::vector<std::size_t>> make_folds(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k == 0 || k > n) {
    throw ContractViolation("make_folds: need 1 <= k <= n (k=" + std::to_string(k) +
                            ", n=" + std::to_string(n) + ")");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = n / k + (f < n % k ? 1 : 0);
    folds[f].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                    order.begin() + static_cast<std::ptrdiff_t>(pos + size));
    pos += size;
  }
  return folds;
}

// ---------------------------------------------------------------------------
// Representations

detectors::Matrix OriginalRepresentation::features(const std::vector<Window>& windows,
                                                   const std::string&) const {
  if (windows.empty()) return detectors::Matrix(0, 0);
  const std::size_t len = windows.front().values.size();
  detectors::Matrix m(static_cast<Eigen::Index>(windows.size()), static_cast<Eigen::Index>(len));
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (windows[i].values.size() != len) {
      throw ContractViolation("original representation: windows differ in length");
    }
    for (std::size_t j = 0; j < len; ++j) m(i, j) = windows[i].values[j];
  }
  return m;
}

EncoderRepresentation::EncoderRepresentation(nn::ModelParams params, std::string label)
    : params_(std::move(params)), label_(std::move(label)) {}

namespace {

detectors::Matrix encode_matrix(const nn::ModelParams& params, const std::vector<Window>& windows) {
  const std::size_t d = params.spec().latent_dim;
  detectors::Matrix m(static_cast<Eigen::Index>(windows.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (windows[i].values.size() != params.spec().input_len) {
      throw ConfigError("window length " + std::to_string(windows[i].values.size()) +
                        " does not match the encoder input length " +
                        std::to_string(params.spec().input_len));
    }
    const auto h = nn::encode(params, windows[i].values);
    for (std::size_t j = 0; j < d; ++j) m(i, j) = h[j];
  }
  return m;
}

}  // namespace

detectors::Matrix EncoderRepresentation::features(const std::vector<Window>& windows,
                                                  const std::string&) const {
  return encode_matrix(params_, windows);
}

PretextEncoderRepresentation::PretextEncoderRepresentation(nn::ArchitectureSpec spec,
                                                           nn::TrainConfig train,
                                                           PretextSelection selection)
    : spec_(spec), train_(train), selection_(std::move(selection)) {
  spec_.validate();
  train_.validate();
  if (selection_.stride < 1) throw ConfigError("pretext stride must be at least 1");
}

std::string PretextEncoderRepresentation::describe() const {
  std::string activities;
  for (const auto& a : selection_.activities) {
    activities += (activities.empty() ? ", pretext_activities=" : "+") + a.name();
  }
  return "learned(latent_dim=" + std::to_string(spec_.latent_dim) +
         ", blocks=" + std::to_string(spec_.blocks) + ", channels=" +
         std::to_string(spec_.channels) + ", kernel=" + std::to_string(spec_.kernel) +
         ", epochs=" + std::to_string(train_.epochs) + ", seed=" + std::to_string(train_.seed) +
         ", pretext_stride=" + std::to_string(selection_.stride) + activities + ")";
}

std::vector<Window> PretextEncoderRepresentation::training_windows(
    const std::vector<Window>& windows, const std::string& held_out) const {
  std::vector<Window> out;
  for (const auto& w : windows) {
    if (w.source_subject == held_out || w.index % selection_.stride != 0) continue;
    const auto& acts = selection_.activities;
    if (acts.empty() || std::find(acts.begin(), acts.end(), w.source_activity) != acts.end()) {
      out.push_back(w);
    }
  }
  return out;
}

std::vector<std::string> PretextEncoderRepresentation::training_subjects(
    const std::vector<Window>& windows, const std::string& held_out) const {
  std::set<std::string> s;
  for (const auto& w : training_windows(windows, held_out)) s.insert(w.source_subject);
  return {s.begin(), s.end()};
}

const nn::ModelParams& PretextEncoderRepresentation::encoder(const std::vector<Window>& windows,
                                                             const std::string& held_out) const {
  std::promise<std::shared_ptr<const nn::ModelParams>> promise;
  std::shared_future<std::shared_ptr<const nn::ModelParams>> future;
  bool owner = false;
  {
    std::lock_guard lock(mutex_);
    auto it = cache_.find(held_out);
    if (it == cache_.end()) {
      future = promise.get_future().share();
      cache_.emplace(held_out, future);
      owner = true;
    } else {
      future = it->second;
    }
  }
  if (owner) {
    try {
      const auto train = training_windows(windows, held_out);
      if (train.empty()) {
        throw EvaluationError("no pretext training windows left after holding out '" + held_out +
                              "'");
      }
      auto result = nn::train_pretext(augment::build_pretext_dataset(train), spec_, train_);
      promise.set_value(std::make_shared<const nn::ModelParams>(std::move(result.params)));
    } catch (...) {
      promise.set_exception(std::current_exception());
    }
  }
  return *future.get();
}

detectors::Matrix PretextEncoderRepresentation::features(const std::vector<Window>& windows,
                                                         const std::string& held_out) const {
  return encode_matrix(encoder(windows, held_out), windows);
}

// ---------------------------------------------------------------------------
// Scenarios

EvalResult movement_generalized(const std::vector<Window>& data, const ScenarioConfig& config,
                                const Representation& rep, const RunHooks& hooks) {
  check_representation(config, rep);
  const WindowIndex index(data);
  std::vector<std::string> warnings;
  std::vector<std::string> units;
  for (const auto& s : index.subjects()) {
    if (index.get(s, config.normal_activity).empty() ||
        index.get(s, config.anomalous_activity).empty()) {
      warnings.push_back("subject " + s + " lacks " + config.normal_activity.name() + " or " +
                         config.anomalous_activity.name() + " windows; skipped");
    } else {
      units.push_back(s);
    }
  }
  if (units.size() < 2) {
    throw EvaluationError("movement detection (generalized) needs at least 2 subjects with both " +
                          config.normal_activity.name() + " and " +
                          config.anomalous_activity.name() + " windows");
  }

  const Evaluator ev(config, hooks);
  std::vector<UnitOutcome> outcomes(units.size());
  std::vector<std::size_t> dims(units.size(), 0);
  parallel_for(units.size(), config.jobs, [&](std::size_t u) {
    const std::string& s = units[u];
    const auto features = rep.features(data, s);
    dims[u] = static_cast<std::size_t>(features.cols());
    std::vector<std::size_t> train;
    for (const auto& other : index.subjects()) {
      if (other != s) append(train, index.get(other, config.normal_activity));
    }
    std::sort(train.begin(), train.end());
    outcomes[u] = {s,
                   ev.run_split(features, s, 0, s, train, index.get(s, config.normal_activity),
                                index.get(s, config.anomalous_activity)),
                   {}};
  });
  return finish(config, rep, dims.front(), 1, std::move(warnings), outcomes);
}

EvalResult movement_personalized(const std::vector<Window>& data, const ScenarioConfig& config,
                                 const Representation& rep, const RunHooks& hooks) {
  check_representation(config, rep);
  const WindowIndex index(data);
  std::vector<std::string> warnings;
  std::vector<std::string> units;
  for (const auto& s : index.subjects()) {
    if (index.get(s, config.normal_activity).empty() ||
        index.get(s, config.anomalous_activity).empty()) {
      warnings.push_back("subject " + s + " lacks " + config.normal_activity.name() + " or " +
                         config.anomalous_activity.name() + " windows; skipped");
    } else {
      units.push_back(s);
    }
  }
  if (units.empty()) {
    throw EvaluationError("movement detection (personalized) needs a subject with both " +
                          config.normal_activity.name() + " and " +
                          config.anomalous_activity.name() + " windows");
  }

  const Evaluator ev(config, hooks);
  std::vector<UnitOutcome> outcomes(units.size());
  std::vector<std::size_t> dims(units.size(), 0);
  std::vector<std::size_t> ks(units.size(), 0);
  parallel_for(units.size(), config.jobs, [&](std::size_t u) {
    const std::string& s = units[u];
    const auto& normal = index.get(s, config.normal_activity);
    const auto& anomalous = index.get(s, config.anomalous_activity);
    std::vector<std::string> unit_warnings;
    const std::size_t k = usable_folds(config.folds, std::min(normal.size(), anomalous.size()),
                                       "subject " + s, unit_warnings);
    const auto nfolds = make_folds(normal.size(), k, ev.fold_seed(s, config.normal_activity));
    const auto afolds = make_folds(anomalous.size(), k, ev.fold_seed(s, config.anomalous_activity));
    const auto features = rep.features(data, s);
    dims[u] = static_cast<std::size_t>(features.cols());
    ks[u] = k;
    std::vector<double> aucs;
    for (std::size_t f = 0; f < k; ++f) {
      aucs.push_back(ev.run_split(features, s, f, s, pick_except(normal, nfolds[f]),
                                  pick(normal, nfolds[f]), pick(anomalous, afolds[f])));
    }
    outcomes[u] = {s, mean_of(aucs), std::move(unit_warnings)};
  });
  return finish(config, rep, dims.front(), *std::min_element(ks.begin(), ks.end()),
                std::move(warnings), outcomes);
}

namespace {

// Subjects with normal-activity windows, and one fold count shared by all.
struct BiometricSetup {
  std::vector<std::string> subjects;
  std::size_t k = 0;
  std::map<std::string, std::vector<std::vector<std::size_t>>> folds;
};

BiometricSetup biometric_setup(const WindowIndex& index, const ScenarioConfig& config,
                               const Evaluator& ev, std::size_t min_subjects,
                               const std::string& name, std::vector<std::string>& warnings) {
  BiometricSetup b;
  std::size_t smallest = std::numeric_limits<std::size_t>::max();
  for (const auto& s : index.subjects()) {
    const auto n = index.get(s, config.normal_activity).size();
    if (n == 0) {
      warnings.push_back("subject " + s + " has no " + config.normal_activity.name() +
                         " windows; skipped");
      continue;
    }
    b.subjects.push_back(s);
    smallest = std::min(smallest, n);
  }
  if (b.subjects.size() < min_subjects) {
    throw EvaluationError(name + " needs at least " + std::to_string(min_subjects) +
                          " subjects with " + config.normal_activity.name() + " windows");
  }
  b.k = usable_folds(config.folds, smallest, "the smallest subject", warnings);
  for (const auto& s : b.subjects) {
    b.folds[s] = make_folds(index.get(s, config.normal_activity).size(), b.k,
                            ev.fold_seed(s, config.normal_activity));
  }
  return b;
}

}  // namespace

EvalResult biometric_generalized(const std::vector<Window>& data, const ScenarioConfig& config,
                                 const Representation& rep, const RunHooks& hooks) {
  check_representation(config, rep);
  const WindowIndex index(data);
  const Evaluator ev(config, hooks);
  std::vector<std::string> warnings;
  const auto b = biometric_setup(index, config, ev, 3, "biometric identification (generalized)",
                                 warnings);
  const auto features = rep.features(data, "");

  std::vector<UnitOutcome> outcomes(b.subjects.size());
  parallel_for(b.subjects.size(), config.jobs, [&](std::size_t u) {
    const std::string& s = b.subjects[u];
    const auto& anomalous = index.get(s, config.normal_activity);
    std::vector<double> aucs;
    for (std::size_t f = 0; f < b.k; ++f) {
      std::vector<std::size_t> train;
      std::vector<std::size_t> normal;
      for (const auto& other : b.subjects) {
        if (other == s) continue;
        const auto& pos = index.get(other, config.normal_activity);
        append(train, pick_except(pos, b.folds.at(other)[f]));
        append(normal, pick(pos, b.folds.at(other)[f]));
      }
      std::sort(train.begin(), train.end());
      std::sort(normal.begin(), normal.end());
      aucs.push_back(ev.run_split(features, s, f, "", train, normal, anomalous));
    }
    outcomes[u] = {s, mean_of(aucs), {}};
  });
  return finish(config, rep, static_cast<std::size_t>(features.cols()), b.k, std::move(warnings),
                outcomes);
}

EvalResult biometric_personalized(const std::vector<Window>& data, const ScenarioConfig& config,
                                  const Representation& rep, const RunHooks& hooks) {
  check_representation(config, rep);
  const WindowIndex index(data);
  const Evaluator ev(config, hooks);
  std::vector<std::string> warnings;
  const auto b = biometric_setup(index, config, ev, 2, "biometric identification (personalized)",
                                 warnings);
  const auto features = rep.features(data, "");

  std::vector<UnitOutcome> outcomes(b.subjects.size());
  parallel_for(b.subjects.size(), config.jobs, [&](std::size_t u) {
    const std::string& s = b.subjects[u];
    const auto& own = index.get(s, config.normal_activity);
    std::vector<double> aucs;
    for (std::size_t f = 0; f < b.k; ++f) {
      const auto train = pick_except(own, b.folds.at(s)[f]);
      const auto normal = pick(own, b.folds.at(s)[f]);
      const auto model = ev.fit(features, train, s, f);
      const auto normal_scores = Evaluator::scores(model, features, normal);
      for (const auto& other : b.subjects) {
        if (other == s) continue;
        const auto anomalous =
            pick(index.get(other, config.normal_activity), b.folds.at(other)[f]);
        ev.audit(s, f, other, "", train, normal, anomalous);
        aucs.push_back(detectors::auc(normal_scores, Evaluator::scores(model, features, anomalous)));
      }
    }
    outcomes[u] = {s, mean_of(aucs), {}};
  });
  return finish(config, rep, static_cast<std::size_t>(features.cols()), b.k, std::move(warnings),
                outcomes);
}

EvalResult run_scenario(const std::vector<Window>& data, const ScenarioConfig& config,
                        const Representation& rep, const RunHooks& hooks) {
  if (config.task == Task::MovementDetection) {
    return config.mode == Mode::Generalized ? movement_generalized(data, config, rep, hooks)
                                            : movement_personalized(data, config, rep, hooks);
  }
  return config.mode == Mode::Generalized ? biometric_generalized(data, config, rep, hooks)
                                          : biometric_personalized(data, config, rep, hooks);
}

EvalResult average_repeats(const std::vector<EvalResult>& runs) {
  if (runs.empty()) throw EvaluationError("no runs to average");
  EvalResult out = runs.front();
  std::map<std::string, std::vector<double>> per_unit;
  std::vector<double> means;
  for (const auto& r : runs) {
    means.push_back(r.mean);
    for (const auto& [unit, auc] : r.per_unit_auc) per_unit[unit].push_back(auc);
  }
  out.per_unit_auc.clear();
  std::vector<double> unit_means;
  for (const auto& [unit, values] : per_unit) {
    out.per_unit_auc[unit] = mean_of(values);
    unit_means.push_back(out.per_unit_auc[unit]);
  }
  out.mean = mean_of(means);
  out.std = aggregate(unit_means).second;
  for (std::size_t i = 1; i < runs.size(); ++i) {
    out.warnings.insert(out.warnings.end(), runs[i].warnings.begin(), runs[i].warnings.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sweep

bool SweepResult::all_succeeded() const {
  if (!std::holds_alternative<EvalResult>(baseline)) return false;
  return std::all_of(by_dim.begin(), by_dim.end(), [](const auto& kv) {
    return std::holds_alternative<EvalResult>(kv.second);
  });
}

SweepResult sweep_dimensionality(const std::vector<Window>& data,
                                 const std::vector<std::size_t>& dims, const SweepConfig& config,
                                 const RunHooks& hooks) {
  if (dims.empty()) throw ConfigError("dimensionality sweep needs at least one dimension");
  SweepResult out;
  std::vector<std::size_t> unique;
  for (std::size_t d : dims) {
    if (d == 0) throw ConfigError("latent dimensions must be at least 1");
    if (std::find(unique.begin(), unique.end(), d) != unique.end()) {
      out.warnings.push_back("duplicate dimension " + std::to_string(d) + " ignored");
    } else {
      unique.push_back(d);
    }
  }
  config.scenario.validate();

  auto attempt = [&](const Representation& rep, RepresentationKind kind) -> SweepEntry {
    ScenarioConfig sc = config.scenario;
    sc.representation = kind;
    try {
      return run_scenario(data, sc, rep, hooks);
    } catch (const std::exception& e) {
      return std::string(e.what());
    }
  };

  for (std::size_t d : unique) {
    nn::ArchitectureSpec spec = config.spec;
    spec.latent_dim = d;
    try {
      const PretextEncoderRepresentation rep(spec, config.train, config.pretext);
      out.by_dim.emplace(d, attempt(rep, RepresentationKind::Learned));
    } catch (const std::exception& e) {
      out.by_dim.emplace(d, std::string(e.what()));
    }
  }
  out.baseline = attempt(OriginalRepresentation{}, RepresentationKind::Original);
  return out;
}

}  // namespace ppgad::eval
