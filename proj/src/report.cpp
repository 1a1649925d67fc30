#include "ppgad/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ppgad/error.hpp"
#include "ppgad/version.hpp"

namespace ppgad::report {

namespace {

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IngestionError("cannot write report file: " + path.string());
  out << text;
  if (!out) throw IngestionError("failed writing report file: " + path.string());
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IngestionError("cannot create output directory " + dir + ": " + ec.message());
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

}  // namespace

nlohmann::json config_to_json(const eval::ScenarioConfig& c) {
  nlohmann::json j = {
      {"task", eval::to_string(c.task)},
      {"mode", eval::to_string(c.mode)},
      {"normal_activity", c.normal_activity.name()},
      {"detector", detectors::to_string(c.detector.kind)},
      {"representation", eval::to_string(c.representation)},
      {"representation_ref", c.representation_ref},
      {"folds", c.folds},
      {"seed", c.seed},
  };
  if (c.task == eval::Task::MovementDetection) {
    j["anomalous_activity"] = c.anomalous_activity.name();
  }
  switch (c.detector.kind) {
    case detectors::DetectorKind::IForest:
      j["detector_params"] = {{"n_trees", c.detector.n_trees}, {"subsample", c.detector.subsample}};
      break;
    case detectors::DetectorKind::Pca:
      j["detector_params"] = {{"variance_threshold", c.detector.variance_threshold}};
      break;
    case detectors::DetectorKind::Mvn:
      j["detector_params"] = nlohmann::json::object();
      break;
  }
  return j;
}

nlohmann::json result_to_json(const eval::EvalResult& r) {
  nlohmann::json units = nlohmann::json::object();
  for (const auto& [unit, auc] : r.per_unit_auc) units[unit] = auc;
  return {{"config", config_to_json(r.config)},
          {"representation", r.representation},
          {"feature_dim", r.feature_dim},
          {"folds_used", r.folds_used},
          {"per_unit_auc", units},
          {"mean_auc", r.mean},
          {"std_auc", r.std},
          {"warnings", r.warnings}};
}

std::string format_table(const std::vector<eval::EvalResult>& results) {
  std::ostringstream out;
  out << "ppgad " << kVersion << " scenario report\n\n";
  out << pad("task", 10) << pad("mode", 13) << pad("detector", 9) << pad("representation", 15)
      << pad("dim", 5) << pad("AUC (mean +- std)", 19) << "per-unit AUC\n";
  for (const auto& r : results) {
    std::string units;
    for (const auto& [unit, auc] : r.per_unit_auc) {
      if (!units.empty()) units += ' ';
      units += unit + "=" + fixed(auc);
    }
    out << pad(eval::to_string(r.config.task), 10) << pad(eval::to_string(r.config.mode), 13)
        << pad(detectors::to_string(r.config.detector.kind), 9)
        << pad(eval::to_string(r.config.representation), 15)
        << pad(std::to_string(r.feature_dim), 5)
        << pad(fixed(r.mean) + " +- " + fixed(r.std), 19) << units << '\n';
  }
  bool any_warning = false;
  for (const auto& r : results) {
    for (const auto& w : r.warnings) {
      if (!any_warning) out << "\nwarnings:\n";
      any_warning = true;
      out << "  [" << eval::to_string(r.config.task) << '/' << eval::to_string(r.config.mode)
          << '/' << detectors::to_string(r.config.detector.kind) << '/'
          << eval::to_string(r.config.representation) << "] " << w << '\n';
    }
  }
  return out.str();
}

nlohmann::json results_document(const std::vector<eval::EvalResult>& results,
                                const nlohmann::json& run) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : results) arr.push_back(result_to_json(r));
  return {{"format", "ppgad-report"}, {"version", kVersion}, {"run", run}, {"results", arr}};
}

void write_scenario_report(const std::string& dir, const std::vector<eval::EvalResult>& results,
                           const nlohmann::json& run) {
  ensure_dir(dir);
  write_text(std::filesystem::path(dir) / "report.txt", format_table(results));
  write_text(std::filesystem::path(dir) / "report.json",
             results_document(results, run).dump(2) + "\n");
}

std::string format_sweep_table(const eval::SweepResult& sweep) {
  std::ostringstream out;
  out << "ppgad " << kVersion << " dimensionality sweep\n\n";
  out << pad("dim", 10) << "AUC (mean +- std)\n";
  auto line = [&out](const std::string& label, const eval::SweepEntry& e) {
    out << pad(label, 10);
    if (const auto* r = std::get_if<eval::EvalResult>(&e)) {
      out << fixed(r->mean) << " +- " << fixed(r->std) << '\n';
    } else {
      out << "failed: " << std::get<std::string>(e) << '\n';
    }
  };
  for (const auto& [dim, entry] : sweep.by_dim) line(std::to_string(dim), entry);
  line("original", sweep.baseline);
  if (!sweep.warnings.empty()) {
    out << "\nwarnings:\n";
    for (const auto& w : sweep.warnings) out << "  " << w << '\n';
  }
  return out.str();
}

std::string sweep_series_csv(const eval::SweepResult& sweep) {
  std::ostringstream out;
  out << "dim,mean_auc\n";
  for (const auto& [dim, entry] : sweep.by_dim) {
    if (const auto* r = std::get_if<eval::EvalResult>(&entry)) {
      out << dim << ',' << fixed(r->mean, 6) << '\n';
    }
  }
  return out.str();
}

nlohmann::json sweep_document(const eval::SweepResult& sweep, const nlohmann::json& run) {
  auto entry_json = [](const eval::SweepEntry& e) -> nlohmann::json {
    if (const auto* r = std::get_if<eval::EvalResult>(&e)) return result_to_json(*r);
    return {{"error", std::get<std::string>(e)}};
  };
  nlohmann::json dims = nlohmann::json::array();
  for (const auto& [dim, entry] : sweep.by_dim) {
    nlohmann::json j = entry_json(entry);
    j["dim"] = dim;
    dims.push_back(j);
  }
  return {{"format", "ppgad-sweep"},  {"version", kVersion},
          {"run", run},               {"dims", dims},
          {"baseline", entry_json(sweep.baseline)}, {"warnings", sweep.warnings}};
}

void write_sweep_report(const std::string& dir, const eval::SweepResult& sweep,
                        const nlohmann::json& run) {
  ensure_dir(dir);
  const std::filesystem::path base(dir);
  write_text(base / "sweep.txt", format_sweep_table(sweep));
  write_text(base / "sweep.json", sweep_document(sweep, run).dump(2) + "\n");
  write_text(base / "sweep.csv", sweep_series_csv(sweep));
}

}  // namespace ppgad::report
