#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "ppgad/eval.hpp"

namespace ppgad::report {

// Reports contain no timestamps or host details, so reruns with the same
// inputs produce byte-identical files.

nlohmann::json config_to_json(const eval::ScenarioConfig& config);
nlohmann::json result_to_json(const eval::EvalResult& result);

// One row per result: task, mode, detector, representation, mean +- std and
// the per-unit AUCs.
std::string format_table(const std::vector<eval::EvalResult>& results);

// {format, version, run, results: [...]}; `run` echoes the caller's settings.
nlohmann::json results_document(const std::vector<eval::EvalResult>& results,
                                const nlohmann::json& run);

// Writes report.txt and report.json into `dir` (created if needed).
void write_scenario_report(const std::string& dir, const std::vector<eval::EvalResult>& results,
                           const nlohmann::json& run);

std::string format_sweep_table(const eval::SweepResult& sweep);
// "dim,mean_auc" rows in ascending dim order; failed entries are omitted.
std::string sweep_series_csv(const eval::SweepResult& sweep);
nlohmann::json sweep_document(const eval::SweepResult& sweep, const nlohmann::json& run);

// Writes sweep.txt, sweep.json and sweep.csv into `dir`.
void write_sweep_report(const std::string& dir, const eval::SweepResult& sweep,
                        const nlohmann::json& run);

}  // namespace ppgad::report
