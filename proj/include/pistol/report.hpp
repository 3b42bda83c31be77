#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pistol/experiment.hpp"
#include "pistol/metrics.hpp"

namespace pistol {

/// One table row: a label and the reports of its runs (one per seed).
struct ReportRow {
  std::string label;
  std::vector<MetricReport> runs;
  std::optional<double> learning_rate;
};

/// "0.521 ± 0.050"; sample std, 0 for a single run.
std::string format_mean_std(std::span<const double> values, int decimals);

/// Rows of Forget ROUGE1 / Retain ROUGE1 / Deviation Score cells, plus MRR
/// and THR columns when every run carries them.
std::string render_table(std::span<const ReportRow> rows);
nlohmann::ordered_json table_to_json(std::span<const ReportRow> rows);

/// Accepts a single report object (one row labelled `fallback_label`) or a
/// simulation summary with a "rows" array. Throws Parse otherwise.
std::vector<ReportRow> rows_from_json(const nlohmann::json& j, const std::string& fallback_label);

nlohmann::ordered_json sweep_to_json(const sim::SweepResult& sweep, const sim::SweepConfig& cfg);
nlohmann::ordered_json train_config_to_json(const sim::TrainConfig& cfg);
/// Per-epoch trajectory (scalar metrics only) and the final report.
nlohmann::ordered_json sim_result_to_json(const sim::SimResult& result);

/// Summary written by `simulate`: one row per method with per-seed reports.
nlohmann::ordered_json simulation_summary_json(std::span<const sim::MethodRow> rows,
                                               const sim::SimulationConfig& cfg);
std::vector<ReportRow> rows_from_simulation(std::span<const sim::MethodRow> rows);

}  // namespace pistol
