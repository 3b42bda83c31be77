#include "pistol/report.hpp"

#include <cstdio>
#include <functional>

#include "pistol/error.hpp"

namespace pistol {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

struct Column {
  std::string name;
  std::string key;
  int decimals;
  std::function<std::optional<double>(const MetricReport&)> get;
};

std::vector<Column> columns_for(std::span<const ReportRow> rows) {
  std::vector<Column> cols{
      {"Forget ROUGE1", "rouge1_forget", 3, [](const MetricReport& r) { return std::optional(r.rouge1_forget); }},
      {"Retain ROUGE1", "rouge1_retain", 3, [](const MetricReport& r) { return std::optional(r.rouge1_retain); }},
  };
  bool ranks = !rows.empty();
  for (const auto& row : rows) {
    for (const auto& r : row.runs) {
      ranks = ranks && r.mrr_forget && r.mrr_retain && r.thr_forget && r.thr_retain;
    }
  }
  if (ranks) {
    cols.push_back({"Forget MRR", "mrr_forget", 3, [](const MetricReport& r) { return r.mrr_forget; }});
    cols.push_back({"Retain MRR", "mrr_retain", 3, [](const MetricReport& r) { return r.mrr_retain; }});
    cols.push_back({"Forget THR", "thr_forget", 3, [](const MetricReport& r) { return r.thr_forget; }});
    cols.push_back({"Retain THR", "thr_retain", 3, [](const MetricReport& r) { return r.thr_retain; }});
  }
  cols.push_back({"Deviation Score", "deviation_score", 1,
                  [](const MetricReport& r) { return std::optional(r.deviation); }});
  return cols;
}

std::vector<double> values(const ReportRow& row, const Column& col) {
  std::vector<double> out;
  for (const auto& r : row.runs) {
    if (auto v = col.get(r)) out.push_back(*v);
  }
  return out;
}

std::size_t display_width(const std::string& s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80;
  return n;
}

std::string pad(const std::string& s, std::size_t width) {
  const std::size_t w = display_width(s);
  return w >= width ? s : s + std::string(width - w, ' ');
}

void check_rows(std::span<const ReportRow> rows) {
  if (rows.empty()) fail(ErrorKind::InvalidParameter, "report table has no rows");
  for (const auto& row : rows) {
    if (row.runs.empty()) fail(ErrorKind::InvalidParameter, "report row '" + row.label + "' has no runs");
  }
}

MetricReport run_report(const json& run) {
  if (run.is_object() && run.contains("report")) return report_from_json(run["report"]);
  return report_from_json(run);
}

}  // namespace

std::string format_mean_std(std::span<const double> vals, int decimals) {
  const sim::Summary s = sim::summarize(vals);
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.*f ± %.*f", decimals, s.mean, decimals, s.std);
  return buf;
}

std::string render_table(std::span<const ReportRow> rows) {
  check_rows(rows);
  const auto cols = columns_for(rows);
  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> header{"Method"};
  for (const auto& c : cols) header.push_back(c.name);
  header.push_back("Runs");
  cells.push_back(header);
  for (const auto& row : rows) {
    std::vector<std::string> line{row.label};
    for (const auto& c : cols) line.push_back(format_mean_std(values(row, c), c.decimals));
    line.push_back(std::to_string(row.runs.size()));
    cells.push_back(std::move(line));
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& line : cells) {
    for (std::size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], display_width(line[i]));
  }
  std::string out;
  for (const auto& line : cells) {
    std::string text;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (i) text += "  ";
      text += i + 1 == line.size() ? line[i] : pad(line[i], width[i]);
    }
    out += text + "\n";
  }
  return out;
}

ordered_json table_to_json(std::span<const ReportRow> rows) {
  check_rows(rows);
  const auto cols = columns_for(rows);
  ordered_json j;
  j["format"] = "pistol-report-table";
  j["version"] = 1;
  ordered_json names = ordered_json::array();
  for (const auto& c : cols) names.push_back(c.key);
  j["columns"] = std::move(names);
  ordered_json out = ordered_json::array();
  for (const auto& row : rows) {
    ordered_json r;
    r["label"] = row.label;
    r["runs"] = row.runs.size();
    if (row.learning_rate) r["learning_rate"] = *row.learning_rate;
    for (const auto& c : cols) {
      const auto v = values(row, c);
      const sim::Summary s = sim::summarize(v);
      r[c.key] = {{"mean", s.mean}, {"std", s.std}, {"median", s.median}};
    }
    out.push_back(std::move(r));
  }
  j["rows"] = std::move(out);
  return j;
}

std::vector<ReportRow> rows_from_json(const json& j, const std::string& fallback_label) {
  if (!j.is_object()) fail(ErrorKind::Parse, "report input must be a JSON object");
  std::vector<ReportRow> out;
  if (auto it = j.find("rows"); it != j.end()) {
    if (!it->is_array()) fail(ErrorKind::Parse, "\"rows\" must be an array");
    for (const auto& r : *it) {
      if (!r.is_object() || !r.contains("label") || !r["label"].is_string() || !r.contains("runs") ||
          !r["runs"].is_array()) {
        fail(ErrorKind::Parse, "each row needs a string \"label\" and a \"runs\" array");
      }
      ReportRow row;
      row.label = r["label"].get<std::string>();
      for (const auto& run : r["runs"]) row.runs.push_back(run_report(run));
      if (row.runs.empty()) fail(ErrorKind::Parse, "row '" + row.label + "' has no runs");
      if (auto lr = r.find("learning_rate"); lr != r.end()) {
        if (!lr->is_number()) fail(ErrorKind::Parse, "\"learning_rate\" must be a number");
        row.learning_rate = lr->get<double>();
      }
      out.push_back(std::move(row));
    }
    if (out.empty()) fail(ErrorKind::Parse, "\"rows\" is empty");
    return out;
  }
  if (!j.contains("rouge1_forget")) {
    fail(ErrorKind::Parse, "expected a report object or a summary with \"rows\"");
  }
  out.push_back({fallback_label, {report_from_json(j)}, std::nullopt});
  return out;
}

ordered_json sweep_to_json(const sim::SweepResult& sweep, const sim::SweepConfig& cfg) {
  ordered_json j;
  j["retain_threshold"] = cfg.retain_threshold;
  j["selected"] = sweep.selected ? ordered_json(*sweep.selected) : ordered_json(nullptr);
  j["chosen"] = sweep.chosen();
  ordered_json pts = ordered_json::array();
  for (const auto& p : sweep.points) {
    ordered_json e;
    e["learning_rate"] = p.learning_rate;
    e["mean_forget"] = p.mean_forget;
    e["min_retain"] = p.min_retain;
    e["admissible"] = p.admissible;
    pts.push_back(std::move(e));
  }
  j["points"] = std::move(pts);
  return j;
}

ordered_json train_config_to_json(const sim::TrainConfig& cfg) {
  ordered_json j;
  j["learning_rate"] = cfg.learning_rate;
  j["epochs"] = cfg.epochs;
  j["batch_size"] = cfg.batch_size;
  j["warmup_first_epoch"] = cfg.warmup_first_epoch;
  j["seed"] = cfg.seed;
  j["with_ranks"] = cfg.with_ranks;
  j["hit_cutoff"] = cfg.hit_cutoff;
  j["refusals"] = cfg.refusals;
  j["adam"] = {{"beta1", cfg.adam.beta1},
               {"beta2", cfg.adam.beta2},
               {"epsilon", cfg.adam.epsilon},
               {"weight_decay", cfg.adam.weight_decay}};
  return j;
}

ordered_json sim_result_to_json(const sim::SimResult& result) {
  ordered_json j;
  j["method"] = std::string(sim::to_string(result.method.kind));
  if (result.method.kind == sim::MethodKind::NPO) j["beta"] = result.method.beta;
  j["config"] = train_config_to_json(result.config);
  ordered_json traj = ordered_json::array();
  for (const auto& r : result.trajectory) traj.push_back(report_to_json(r, false));
  j["trajectory"] = std::move(traj);
  j["final"] = report_to_json(result.final.report);
  return j;
}

ordered_json simulation_summary_json(std::span<const sim::MethodRow> rows, const sim::SimulationConfig& cfg) {
  ordered_json j;
  j["format"] = "pistol-simulation";
  j["version"] = 1;
  j["forget_edges"] = std::vector<std::string>(cfg.forget_edges.begin(), cfg.forget_edges.end());
  j["seeds"] = cfg.seeds;
  j["base_seed"] = cfg.base_seed;
  ordered_json out = ordered_json::array();
  for (const auto& row : rows) {
    ordered_json r;
    r["label"] = std::string(sim::to_string(row.method.kind));
    r["learning_rate"] = row.learning_rate;
    if (row.method.kind == sim::MethodKind::NPO) r["beta"] = row.method.beta;
    if (row.sweep && cfg.sweep) r["sweep"] = sweep_to_json(*row.sweep, *cfg.sweep);
    ordered_json runs = ordered_json::array();
    for (const auto& run : row.runs) {
      ordered_json e;
      e["seed"] = run.seed;
      e["memorize_epochs"] = run.memorize_epochs;
      e["report"] = report_to_json(run.result.final.report, false);
      runs.push_back(std::move(e));
    }
    r["runs"] = std::move(runs);
    out.push_back(std::move(r));
  }
  j["rows"] = std::move(out);
  return j;
}

std::vector<ReportRow> rows_from_simulation(std::span<const sim::MethodRow> rows) {
  std::vector<ReportRow> out;
  for (const auto& row : rows) {
    ReportRow r{std::string(sim::to_string(row.method.kind)), {}, row.learning_rate};
    for (const auto& run : row.runs) r.runs.push_back(run.result.final.report);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace pistol
