#include "commands.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pistol/dataset.hpp"
#include "pistol/experiment.hpp"
#include "pistol/metrics.hpp"
#include "pistol/report.hpp"
#include "pistol/unlearn.hpp"

namespace pistol::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Parse: return kParse;
    case ErrorKind::InvalidParameter:
    case ErrorKind::NotFound: return kValidation;
    case ErrorKind::IncompleteInput: return kIncompleteInput;
    case ErrorKind::Convergence: return kConvergence;
    case ErrorKind::Divergence: return kDivergence;
    case ErrorKind::Io: return kIo;
  }
  return kInternal;
}

namespace {

const std::vector<std::string> kTopologies{"dataset1", "dataset2", "chain", "semi-dense", "complete", "custom"};
const std::vector<std::string> kMethods{"ga", "gd", "ukl", "dpo", "npo", "all"};
const std::vector<std::string> kFormats{"text", "json"};

struct CompileOptions {
  std::string topology;
  std::size_t nodes = 10;
  std::size_t semi_dense_edges = 21;
  std::uint64_t topology_seed = 0;
  std::string edge_list;
  std::uint64_t seed = 0;
  std::string output;
};

struct SplitOptions {
  std::string dataset;
  std::vector<std::string> edges;
  std::string sample_subgraph;
  std::uint64_t seed = 0;
  std::string forget_out;
  std::string retain_out;
};

struct EvalOptions {
  std::string forget;
  std::string retain;
  std::string generations;
  std::string ranks;
  std::int64_t hit_cutoff = kDefaultHitCutoff;
  std::string output;
  std::string format = "text";
};

struct SimulateOptions {
  std::string dataset;
  std::vector<std::string> edges;
  std::string forget;
  std::string retain;
  std::string method = "ga";
  std::size_t seeds = 1;
  std::uint64_t seed = 1;
  double lr = 0.01;
  bool lr_sweep = false;
  std::vector<double> lr_candidates = sim::SweepConfig{}.candidates;
  double retain_threshold = sim::SweepConfig{}.retain_threshold;
  std::size_t epochs = 20;
  std::size_t batch_size = 4;
  double beta = 0.1;
  bool no_ranks = false;
  std::int64_t hit_cutoff = kDefaultHitCutoff;
  std::size_t width = 64;
  double memorize_lr = 0.01;
  std::size_t memorize_batch = 16;
  std::size_t memorize_epochs = 600;
  std::string out_dir = "simulation";
  unsigned threads = 0;
};

struct ReportOptions {
  std::vector<std::string> inputs;
  std::vector<std::string> labels;
  std::string format = "text";
  std::string output;
};

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Parse, what + ": " + e.what());
  }
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create directory " + dir.string() + ": " + ec.message());
}

void ensure_parent(const fs::path& file) {
  if (file.has_parent_path()) ensure_dir(file.parent_path());
}

fs::path sibling(const fs::path& dataset, const std::string& suffix) {
  fs::path p = dataset;
  p.replace_extension();
  return fs::path(p.string() + suffix);
}

std::string join(const std::set<std::string>& xs) {
  std::string out;
  for (const auto& x : xs) out += (out.empty() ? "" : ",") + x;
  return out;
}

TopologySpec topology_from(const CompileOptions& o) {
  if (o.topology == "dataset1") return Dataset1Topology{};
  if (o.topology == "dataset2") return Dataset2Topology{o.semi_dense_edges, o.topology_seed};
  if (o.topology == "chain") return ChainTopology{o.nodes};
  if (o.topology == "complete") return CompleteTopology{o.nodes};
  if (o.topology == "semi-dense") return SemiDenseTopology{o.nodes, o.semi_dense_edges, o.topology_seed};
  if (o.edge_list.empty()) fail(ErrorKind::InvalidParameter, "--topology custom needs --edge-list");
  const std::string text = read_file(o.edge_list);
  parse_edge_list(text);
  return CustomTopology{text};
}

void cmd_compile(const CompileOptions& o, std::ostream& out) {
  const TopologySpec spec = topology_from(o);
  build(spec);
  const CompiledDataset ds = compile(spec, o.seed);
  const fs::path path(o.output);
  ensure_parent(path);
  export_dataset(ds, path);
  out << "wrote " << path.string() << " (" << ds.graph.node_count() << " nodes, " << ds.graph.edge_count()
      << " edges, " << ds.qa.size() << " QA pairs, digest fnv1a64:" << digest_hex(read_file(path)) << ")\n";
  out << "wrote " << manifest_path(path).string() << "\n";
}

void cmd_split(const SplitOptions& o, std::ostream& out) {
  const CompiledDataset ds = import_dataset(o.dataset);
  std::set<std::string> edges(o.edges.begin(), o.edges.end());
  if (!o.sample_subgraph.empty()) {
    const NodeRange range = parse_node_range(o.sample_subgraph);
    if (!ds.has_topology()) {
      fail(ErrorKind::InvalidParameter, "--sample-subgraph needs the dataset manifest (graph topology)");
    }
    Stream rng(derive_seed(o.seed, "split-sample"));
    edges = {sample_forget_edge(ds.graph, range, rng)};
  }
  const ForgetSplit split = split_forget(ds, edges);
  const fs::path forget = o.forget_out.empty() ? sibling(o.dataset, ".forget.jsonl") : fs::path(o.forget_out);
  const fs::path retain = o.retain_out.empty() ? sibling(o.dataset, ".retain.jsonl") : fs::path(o.retain_out);
  ensure_parent(forget);
  ensure_parent(retain);
  export_split(split, forget, retain);
  out << "forget edges: " << join(split.forget_edges) << "\n";
  out << "forget: " << split.forget.size() << " QA pairs -> " << forget.string() << "\n";
  out << "retain: " << split.retain.size() << " QA pairs -> " << retain.string() << "\n";
}

void cmd_eval(const EvalOptions& o, std::ostream& out) {
  if (o.hit_cutoff < 1) fail(ErrorKind::InvalidParameter, "--hit-cutoff must be at least 1");
  const ForgetSplit split = import_split(o.forget, o.retain);
  const auto gens = parse_generations_jsonl(read_file(o.generations));
  std::vector<RankRecord> ranks;
  if (!o.ranks.empty()) ranks = parse_ranks_jsonl(read_file(o.ranks));
  std::optional<std::span<const RankRecord>> rs;
  if (!o.ranks.empty()) rs = std::span<const RankRecord>(ranks);
  const MetricReport report = aggregate(split, gens, rs, o.hit_cutoff);
  const std::string json_text = report_to_json(report).dump(2) + "\n";
  if (!o.output.empty()) {
    ensure_parent(o.output);
    write_file(o.output, json_text);
  }
  out << (o.format == "json" ? json_text : format_report_text(report));
}

std::vector<sim::UnlearnMethod> methods_from(const SimulateOptions& o) {
  if (!(o.beta > 0.0)) fail(ErrorKind::InvalidParameter, "--beta must be positive");
  std::vector<sim::UnlearnMethod> out;
  if (o.method == "all") {
    for (auto k : sim::all_methods()) out.push_back({k, o.beta});
  } else {
    out.push_back({sim::parse_method(o.method), o.beta});
  }
  return out;
}

void validate(const SimulateOptions& o) {
  if (o.seeds == 0) fail(ErrorKind::InvalidParameter, "--seeds must be at least 1");
  if (o.epochs == 0) fail(ErrorKind::InvalidParameter, "--epochs must be at least 1");
  if (o.batch_size == 0) fail(ErrorKind::InvalidParameter, "--batch-size must be at least 1");
  if (!(o.lr > 0.0)) fail(ErrorKind::InvalidParameter, "--lr must be positive");
  if (o.hit_cutoff < 1) fail(ErrorKind::InvalidParameter, "--hit-cutoff must be at least 1");
  if (o.width == 0) fail(ErrorKind::InvalidParameter, "--width must be at least 1");
  if (o.lr_candidates.empty()) fail(ErrorKind::InvalidParameter, "--lr-candidates is empty");
  for (double lr : o.lr_candidates) {
    if (!(lr > 0.0)) fail(ErrorKind::InvalidParameter, "--lr-candidates must be positive");
  }
  if (!(o.retain_threshold >= 0.0 && o.retain_threshold <= 1.0)) {
    fail(ErrorKind::InvalidParameter, "--retain-threshold must lie in [0, 1]");
  }
  if (o.edges.empty() == o.forget.empty()) {
    fail(ErrorKind::InvalidParameter, "give either --edges or --forget/--retain split files");
  }
  if (o.forget.empty() != o.retain.empty()) {
    fail(ErrorKind::InvalidParameter, "--forget and --retain must be given together");
  }
}

std::set<std::string> split_edges(const CompiledDataset& ds, const SimulateOptions& o) {
  if (!o.edges.empty()) return {o.edges.begin(), o.edges.end()};
  const ForgetSplit given = import_split(o.forget, o.retain);
  const ForgetSplit expected = split_forget(ds, given.forget_edges);
  const auto ids = [](const std::vector<QAPair>& qa) {
    std::set<std::pair<std::string, int>> out;
    for (const auto& q : qa) out.insert({q.edge, q.slot});
    return out;
  };
  if (ids(given.forget) != ids(expected.forget) || ids(given.retain) != ids(expected.retain)) {
    fail(ErrorKind::InvalidParameter, "split files do not partition the dataset by edges " + join(given.forget_edges));
  }
  return given.forget_edges;
}

void cmd_simulate(const SimulateOptions& o, std::ostream& out) {
  validate(o);
  const auto methods = methods_from(o);
  const CompiledDataset ds = import_dataset(o.dataset);
  if (!ds.has_topology()) {
    fail(ErrorKind::InvalidParameter, "simulate needs the dataset manifest (graph topology) next to " + o.dataset);
  }
  sim::SimulationConfig cfg;
  cfg.forget_edges = split_edges(ds, o);
  split_forget(ds, cfg.forget_edges);
  cfg.methods = methods;
  cfg.seeds = o.seeds;
  cfg.base_seed = o.seed;
  cfg.learning_rate = o.lr;
  if (o.lr_sweep) cfg.sweep = sim::SweepConfig{o.lr_candidates, o.retain_threshold};
  cfg.train.epochs = o.epochs;
  cfg.train.batch_size = o.batch_size;
  cfg.train.with_ranks = !o.no_ranks;
  cfg.train.hit_cutoff = o.hit_cutoff;
  cfg.memorize.width = o.width;
  cfg.memorize.learning_rate = o.memorize_lr;
  cfg.memorize.batch_size = o.memorize_batch;
  cfg.memorize.max_epochs = o.memorize_epochs;
  cfg.threads = o.threads;

  const auto rows = sim::simulate(ds, cfg);
  const fs::path dir(o.out_dir);
  ensure_dir(dir);
  for (const auto& row : rows) {
    std::string name(sim::to_string(row.method.kind));
    for (auto& c : name) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    for (const auto& run : row.runs) {
      const std::string stem = name + "-seed" + std::to_string(run.seed);
      const auto& res = run.result;
      write_file(dir / (stem + ".generations.jsonl"), format_generations_jsonl(res.final.generations));
      if (!res.final.ranks.empty()) {
        write_file(dir / (stem + ".ranks.jsonl"), format_ranks_jsonl(res.final.ranks));
      }
      write_file(dir / (stem + ".report.json"), report_to_json(res.final.report).dump(2) + "\n");
      write_file(dir / (stem + ".result.json"), sim_result_to_json(res).dump(2) + "\n");
    }
  }
  const auto table_rows = rows_from_simulation(rows);
  const std::string table = render_table(table_rows);
  write_file(dir / "summary.json", simulation_summary_json(rows, cfg).dump(2) + "\n");
  write_file(dir / "table.txt", table);
  out << "forget edges: " << join(cfg.forget_edges) << "; seeds " << cfg.base_seed << ".."
      << cfg.base_seed + cfg.seeds - 1 << "\n";
  for (const auto& row : rows) {
    out << sim::to_string(row.method.kind) << ": lr " << row.learning_rate;
    if (row.sweep) out << (row.sweep->selected ? " (sweep selected)" : " (sweep: no admissible rate, smallest used)");
    out << "\n";
  }
  out << table;
  out << "wrote " << (dir / "summary.json").string() << "\n";
}

void cmd_report(const ReportOptions& o, std::ostream& out) {
  if (!o.labels.empty() && o.labels.size() != o.inputs.size()) {
    fail(ErrorKind::InvalidParameter, "--label must be given once per input or not at all");
  }
  std::vector<ReportRow> rows;
  for (std::size_t i = 0; i < o.inputs.size(); ++i) {
    const fs::path p(o.inputs[i]);
    const std::string fallback = o.labels.empty() ? p.stem().string() : o.labels[i];
    auto got = rows_from_json(parse_json(read_file(p), p.string()), fallback);
    if (!o.labels.empty() && got.size() == 1) got.front().label = o.labels[i];
    for (auto& r : got) rows.push_back(std::move(r));
  }
  const std::string text = o.format == "json" ? table_to_json(rows).dump(2) + "\n" : render_table(rows);
  if (o.output.empty()) {
    out << text;
  } else {
    ensure_parent(o.output);
    write_file(o.output, text);
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Structural unlearning dataset compiler, metrics and toy simulator"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML file with one [command] section per subcommand");
  app.allow_config_extras(CLI::config_extras_mode::error);
  const std::string seed_help = "RNG seed (default from $PISTOL_SEED)";

  CompileOptions co;
  auto* compile = app.add_subcommand("compile", "Compile a topology into a QA dataset plus manifest");
  compile->add_option("--topology", co.topology, "Graph topology")->required()->check(CLI::IsMember(kTopologies));
  compile->add_option("--nodes", co.nodes, "Node count for chain, complete and semi-dense")->check(CLI::PositiveNumber);
  compile->add_option("--semi-dense-edges", co.semi_dense_edges, "Edge count of the semi-dense (sub-)graph");
  compile->add_option("--topology-seed", co.topology_seed, "Seed for the semi-dense extra edges");
  compile->add_option("--edge-list", co.edge_list, "Edge-list file for --topology custom");
  compile->add_option("--seed", co.seed, seed_help)->envname("PISTOL_SEED");
  compile->add_option("-o,--output", co.output, "Dataset JSONL path")->required();

  SplitOptions so;
  auto* split = app.add_subcommand("split", "Write forget/retain files for a set of edges");
  split->add_option("dataset", so.dataset, "Dataset JSONL path")->required();
  auto* edges = split->add_option("--edges", so.edges, "Forget edge labels")->delimiter(',');
  auto* sample = split->add_option("--sample-subgraph", so.sample_subgraph, "Sample one edge within node range lo-hi");
  edges->excludes(sample);
  split->add_option("--seed", so.seed, seed_help)->envname("PISTOL_SEED");
  split->add_option("--forget-out", so.forget_out, "Forget file (default <dataset>.forget.jsonl)");
  split->add_option("--retain-out", so.retain_out, "Retain file (default <dataset>.retain.jsonl)");

  EvalOptions eo;
  auto* eval = app.add_subcommand("eval", "Score generations (and optional ranks) against a split");
  eval->add_option("--forget", eo.forget, "Forget split file")->required();
  eval->add_option("--retain", eo.retain, "Retain split file")->required();
  eval->add_option("--generations", eo.generations, "Generations JSONL")->required();
  eval->add_option("--ranks", eo.ranks, "Target-rank JSONL");
  eval->add_option("--hit-cutoff", eo.hit_cutoff, "Top-m cutoff for THR");
  eval->add_option("-o,--output", eo.output, "Report JSON path");
  eval->add_option("--format", eo.format, "Stdout format")->check(CLI::IsMember(kFormats));

  SimulateOptions mo;
  auto* simulate = app.add_subcommand("simulate", "Memorize with the toy model, unlearn, and report");
  simulate->add_option("dataset", mo.dataset, "Dataset JSONL path (manifest required)")->required();
  simulate->add_option("--edges", mo.edges, "Forget edge labels")->delimiter(',');
  simulate->add_option("--forget", mo.forget, "Forget split file (alternative to --edges)");
  simulate->add_option("--retain", mo.retain, "Retain split file");
  simulate->add_option("--method", mo.method, "Unlearning method")->check(CLI::IsMember(kMethods, CLI::ignore_case));
  simulate->add_option("--seeds", mo.seeds, "Number of seeds");
  simulate->add_option("--seed", mo.seed, "First seed (default from $PISTOL_SEED)")->envname("PISTOL_SEED");
  simulate->add_option("--lr", mo.lr, "Unlearning learning rate");
  simulate->add_flag("--lr-sweep", mo.lr_sweep, "Select the rate by sweep on the first seed");
  simulate->add_option("--lr-candidates", mo.lr_candidates, "Sweep candidates")->delimiter(',');
  simulate->add_option("--retain-threshold", mo.retain_threshold, "Minimum retain ROUGE1 for a sweep candidate");
  simulate->add_option("--epochs", mo.epochs, "Unlearning epochs");
  simulate->add_option("--batch-size", mo.batch_size, "Forget samples per step");
  simulate->add_option("--beta", mo.beta, "NPO beta");
  simulate->add_flag("--no-ranks", mo.no_ranks, "Skip MRR/THR");
  simulate->add_option("--hit-cutoff", mo.hit_cutoff, "Top-m cutoff for THR");
  simulate->add_option("--width", mo.width, "Toy model embedding width");
  simulate->add_option("--memorize-lr", mo.memorize_lr, "Memorization learning rate");
  simulate->add_option("--memorize-batch", mo.memorize_batch, "Memorization batch size");
  simulate->add_option("--memorize-epochs", mo.memorize_epochs, "Memorization epoch cap");
  simulate->add_option("--out-dir", mo.out_dir, "Output directory");
  simulate->add_option("--threads", mo.threads, "Worker threads (0 = hardware)");

  ReportOptions ro;
  auto* report = app.add_subcommand("report", "Render report or summary JSON files as a table");
  report->add_option("inputs", ro.inputs, "Report or simulation summary JSON files")->required();
  report->add_option("--label", ro.labels, "Row label per input");
  report->add_option("--format", ro.format, "Output format")->check(CLI::IsMember(kFormats));
  report->add_option("-o,--output", ro.output, "Write to file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (*compile) cmd_compile(co, out);
    if (*split) cmd_split(so, out);
    if (*eval) cmd_eval(eo, out);
    if (*simulate) cmd_simulate(mo, out);
    if (*report) cmd_report(ro, out);
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kOk;
}

}  // namespace pistol::cli
