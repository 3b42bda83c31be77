// Acceptance checks. `pistol_acceptance <id>` runs one criterion; without
// arguments every criterion runs. Prints one PASS/FAIL line per criterion and
// exits non-zero when any selected criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "pistol/dataset.hpp"
#include "pistol/error.hpp"
#include "pistol/experiment.hpp"
#include "pistol/metrics.hpp"
#include "pistol/toy_model.hpp"
#include "pistol/unlearn.hpp"

using namespace pistol;
using namespace pistol::sim;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x, int decimals = 3) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(decimals);
  s << x;
  return s.str();
}

// ---- 1: DS arithmetic ------------------------------------------------------

double oracle_ds(double f, double r) { return 100.0 * std::sqrt(f * f + (1.0 - r) * (1.0 - r)); }

Outcome criterion_1a() {
  const double triples[3][3] = {{0.267, 0.805, 33.1}, {0.521, 0.845, 54.4}, {0.150, 0.878, 19.3}};
  double worst = 0.0;
  for (const auto& t : triples) {
    const double ds = deviation_score(t[0], t[1]);
    if (std::abs(ds - oracle_ds(t[0], t[1])) > 1e-12) return {false, "disagrees with oracle"};
    worst = std::max(worst, std::abs(ds - t[2]));
  }
  return {worst <= 0.05, "3 named triples, max |DS - printed| = " + fmt(worst)};
}

Outcome criterion_1b() {
  std::ifstream in(fs::path(PISTOL_TEST_SOURCE_DIR) / "fixtures" / "ds_triples.tsv");
  if (!in) return {false, "ds_triples.tsv missing"};
  std::string line;
  std::size_t total = 0;
  std::vector<std::string> misses;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    std::string group, data, method, model, f, r, ds;
    std::getline(row, group, '\t');
    std::getline(row, data, '\t');
    std::getline(row, method, '\t');
    std::getline(row, model, '\t');
    std::getline(row, f, '\t');
    std::getline(row, r, '\t');
    std::getline(row, ds, '\t');
    ++total;
    const double got = deviation_score(std::stod(f), std::stod(r));
    if (std::abs(got - std::stod(ds)) > 0.05) {
      misses.push_back(data + "/" + method + "/" + model + " " + ds + " vs " + fmt(got, 2));
    }
  }
  std::string detail = std::to_string(total - misses.size()) + "/" + std::to_string(total) + " triples within 0.05";
  if (!misses.empty()) {
    detail += "; mismatches:";
    for (const auto& m : misses) detail += " [" + m + "]";
  }
  return {total > 0 && misses.empty(), detail};
}

// ---- 2: topology -----------------------------------------------------------

Outcome criterion_2() {
  const KnowledgeGraph g = build_dataset1();
  const bool ok = g.node_count() == 24 && g.edge_count() == 20 && g.degree("A") == 8 && g.degree("B") == 7 &&
                  edge_interconnectivity(g, "AB") == 14 && edge_interconnectivity(g, "AC") == 8 &&
                  build_chain(10).edge_count() == 9 && build_complete(10).edge_count() == 45;
  return {ok, "dataset1 " + std::to_string(g.node_count()) + " nodes/" + std::to_string(g.edge_count()) +
                  " edges, deg(A)=" + std::to_string(g.degree("A")) + " deg(B)=" + std::to_string(g.degree("B")) +
                  ", ic(AB)=" + std::to_string(edge_interconnectivity(g, "AB")) +
                  " ic(AC)=" + std::to_string(edge_interconnectivity(g, "AC")) +
                  ", chain(10)=" + std::to_string(build_chain(10).edge_count()) +
                  " complete(10)=" + std::to_string(build_complete(10).edge_count())};
}

// ---- 3: compilation --------------------------------------------------------

Outcome criterion_3() {
  const CompiledDataset ds = compile(Dataset1Topology{}, 1);
  std::size_t regenerated = 0;
  for (const auto& q : ds.qa) {
    const auto& c = ds.contracts[*ds.graph.find_edge(q.edge)];
    const ContractRecord again = fill_contract(ds.graph.edge(q.edge), c.parties, ds.seed);
    if (again == c && q.answer == again.attributes.at(static_cast<std::size_t>(q.slot - 1)).value) ++regenerated;
  }
  const std::string a = digest_hex(format_qa_jsonl(ds.qa));
  const std::string b = digest_hex(format_qa_jsonl(compile(Dataset1Topology{}, 1).qa));
  const bool ok = ds.qa.size() == 400 && regenerated == ds.qa.size() && a == b;
  return {ok, std::to_string(ds.qa.size()) + " QA pairs, " + std::to_string(regenerated) +
                  " answers regenerated, digest " + a + (a == b ? " stable" : " unstable")};
}

// ---- 4: metric oracles -----------------------------------------------------

double brute_mrr(const std::vector<std::int64_t>& ranks) {
  double s = 0;
  for (auto r : ranks) s += 1.0 / static_cast<double>(r);
  return s / static_cast<double>(ranks.size());
}

double brute_thr(const std::vector<std::int64_t>& ranks, std::int64_t m) {
  std::size_t hits = 0;
  for (auto r : ranks) hits += r <= m ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

Outcome criterion_4() {
  std::mt19937_64 rng(1000);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<std::int64_t> ranks(1 + rng() % 16);
    for (auto& r : ranks) r = 1 + static_cast<std::int64_t>(rng() % 500);
    const std::int64_t m = 1 + static_cast<std::int64_t>(rng() % 200);
    worst = std::max({worst, std::abs(mrr(ranks) - brute_mrr(ranks)), std::abs(thr(ranks, m) - brute_thr(ranks, m))});
  }
  // Property suite: identity, disjoint, subset and superset of the reference.
  std::size_t failures = 0;
  const std::vector<std::string> words{"apple", "seller", "42", "boston", "road", "units", "march"};
  for (int i = 0; i < 200; ++i) {
    std::vector<std::string> ref;
    for (std::size_t k = 0; k < 1 + rng() % 5; ++k) ref.push_back(words[rng() % words.size()]);
    std::string ref_text, sub, super;
    for (std::size_t k = 0; k < ref.size(); ++k) {
      ref_text += (k ? " " : "") + ref[k];
      if (k % 2 == 0) sub += ref[k] + " ";
    }
    super = "noise " + ref_text + " extra";
    failures += rouge1_recall(ref_text, ref_text) == 1.0 ? 0 : 1;
    failures += rouge1_recall("zzz qqq", ref_text) == 0.0 ? 0 : 1;
    failures += rouge1_recall(super, ref_text) == 1.0 ? 0 : 1;
    const double s = rouge1_recall(sub, ref_text);
    failures += (s > 0.0 && s <= 1.0) ? 0 : 1;
  }
  return {worst <= 1e-12 && failures == 0,
          "1000 rank records, max |diff| = " + fmt(worst, 15) + "; ROUGE property failures " + std::to_string(failures)};
}

// ---- 5: gradients ----------------------------------------------------------

Outcome criterion_5() {
  const CompiledDataset ds = compile(ChainTopology{3}, 1);
  const ForgetSplit split = split_forget(ds, {"01"});
  double worst = 0.0;
  std::size_t min_coords = SIZE_MAX;
  std::string where;
  for (auto kind : all_methods()) {
    for (std::uint64_t point = 0; point < 3; ++point) {
      ToyMemorizer m = ToyMemorizer::for_dataset(ds, default_refusals(), 8);
      m.initialize(500 + point, 0.5);
      Parameters reference = m.params();
      std::mt19937_64 rng(900 + point);
      std::normal_distribution<double> d(0.0, 0.05);
      for (double& x : reference.flat()) x += d(rng);
      const auto f = std::span<const QAPair>(split.forget).first(4);
      const auto forget = m.encode(f);
      const auto retain = m.encode(std::span<const QAPair>(split.retain).first(4));
      const auto refusal = refusal_examples(m, f, default_refusals());
      std::vector<double> ref_lp;
      for (const auto& ex : forget) ref_lp.push_back(sequence_logprob(reference, ex));
      const UnlearnMethod method{kind, 0.1};
      GradCheckOptions opts;
      opts.samples = 256;
      opts.seed = point;
      const GradCheckReport r = grad_check(
          m.params(),
          [&](const Parameters& p) { return unlearning_objective(p, reference, method, forget, retain, refusal, ref_lp); },
          opts);
      min_coords = std::min(min_coords, r.coordinates);
      if (r.max_relative_error > worst) {
        worst = r.max_relative_error;
        where = std::string(to_string(kind)) + " point " + std::to_string(point);
      }
    }
  }
  std::ostringstream s;
  s << "5 losses x 3 points, >= " << min_coords << " coordinates each, max relative error " << worst << " (" << where
    << ")";
  return {worst < 1e-4 && min_coords >= 256, s.str()};
}

// ---- 6-8: trends -----------------------------------------------------------

ProtocolConfig protocol() {
  ProtocolConfig cfg;
  cfg.seeds = 5;
  cfg.base_seed = 1;
  cfg.method = {MethodKind::GA};
  return cfg;
}

Outcome trend(const TrendResult& t) { return {t.holds, format_trend(t)}; }

Outcome criterion_6() { return trend(interconnectivity_trend(protocol())); }
Outcome criterion_7() { return trend(density_trend(protocol())); }
Outcome criterion_8() { return trend(domain_trend(protocol())); }

// ---- 9: coupling -----------------------------------------------------------

Outcome criterion_9() {
  const CompiledDataset ds = compile(Dataset1Topology{}, 1);
  MemorizeConfig mc;
  mc.seed = 1;
  const MemorizedModel base = memorize(ds, mc);
  ToyMemorizer m = base.model;
  const ForgetSplit split = split_forget(ds, {"AB"});
  TrainConfig tc;
  tc.learning_rate = 5e-3;
  tc.seed = 1;
  tc.with_ranks = false;
  tc.evaluate_each_epoch = false;
  run_unlearning(m, base.reference, split, {MethodKind::GA}, tc);
  const std::size_t w = m.shape().width;
  std::size_t identical = 0, outside = 0;
  bool endpoints_moved = true;
  for (std::size_t n = 0; n < ds.graph.node_count(); ++n) {
    const std::size_t off = m.params().entity_offset(n);
    bool same = true;
    for (std::size_t k = 0; k < w; ++k) {
      same = same && std::bit_cast<std::uint64_t>(m.params().flat()[off + k]) ==
                         std::bit_cast<std::uint64_t>(base.reference.flat()[off + k]);
    }
    const std::string& label = ds.graph.node(n).id.label;
    if (label == "A" || label == "B") {
      endpoints_moved = endpoints_moved && !same;
    } else {
      ++outside;
      identical += same ? 1 : 0;
    }
  }
  return {identical == outside && endpoints_moved,
          std::to_string(identical) + "/" + std::to_string(outside) + " outside entities bit-identical; A,B " +
              (endpoints_moved ? "moved" : "did not move")};
}

// ---- 10: round trips and exit codes ---------------------------------------

int run_cli(const std::string& args) {
  const char* cli = std::getenv("PISTOL_CLI_PATH");
  if (!cli) return -1;
  const std::string cmd = std::string("\"") + cli + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

bool throws_with_line(const std::function<void()>& f, const std::string& needle) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind() == ErrorKind::Parse && std::string(e.what()).find(needle) != std::string::npos;
  }
  return false;
}

Outcome criterion_10() {
  const fs::path dir = fs::temp_directory_path() / ("pistol-acceptance-" + std::to_string(std::random_device{}()));
  fs::create_directories(dir);
  std::vector<std::string> failed;
  const auto check = [&](bool ok, const std::string& what) {
    if (!ok) failed.push_back(what);
  };
  try {
    const CompiledDataset ds = compile(Dataset1Topology{}, 3);
    export_dataset(ds, dir / "d.jsonl");
    check(import_dataset(dir / "d.jsonl") == ds, "dataset");
    const ForgetSplit split = split_forget(ds, {"AB"});
    export_split(split, dir / "f.jsonl", dir / "r.jsonl");
    const ForgetSplit back = import_split(dir / "f.jsonl", dir / "r.jsonl");
    check(back.forget == split.forget && back.retain == split.retain, "split");
    check(parse_edge_list(format_edge_list(ds.graph)) == ds.graph, "edge list");
    check(topology_from_json(topology_to_json(Dataset2Topology{21, 0})) == TopologySpec{Dataset2Topology{21, 0}},
          "topology");

    std::vector<GenerationRecord> gens;
    std::vector<RankRecord> ranks;
    for (const auto& q : split.forget) {
      gens.push_back({{q.edge, q.slot}, "x " + q.answer});
      ranks.push_back({{q.edge, q.slot}, {1, 3, 120}});
    }
    for (const auto& q : split.retain) {
      gens.push_back({{q.edge, q.slot}, q.answer});
      ranks.push_back({{q.edge, q.slot}, {2}});
    }
    const std::string gtext = format_generations_jsonl(gens);
    check(format_generations_jsonl(parse_generations_jsonl(gtext)) == gtext, "generations");
    const std::string rtext = format_ranks_jsonl(ranks);
    check(format_ranks_jsonl(parse_ranks_jsonl(rtext)) == rtext, "ranks");
    const MetricReport rep = aggregate(split, gens, std::span<const RankRecord>(ranks));
    check(report_to_json(report_from_json(report_to_json(rep))) == report_to_json(rep), "report");

    ToyMemorizer m = ToyMemorizer::for_dataset(ds, default_refusals(), 8);
    m.initialize(1, 0.3);
    const std::string ckpt = format_checkpoint(m);
    check(format_checkpoint(parse_checkpoint(ckpt)) == ckpt && parse_checkpoint(ckpt).params() == m.params(),
          "checkpoint");

    // Malformed records name their line.
    std::string bad_gen = gtext.substr(0, gtext.find('\n') + 1) + "{broken\n";
    check(throws_with_line([&] { parse_generations_jsonl(bad_gen); }, "line 2"), "generation line number");
    std::string bad_rank = rtext.substr(0, rtext.find('\n') + 1) + rtext.substr(0, rtext.find('\n') + 1) + "[]\n";
    check(throws_with_line([&] { parse_ranks_jsonl(bad_rank); }, "line 3"), "rank line number");
    std::string qa = format_qa_jsonl(ds.qa);
    std::string bad_qa = qa.substr(0, qa.find('\n') + 1) + "{\"edge\":1}\n";
    check(throws_with_line([&] { parse_qa_jsonl(bad_qa, false); }, "line 2"), "qa line number");
    check(throws_with_line([&] { parse_edge_list("# pistol-edges 1\nnode A company\nedge A\n"); }, "line 3"),
          "edge-list line number");

    // Exit codes through the installed binary.
    const std::string d = "\"" + (dir / "d.jsonl").string() + "\"";
    const std::string fr =
        " --forget \"" + (dir / "f.jsonl").string() + "\" --retain \"" + (dir / "r.jsonl").string() + "\"";
    write_file(dir / "bad.jsonl", bad_gen);
    gens.pop_back();
    write_file(dir / "short.jsonl", format_generations_jsonl(gens));
    std::map<std::string, int> codes{
        {"ok", run_cli("split " + d + " --edges AB --forget-out \"" + (dir / "f2.jsonl").string() +
                       "\" --retain-out \"" + (dir / "r2.jsonl").string() + "\"")},
        {"usage", run_cli("compile --topology torus -o x")},
        {"parse", run_cli("eval" + fr + " --generations \"" + (dir / "bad.jsonl").string() + "\"")},
        {"validation", run_cli("split " + d + " --edges ZZ")},
        {"incomplete", run_cli("eval" + fr + " --generations \"" + (dir / "short.jsonl").string() + "\"")},
        {"io", run_cli("split \"" + (dir / "missing.jsonl").string() + "\" --edges AB")},
    };
    std::set<int> distinct;
    std::string listing;
    for (const auto& [k, v] : codes) {
      distinct.insert(v);
      listing += " " + k + "=" + std::to_string(v);
    }
    check(codes["ok"] == 0 && distinct.size() == codes.size() && !distinct.contains(-1), "exit codes" + listing);
    fs::remove_all(dir);
    return {failed.empty(), failed.empty() ? "8 formats round-trip, 4 line-numbered errors, exit codes" + listing
                                           : "failed: " + [&] {
                                               std::string s;
                                               for (const auto& f : failed) s += "[" + f + "] ";
                                               return s;
                                             }()};
  } catch (const std::exception& e) {
    fs::remove_all(dir);
    return {false, std::string("exception: ") + e.what()};
  }
}

const std::vector<std::pair<std::string, std::function<Outcome()>>> kCriteria{
    {"1a", criterion_1a}, {"1b", criterion_1b}, {"2", criterion_2}, {"3", criterion_3},
    {"4", criterion_4},   {"5", criterion_5},   {"6", criterion_6}, {"7", criterion_7},
    {"8", criterion_8},   {"9", criterion_9},   {"10", criterion_10}};

}  // namespace

int main(int argc, char** argv) {
  std::set<std::string> wanted(argv + 1, argv + argc);
  bool all_pass = true;
  std::size_t ran = 0;
  for (const auto& [id, fn] : kCriteria) {
    if (!wanted.empty() && !wanted.contains(id)) continue;
    ++ran;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << "criterion " << id << ": " << (o.pass ? "PASS" : "FAIL") << " (" << fmt(secs, 2) << " s) " << o.detail
              << std::endl;
    all_pass = all_pass && o.pass;
  }
  if (ran == 0) {
    std::cerr << "unknown criterion id\n";
    return 2;
  }
  return all_pass ? 0 : 1;
}
