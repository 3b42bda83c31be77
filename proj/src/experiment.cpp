#include "pistol/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "pistol/error.hpp"

namespace pistol::sim {
namespace {

struct Prepared {
  CompiledDataset ds;
  MemorizedModel model;
};

SimResult unlearn_full(const MemorizedModel& base, const ForgetSplit& split,
                       const UnlearnMethod& method, TrainConfig cfg, double lr) {
  ToyMemorizer model = base.model;
  cfg.learning_rate = lr;
  return run_unlearning(model, base.reference, split, method, cfg);
}

Evaluation unlearn_copy(const MemorizedModel& base, const ForgetSplit& split,
                        const UnlearnMethod& method, TrainConfig cfg, double lr) {
  return unlearn_full(base, split, method, std::move(cfg), lr).final;
}

TrainConfig final_only(TrainConfig cfg) {
  cfg.evaluate_each_epoch = false;
  cfg.with_ranks = false;
  return cfg;
}

std::vector<Prepared> prepare(const ProtocolConfig& cfg,
                              const std::function<TopologySpec(std::uint64_t)>& spec_for) {
  if (cfg.seeds == 0) fail(ErrorKind::InvalidParameter, "at least one seed is required");
  return parallel_map<Prepared>(cfg.seeds, cfg.threads, [&](std::size_t k) {
    const std::uint64_t seed = cfg.base_seed + k;
    Prepared p{compile(spec_for(seed), seed), {}};
    MemorizeConfig mc = cfg.memorize;
    mc.seed = seed;
    p.model = memorize(p.ds, mc);
    return p;
  });
}

std::string fmt(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

}  // namespace

Summary summarize(std::span<const double> values) {
  if (values.empty()) fail(ErrorKind::InvalidParameter, "cannot summarize an empty sample");
  Summary s;
  s.count = values.size();
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.count);
  if (s.count > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(s.count - 1));
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = s.count / 2;
  s.median = s.count % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  return s;
}

double SweepResult::chosen() const {
  if (selected) return *selected;
  if (points.empty()) fail(ErrorKind::InvalidParameter, "empty learning-rate sweep");
  double lo = points.front().learning_rate;
  for (const auto& p : points) lo = std::min(lo, p.learning_rate);
  return lo;
}

SweepResult sweep_learning_rate(const MemorizedModel& base, std::span<const ForgetSplit> splits,
                                const UnlearnMethod& method, const TrainConfig& train,
                                const SweepConfig& sweep) {
  if (sweep.candidates.empty()) fail(ErrorKind::InvalidParameter, "learning-rate sweep has no candidates");
  if (splits.empty()) fail(ErrorKind::InvalidParameter, "learning-rate sweep needs at least one split");
  for (double lr : sweep.candidates) {
    if (!(lr > 0.0)) fail(ErrorKind::InvalidParameter, "sweep candidates must be positive");
  }
  const TrainConfig cfg = final_only(train);
  SweepResult out;
  for (double lr : sweep.candidates) {
    SweepPoint pt;
    pt.learning_rate = lr;
    pt.min_retain = 1.0;
    for (const auto& split : splits) {
      pt.reports.push_back(unlearn_copy(base, split, method, cfg, lr).report);
      pt.mean_forget += pt.reports.back().rouge1_forget / static_cast<double>(splits.size());
      pt.min_retain = std::min(pt.min_retain, pt.reports.back().rouge1_retain);
    }
    pt.admissible = pt.min_retain >= sweep.retain_threshold;
    out.points.push_back(std::move(pt));
  }
  const SweepPoint* best = nullptr;
  for (const auto& pt : out.points) {
    if (!pt.admissible) continue;
    if (!best || pt.mean_forget < best->mean_forget ||
        (pt.mean_forget == best->mean_forget && pt.learning_rate < best->learning_rate)) {
      best = &pt;
    }
  }
  if (best) out.selected = best->learning_rate;
  return out;
}

std::vector<MethodRow> simulate(const CompiledDataset& ds, const SimulationConfig& cfg) {
  if (cfg.seeds == 0) fail(ErrorKind::InvalidParameter, "at least one seed is required");
  if (cfg.methods.empty()) fail(ErrorKind::InvalidParameter, "no unlearning method selected");
  const ForgetSplit split = split_forget(ds, cfg.forget_edges);
  const std::vector<std::string> edges(cfg.forget_edges.begin(), cfg.forget_edges.end());

  const auto models = parallel_map<MemorizedModel>(cfg.seeds, cfg.threads, [&](std::size_t k) {
    MemorizeConfig mc = cfg.memorize;
    mc.seed = cfg.base_seed + k;
    return memorize(ds, mc);
  });

  std::vector<MethodRow> rows;
  for (const auto& method : cfg.methods) {
    MethodRow row;
    row.method = method;
    row.learning_rate = cfg.learning_rate;
    if (cfg.sweep) {
      TrainConfig tc = cfg.train;
      tc.seed = cfg.base_seed;
      row.sweep = sweep_learning_rate(models.front(), std::span<const ForgetSplit>(&split, 1), method, tc,
                                      *cfg.sweep);
      row.learning_rate = row.sweep->chosen();
    }
    row.runs = parallel_map<SeedRun>(cfg.seeds, cfg.threads, [&](std::size_t k) {
      TrainConfig tc = cfg.train;
      tc.seed = cfg.base_seed + k;
      SeedRun run;
      run.seed = tc.seed;
      run.memorize_epochs = models[k].epochs;
      run.forget_edges = edges;
      run.result = unlearn_full(models[k], split, method, tc, row.learning_rate);
      return run;
    });
    rows.push_back(std::move(row));
  }
  return rows;
}

TrendResult interconnectivity_trend(const ProtocolConfig& cfg) {
  const auto prepared = prepare(cfg, [](std::uint64_t) { return TopologySpec{Dataset1Topology{}}; });
  const std::vector<std::set<std::string>> edges{{"AB"}, {"AC"}};
  const TrainConfig train = final_only(cfg.train);

  TrendResult out;
  out.name = "inter-connectivity (Dataset 1, forget AB vs AC, " + std::string(to_string(cfg.method.kind)) + ")";
  {
    std::vector<ForgetSplit> splits;
    for (const auto& e : edges) splits.push_back(split_forget(prepared.front().ds, e));
    TrainConfig tc = train;
    tc.seed = cfg.base_seed;
    out.sweep = sweep_learning_rate(prepared.front().model, splits, cfg.method, tc, cfg.sweep);
    out.learning_rate = out.sweep.chosen();
  }
  const auto ds_values = parallel_map<std::vector<double>>(cfg.seeds, cfg.threads, [&](std::size_t k) {
    std::vector<double> v;
    TrainConfig tc = train;
    tc.seed = cfg.base_seed + k;
    for (const auto& e : edges) {
      const ForgetSplit split = split_forget(prepared[k].ds, e);
      v.push_back(unlearn_copy(prepared[k].model, split, cfg.method, tc, out.learning_rate).report.deviation);
    }
    return v;
  });
  for (std::size_t a = 0; a < edges.size(); ++a) {
    TrendArm arm;
    arm.name = "DS " + *edges[a].begin() + " (inter-connectivity " +
               std::to_string(edge_interconnectivity(prepared.front().ds.graph, *edges[a].begin())) + ")";
    for (const auto& v : ds_values) arm.values.push_back(v[a]);
    arm.summary = summarize(arm.values);
    out.arms.push_back(std::move(arm));
  }
  out.holds = out.arms[0].summary.median > out.arms[1].summary.median;
  out.detail = "median DS(AB) = " + fmt(out.arms[0].summary.median, 2) + (out.holds ? " > " : " <= ") +
               "median DS(AC) = " + fmt(out.arms[1].summary.median, 2);
  return out;
}

TrendResult density_trend(const ProtocolConfig& cfg) {
  const std::size_t semi = cfg.semi_dense_edges;
  const auto prepared = prepare(cfg, [semi](std::uint64_t) { return TopologySpec{Dataset2Topology{semi, 0}}; });
  const std::vector<std::pair<std::string, NodeRange>> groups{
      {"sparse", {0, 9}}, {"semi-dense", {10, 19}}, {"dense", {20, 29}}};
  const auto splits_for = [&](std::size_t k) {
    Stream rng(derive_seed(cfg.base_seed + k, "density-sample"));
    std::vector<ForgetSplit> splits;
    for (const auto& [name, range] : groups) {
      splits.push_back(split_forget(prepared[k].ds, {sample_forget_edge(prepared[k].ds.graph, range, rng)}));
    }
    return splits;
  };
  const TrainConfig train = final_only(cfg.train);

  TrendResult out;
  out.name = "density (Dataset 2, one sampled edge per sub-graph, " + std::string(to_string(cfg.method.kind)) + ")";
  {
    TrainConfig tc = train;
    tc.seed = cfg.base_seed;
    out.sweep = sweep_learning_rate(prepared.front().model, splits_for(0), cfg.method, tc, cfg.sweep);
    out.learning_rate = out.sweep.chosen();
  }
  const auto ds_values = parallel_map<std::vector<double>>(cfg.seeds, cfg.threads, [&](std::size_t k) {
    std::vector<double> v;
    TrainConfig tc = train;
    tc.seed = cfg.base_seed + k;
    for (const auto& split : splits_for(k)) {
      v.push_back(unlearn_copy(prepared[k].model, split, cfg.method, tc, out.learning_rate).report.deviation);
    }
    return v;
  });
  for (std::size_t a = 0; a < groups.size(); ++a) {
    TrendArm arm;
    arm.name = "DS " + groups[a].first;
    for (const auto& v : ds_values) arm.values.push_back(v[a]);
    arm.summary = summarize(arm.values);
    out.arms.push_back(std::move(arm));
  }
  const double s = out.arms[0].summary.median;
  const double m = out.arms[1].summary.median;
  const double d = out.arms[2].summary.median;
  out.holds = s <= m && m <= d;
  out.detail = "median DS sparse " + fmt(s, 2) + ", semi-dense " + fmt(m, 2) + ", dense " + fmt(d, 2);
  return out;
}

TrendResult domain_trend(const ProtocolConfig& cfg) {
  const auto prepared = prepare(cfg, [](std::uint64_t) { return TopologySpec{Dataset1Topology{}}; });
  const std::vector<std::string> forget{"AC", "An"};
  const std::vector<std::string> probes{"EF", "Eq"};
  const TrainConfig train = final_only(cfg.train);

  TrendResult out;
  out.name = "domain (Dataset 1, forget AC and An, probe EF and Eq, " +
             std::string(to_string(cfg.method.kind)) + ")";
  {
    std::vector<ForgetSplit> splits;
    for (const auto& e : forget) splits.push_back(split_forget(prepared.front().ds, {e}));
    TrainConfig tc = train;
    tc.seed = cfg.base_seed;
    out.sweep = sweep_learning_rate(prepared.front().model, splits, cfg.method, tc, cfg.sweep);
    out.learning_rate = out.sweep.chosen();
  }
  const auto values = parallel_map<std::vector<double>>(cfg.seeds, cfg.threads, [&](std::size_t k) {
    std::vector<double> v;
    TrainConfig tc = train;
    tc.seed = cfg.base_seed + k;
    for (const auto& e : forget) {
      const ForgetSplit split = split_forget(prepared[k].ds, {e});
      const MetricReport r = unlearn_copy(prepared[k].model, split, cfg.method, tc, out.learning_rate).report;
      for (const auto& p : probes) v.push_back(r.mean_rouge_for_edges(std::span<const std::string>(&p, 1)));
    }
    return v;
  });
  for (std::size_t f = 0; f < forget.size(); ++f) {
    for (std::size_t p = 0; p < probes.size(); ++p) {
      TrendArm arm;
      arm.name = "forget " + forget[f] + ": retain ROUGE1 " + probes[p];
      for (const auto& v : values) arm.values.push_back(v[f * probes.size() + p]);
      arm.summary = summarize(arm.values);
      out.arms.push_back(std::move(arm));
    }
  }
  const double ac_ef = out.arms[0].summary.median;
  const double ac_eq = out.arms[1].summary.median;
  const double an_ef = out.arms[2].summary.median;
  const double an_eq = out.arms[3].summary.median;
  out.holds = ac_ef <= ac_eq && an_eq <= an_ef;
  out.detail = "forget AC: EF " + fmt(ac_ef, 3) + " vs Eq " + fmt(ac_eq, 3) + "; forget An: Eq " +
               fmt(an_eq, 3) + " vs EF " + fmt(an_ef, 3);
  return out;
}

std::string format_trend(const TrendResult& t) {
  std::string out = t.name + "\n";
  out += "  learning rate " + fmt(t.learning_rate, 4) +
         (t.sweep.selected ? " (selected by sweep)" : " (no admissible rate; smallest candidate)") + "\n";
  for (const auto& p : t.sweep.points) {
    out += "    sweep lr " + fmt(p.learning_rate, 4) + ": mean forget " + fmt(p.mean_forget, 3) +
           ", min retain " + fmt(p.min_retain, 3) + (p.admissible ? "" : " (below threshold)") + "\n";
  }
  for (const auto& a : t.arms) {
    out += "  " + a.name + ": median " + fmt(a.summary.median, 3) + ", mean " + fmt(a.summary.mean, 3) +
           " +/- " + fmt(a.summary.std, 3) + " [";
    for (std::size_t i = 0; i < a.values.size(); ++i) out += (i ? " " : "") + fmt(a.values[i], 3);
    out += "]\n";
  }
  out += std::string("  ") + (t.holds ? "holds: " : "does not hold: ") + t.detail + "\n";
  return out;
}

}  // namespace pistol::sim
