#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pistol/dataset.hpp"
#include "pistol/metrics.hpp"
#include "pistol/unlearn.hpp"

namespace pistol::sim {

struct Summary {
  double mean = 0.0;
  /// Sample standard deviation (n - 1); 0 for a single value.
  double std = 0.0;
  double median = 0.0;
  std::size_t count = 0;
};

/// Throws InvalidParameter on empty input.
Summary summarize(std::span<const double> values);

/// Runs fn(0..n-1) on up to `threads` workers (0 = hardware concurrency) and
/// returns results in index order. The first failure by index is rethrown.
template <typename T>
std::vector<T> parallel_map(std::size_t n, unsigned threads, const std::function<T(std::size_t)>& fn);

// ---- learning-rate selection ----------------------------------------------

struct SweepConfig {
  std::vector<double> candidates{1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2, 1e-1};
  /// Every split's retain ROUGE-1 must reach this for a rate to be admissible.
  double retain_threshold = 0.8;
};

struct SweepPoint {
  double learning_rate = 0.0;
  std::vector<MetricReport> reports;  // one per split
  double mean_forget = 0.0;
  double min_retain = 0.0;
  bool admissible = false;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  /// Admissible rate with the lowest mean forget ROUGE-1 (ties: smaller rate).
  std::optional<double> selected;
  /// `selected`, or the smallest candidate when nothing was admissible.
  double chosen() const;
};

/// Unlearns each split from a fresh copy of `base` at every candidate rate.
/// Only final-epoch metrics are computed.
SweepResult sweep_learning_rate(const MemorizedModel& base, std::span<const ForgetSplit> splits,
                                const UnlearnMethod& method, const TrainConfig& train,
                                const SweepConfig& sweep);

// ---- multi-seed runs -------------------------------------------------------

struct SeedRun {
  std::uint64_t seed = 0;
  std::size_t memorize_epochs = 0;
  std::vector<std::string> forget_edges;
  SimResult result;
};

struct MethodRow {
  UnlearnMethod method;
  double learning_rate = 0.0;
  std::optional<SweepResult> sweep;
  std::vector<SeedRun> runs;
};

struct SimulationConfig {
  std::set<std::string> forget_edges;
  std::vector<UnlearnMethod> methods;
  std::size_t seeds = 1;
  std::uint64_t base_seed = 1;
  /// Fixed rate, or sweep on the first seed when `sweep` is set.
  double learning_rate = 0.01;
  std::optional<SweepConfig> sweep;
  TrainConfig train;
  MemorizeConfig memorize;
  unsigned threads = 0;
};

/// Memorizes `ds` once per seed (seed = base_seed + k) and unlearns the same
/// split with every method. One row per method, runs in seed order.
std::vector<MethodRow> simulate(const CompiledDataset& ds, const SimulationConfig& cfg);

// ---- structural trend protocols -------------------------------------------

struct ProtocolConfig {
  std::size_t seeds = 5;
  std::uint64_t base_seed = 1;
  UnlearnMethod method{MethodKind::GA};
  TrainConfig train;
  MemorizeConfig memorize;
  SweepConfig sweep;
  /// Dense-plus-chain sub-graph size for the density protocol.
  std::size_t semi_dense_edges = 21;
  unsigned threads = 0;
};

struct TrendArm {
  std::string name;
  std::vector<double> values;  // one per seed
  Summary summary;
};

struct TrendResult {
  std::string name;
  double learning_rate = 0.0;
  SweepResult sweep;
  std::vector<TrendArm> arms;
  bool holds = false;
  std::string detail;
};

/// Dataset 1, forget {AB} vs {AC}; holds when median DS(AB) > median DS(AC).
TrendResult interconnectivity_trend(const ProtocolConfig& cfg);
/// Dataset 2, one sampled edge per sub-graph; holds when median DS is
/// non-decreasing sparse -> semi-dense -> dense.
TrendResult density_trend(const ProtocolConfig& cfg);
/// Dataset 1, forget {AC} then {An}; arms are retain ROUGE-1 on EF and Eq.
/// Holds when each forgotten domain's independent edge ends no higher than
/// the other domain's.
TrendResult domain_trend(const ProtocolConfig& cfg);

std::string format_trend(const TrendResult& t);

}  // namespace pistol::sim

#include "pistol/detail/parallel.hpp"
