#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pistol/dataset.hpp"
#include "pistol/metrics.hpp"
#include "pistol/toy_model.hpp"

namespace pistol::sim {

enum class MethodKind { GA, GD, UKL, DPO, NPO };

struct UnlearnMethod {
  MethodKind kind = MethodKind::GA;
  /// Only used by NPO; must be positive.
  double beta = 0.1;
};

std::string_view to_string(MethodKind kind) noexcept;
/// "ga", "gd", "ukl" (or "kl"), "dpo", "npo"; case-insensitive.
MethodKind parse_method(std::string_view text);
std::vector<MethodKind> all_methods();

std::vector<std::string> default_refusals();

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Decoupled decay. Zero keeps untouched parameters bit-identical.
  double weight_decay = 0.0;
};

/// Adam with bias correction. Coordinates with zero gradient and zero moments
/// receive an exactly-zero update.
class Adam {
 public:
  Adam(std::size_t size, AdamConfig cfg = {});
  void step(Parameters& p, const Parameters& grad, double lr);
  std::int64_t steps() const noexcept { return t_; }

 private:
  AdamConfig cfg_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::int64_t t_ = 0;
};

struct MemorizeConfig {
  std::size_t width = 64;
  double init_scale = 0.1;
  double learning_rate = 0.01;
  std::size_t batch_size = 16;
  std::size_t max_epochs = 600;
  /// Greedy-decoding check interval, in epochs.
  std::size_t check_every = 5;
  std::uint64_t seed = 0;
  std::vector<std::string> refusals = default_refusals();
};

struct MemorizedModel {
  ToyMemorizer model;
  /// Frozen copy of the fitted parameters (the pre-unlearning model).
  Parameters reference;
  std::size_t epochs = 0;
};

/// Fits until greedy decoding reproduces every answer of `ds`. Throws
/// Convergence listing residual questions when `max_epochs` is exhausted.
MemorizedModel memorize(const CompiledDataset& ds, const MemorizeConfig& cfg);

struct TrainConfig {
  double learning_rate = 0.01;
  std::size_t epochs = 20;
  std::size_t batch_size = 4;
  /// Linear ramp over the first epoch's steps.
  bool warmup_first_epoch = true;
  std::vector<std::string> refusals = default_refusals();
  std::uint64_t seed = 0;
  /// Evaluate after every epoch; when false only the final state is scored.
  bool evaluate_each_epoch = true;
  bool with_ranks = true;
  std::int64_t hit_cutoff = kDefaultHitCutoff;
  AdamConfig adam;
};

struct Evaluation {
  MetricReport report;
  std::vector<GenerationRecord> generations;
  std::vector<RankRecord> ranks;
};

/// Greedy-decode every question of the split and score it.
Evaluation evaluate(const ToyMemorizer& model, const ForgetSplit& split, bool with_ranks,
                    std::int64_t hit_cutoff = kDefaultHitCutoff);

struct SimResult {
  UnlearnMethod method;
  TrainConfig config;
  std::vector<MetricReport> trajectory;
  Evaluation final;
};

/// The refusal-substituted forget set: refusal answers cycle through `refusals`.
std::vector<Example> refusal_examples(const ToyMemorizer& model, std::span<const QAPair> forget,
                                      std::span<const std::string> refusals);

/// Loss with the sign used for descent, on one batch.
LossResult unlearning_objective(const Parameters& p, const Parameters& reference,
                                const UnlearnMethod& method, std::span<const Example> forget,
                                std::span<const Example> retain,
                                std::span<const Example> forget_refusal,
                                std::span<const double> reference_logprob);

/// Updates `model` in place. An epoch is one pass over the shuffled forget
/// set in batches of `batch_size`; each forget example is paired with one
/// randomly drawn retain example for the methods that use retain data.
/// Throws Divergence naming method and epoch if parameters become non-finite.
SimResult run_unlearning(ToyMemorizer& model, const Parameters& reference,
                         const ForgetSplit& split, const UnlearnMethod& method,
                         const TrainConfig& cfg);

// ---- numerical gradient verification ------------------------------------

struct GradCheckOptions {
  std::size_t samples = 256;
  double step = 1e-5;
  std::uint64_t seed = 0;
  /// Denominator floor for the relative error.
  double floor = 1e-6;
};

struct GradCheckReport {
  std::size_t coordinates = 0;
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  std::size_t worst_coordinate = 0;
  std::vector<std::size_t> sampled;
  std::vector<double> analytic;
  std::vector<double> numeric;
};

using LossEvaluator = std::function<LossResult(const Parameters&)>;

/// Central differences on a random subsample of coordinates, compared to the
/// analytic gradient of `evaluate` at `p`.
/// rel = |a - n| / max(|a|, |n|, floor).
GradCheckReport grad_check(const Parameters& p, const LossEvaluator& evaluate,
                           const GradCheckOptions& opts = {});

}  // namespace pistol::sim
