#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pistol/dataset.hpp"

namespace pistol {

/// Lowercase ASCII, split on whitespace (ASCII and the common Unicode space
/// characters) and on ASCII punctuation, which is dropped.
std::vector<std::string> tokenize(std::string_view text);

/// Clipped unigram overlap divided by the reference unigram count.
/// Throws InvalidParameter when the reference has no tokens.
double rouge1_recall(std::string_view candidate, std::string_view reference);

inline constexpr std::int64_t kDefaultHitCutoff = 100;

/// Mean reciprocal rank over the target tokens. Ranks are 1-based.
double mrr(std::span<const std::int64_t> target_ranks);
/// Fraction of target tokens ranked within the top `m`.
double thr(std::span<const std::int64_t> target_ranks, std::int64_t m = kDefaultHitCutoff);

/// 100 * sqrt(forget^2 + (1 - retain)^2). Inputs must lie in [0, 1].
double deviation_score(double rouge_forget, double rouge_retain);

struct QuestionId {
  std::string edge;
  int slot = 0;

  friend auto operator<=>(const QuestionId&, const QuestionId&) = default;
};

std::string to_string(const QuestionId& id);

struct GenerationRecord {
  QuestionId id;
  std::string text;
};

struct RankRecord {
  QuestionId id;
  std::vector<std::int64_t> target_ranks;
};

struct QuestionScore {
  QuestionId id;
  bool forget = false;
  double rouge1 = 0.0;
  std::optional<double> mrr;
  std::optional<double> thr;
};

struct MetricReport {
  double rouge1_forget = 0.0;
  double rouge1_retain = 0.0;
  std::optional<double> mrr_forget;
  std::optional<double> mrr_retain;
  std::optional<double> thr_forget;
  std::optional<double> thr_retain;
  double deviation = 0.0;
  std::vector<QuestionScore> questions;

  /// Mean ROUGE-1 over the questions of the given edges (NaN when none).
  double mean_rouge_for_edges(std::span<const std::string> edges) const;
};

/// Equal-weight per-question means for both sides of the split. ROUGE of an
/// empty side is reported as 0 and contributes 0 to the score.
/// Throws IncompleteInput listing every question without a generation.
MetricReport aggregate(const ForgetSplit& split, std::span<const GenerationRecord> gens,
                       std::optional<std::span<const RankRecord>> ranks = std::nullopt,
                       std::int64_t hit_cutoff = kDefaultHitCutoff);

// ---- file formats -------------------------------------------------------

/// {"edge","slot","text"} per line.
std::string format_generations_jsonl(std::span<const GenerationRecord> gens);
std::vector<GenerationRecord> parse_generations_jsonl(std::string_view text);
/// {"edge","slot","target_ranks"} per line.
std::string format_ranks_jsonl(std::span<const RankRecord> ranks);
std::vector<RankRecord> parse_ranks_jsonl(std::string_view text);

nlohmann::ordered_json report_to_json(const MetricReport& report, bool with_questions = true);
MetricReport report_from_json(const nlohmann::json& j);

/// Two-column summary in the Forget ROUGE1 / Retain ROUGE1 / Deviation Score
/// layout, with MRR/THR rows when present.
std::string format_report_text(const MetricReport& report);

}  // namespace pistol
