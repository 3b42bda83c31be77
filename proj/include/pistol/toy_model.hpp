#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pistol/dataset.hpp"
#include "pistol/metrics.hpp"

namespace pistol::sim {

/// Token inventory. Id 0 is the end-of-answer marker.
class Vocabulary {
 public:
  static constexpr std::int32_t kEnd = 0;
  static constexpr std::string_view kEndToken = "</s>";

  Vocabulary();
  /// Tokens of every answer plus every refusal string, sorted.
  static Vocabulary build(std::span<const QAPair> qa, std::span<const std::string> refusals);
  static Vocabulary from_tokens(std::vector<std::string> tokens_without_end);

  std::size_t size() const noexcept { return tokens_.size(); }
  const std::string& token(std::int32_t id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::optional<std::int32_t> id(std::string_view token) const;
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int32_t> index_;
};

struct ModelShape {
  std::size_t nodes = 0;
  std::size_t slot_rows = 0;  // 20 per contract domain
  std::size_t positions = 0;
  std::size_t vocab = 0;
  std::size_t width = 0;

  friend bool operator==(const ModelShape&, const ModelShape&) = default;
};

/// Every trainable table in one contiguous buffer:
/// entity [nodes x width], slot [slot_rows x width], position
/// [positions x width], output [vocab x width], bias [vocab].
/// Also used as the gradient container.
class Parameters {
 public:
  Parameters() = default;
  explicit Parameters(const ModelShape& shape);

  const ModelShape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<double> flat() noexcept { return data_; }
  std::span<const double> flat() const noexcept { return data_; }

  double* entity(std::size_t node) { return data_.data() + entity_offset(node); }
  const double* entity(std::size_t node) const { return data_.data() + entity_offset(node); }
  double* slot(std::size_t row) { return data_.data() + slot_offset(row); }
  const double* slot(std::size_t row) const { return data_.data() + slot_offset(row); }
  double* position(std::size_t t) { return data_.data() + position_offset(t); }
  const double* position(std::size_t t) const { return data_.data() + position_offset(t); }
  double* output() { return data_.data() + output_offset(); }
  const double* output() const { return data_.data() + output_offset(); }
  double* bias() { return data_.data() + bias_offset(); }
  const double* bias() const { return data_.data() + bias_offset(); }

  std::size_t entity_offset(std::size_t node) const noexcept { return node * shape_.width; }
  std::size_t slot_offset(std::size_t row) const noexcept {
    return (shape_.nodes + row) * shape_.width;
  }
  std::size_t position_offset(std::size_t t) const noexcept {
    return (shape_.nodes + shape_.slot_rows + t) * shape_.width;
  }
  std::size_t output_offset() const noexcept {
    return (shape_.nodes + shape_.slot_rows + shape_.positions) * shape_.width;
  }
  std::size_t bias_offset() const noexcept { return output_offset() + shape_.vocab * shape_.width; }

  void set_zero();
  bool all_finite() const noexcept;

  friend bool operator==(const Parameters&, const Parameters&) = default;

 private:
  ModelShape shape_;
  std::vector<double> data_;
};

/// One QA pair encoded for the model: the two entity rows of its edge, the
/// slot row, and target token ids terminated by Vocabulary::kEnd.
struct Example {
  QuestionId id;
  std::size_t first = 0;
  std::size_t second = 0;
  std::size_t slot_row = 0;
  std::vector<std::int32_t> targets;
};

struct EdgeBinding {
  std::size_t first = 0;
  std::size_t second = 0;
  ContractDomain domain = ContractDomain::SalesOfGoods;
};

/// Additive-embedding memorizer. For answer position t of (edge {u,v}, slot s):
///   h = tanh(entity[u] + entity[v] + slot[s] + position[t])
///   logits = output * h + bias
/// Entities are shared by every contract they sign, which is the only path by
/// which forgetting one edge reaches the questions of another edge through the
/// input side.
class ToyMemorizer {
 public:
  ToyMemorizer() = default;
  ToyMemorizer(Vocabulary vocab, std::size_t nodes,
               std::unordered_map<std::string, EdgeBinding> edges, std::size_t positions,
               std::size_t width);

  /// Binds to a compiled dataset (which must carry its topology).
  static ToyMemorizer for_dataset(const CompiledDataset& ds,
                                  std::span<const std::string> refusals, std::size_t width);

  const Vocabulary& vocab() const noexcept { return vocab_; }
  const ModelShape& shape() const noexcept { return params_.shape(); }
  Parameters& params() noexcept { return params_; }
  const Parameters& params() const noexcept { return params_; }
  const std::unordered_map<std::string, EdgeBinding>& edges() const noexcept { return edges_; }

  /// Gaussian init with standard deviation `scale`; bias starts at zero.
  void initialize(std::uint64_t seed, double scale);

  /// Throws NotFound for unknown edges and InvalidParameter when the answer
  /// has a token outside the vocabulary or is longer than the position table.
  Example encode(const QAPair& qa) const;
  /// Same question with a replacement answer (refusal substitution).
  Example encode(const QAPair& qa, std::string_view answer) const;
  std::vector<Example> encode(std::span<const QAPair> qa) const;

  /// Greedy decode until the end marker or the last position.
  std::string generate(const Example& ex) const;
  /// 1-based rank of each target token among the logits at its position;
  /// ties count against the target.
  std::vector<std::int64_t> target_ranks(const Example& ex) const;
  /// True when greedy decoding reproduces the targets token for token.
  bool reproduces(const Example& ex) const;

 private:
  Vocabulary vocab_;
  std::unordered_map<std::string, EdgeBinding> edges_;
  Parameters params_;
};

std::size_t slot_row(ContractDomain domain, int slot);

// ---- losses -------------------------------------------------------------

struct LossResult {
  double value = 0.0;
  Parameters gradient;
};

/// Sum of token cross-entropies of one example; when `grad` is non-null,
/// accumulates weight * d/dparams of that sum into it. Returns the sum.
double example_nll(const Parameters& p, const Example& ex, Parameters* grad, double weight);

/// l(x) averaged over examples, l(x) = mean token cross-entropy.
LossResult loss_nll(const Parameters& p, std::span<const Example> examples);

/// Mean forget loss; the unlearning step ascends it. Throws on empty input.
LossResult loss_ga(const Parameters& p, std::span<const Example> forget);

/// -L(forget) + L(retain).
LossResult loss_gd(const Parameters& p, std::span<const Example> forget,
                   std::span<const Example> retain);

/// Mean over retain examples of the position-averaged KL(reference || model).
LossResult kl_term(const Parameters& p, const Parameters& reference,
                   std::span<const Example> retain);

/// -L(forget) + KL term on retain.
LossResult loss_ukl(const Parameters& p, const Parameters& reference,
                    std::span<const Example> forget, std::span<const Example> retain);

/// L(retain) + L(forget with refusal answers).
LossResult loss_dpo(const Parameters& p, std::span<const Example> retain,
                    std::span<const Example> forget_refusal);

/// (2/beta) * mean log(1 + (pi/pi_ref)^beta), pi(x) = exp(-sum of token CE).
LossResult loss_npo(const Parameters& p, const Parameters& reference,
                    std::span<const Example> forget, double beta);
/// Same with precomputed reference sequence log-likelihoods.
LossResult loss_npo(const Parameters& p, std::span<const double> reference_logprob,
                    std::span<const Example> forget, double beta);

/// log pi(x) = -(sum of token cross-entropies).
double sequence_logprob(const Parameters& p, const Example& ex);

// ---- checkpoints --------------------------------------------------------

/// Text dump: header line, shape, vocabulary, edge bindings, then each table
/// as hex-float rows. Lossless.
std::string format_checkpoint(const ToyMemorizer& model);
ToyMemorizer parse_checkpoint(std::string_view text);
void save_checkpoint(const ToyMemorizer& model, const std::filesystem::path& path);
ToyMemorizer load_checkpoint(const std::filesystem::path& path);

}  // namespace pistol::sim
