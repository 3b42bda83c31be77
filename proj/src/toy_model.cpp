#include "pistol/toy_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>
#include <sstream>

#include "pistol/error.hpp"
#include "pistol/kernels.hpp"
#include "pistol/rng.hpp"

namespace pistol::sim {
namespace {

constexpr std::string_view kCheckpointHeader = "pistol-toy-checkpoint 1";

// Buffers for one position's forward pass.
struct Scratch {
  std::vector<double> z;
  std::vector<double> h;
  std::vector<double> logits;
  std::vector<double> coef;
  std::vector<double> dh;

  explicit Scratch(const ModelShape& s)
      : z(s.width), h(s.width), logits(s.vocab), coef(s.vocab), dh(s.width) {}
};

void check_example(const ModelShape& s, const Example& ex) {
  if (ex.first >= s.nodes || ex.second >= s.nodes || ex.slot_row >= s.slot_rows ||
      ex.targets.empty() || ex.targets.size() > s.positions) {
    fail(ErrorKind::InvalidParameter, "example " + to_string(ex.id) + " does not fit the model shape");
  }
}

// h = tanh(entity[u] + entity[v] + slot[s] + position[t]); logits = W h + b.
void forward(const Parameters& p, const Example& ex, std::size_t t, Scratch& sc) {
  const ModelShape& s = p.shape();
  const double* eu = p.entity(ex.first);
  const double* ev = p.entity(ex.second);
  const double* es = p.slot(ex.slot_row);
  const double* ep = p.position(t);
  for (std::size_t k = 0; k < s.width; ++k) {
    sc.z[k] = eu[k] + ev[k] + es[k] + ep[k];
    sc.h[k] = std::tanh(sc.z[k]);
  }
  kernels::active().gemv(p.output(), p.bias(), sc.h.data(), sc.logits.data(), s.vocab, s.width);
}

// Turns logits into probabilities in place; returns log-sum-exp.
double softmax_inplace(std::vector<double>& v) {
  const double mx = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (double& x : v) {
    x = std::exp(x - mx);
    sum += x;
  }
  for (double& x : v) x /= sum;
  return mx + std::log(sum);
}

// Accumulates the gradient of sum_j coef[j] * logits[j] at this position.
void backward(const Parameters& p, const Example& ex, std::size_t t, Scratch& sc, Parameters& g) {
  const ModelShape& s = p.shape();
  const auto& k = kernels::active();
  k.ger(sc.coef.data(), sc.h.data(), g.output(), s.vocab, s.width);
  k.axpy(1.0, sc.coef.data(), g.bias(), s.vocab);
  std::fill(sc.dh.begin(), sc.dh.end(), 0.0);
  k.gemv_t(p.output(), sc.coef.data(), sc.dh.data(), s.vocab, s.width);
  for (std::size_t i = 0; i < s.width; ++i) sc.dh[i] *= 1.0 - sc.h[i] * sc.h[i];
  k.axpy(1.0, sc.dh.data(), g.entity(ex.first), s.width);
  k.axpy(1.0, sc.dh.data(), g.entity(ex.second), s.width);
  k.axpy(1.0, sc.dh.data(), g.slot(ex.slot_row), s.width);
  k.axpy(1.0, sc.dh.data(), g.position(t), s.width);
}

void require_nonempty(std::span<const Example> xs, const char* what) {
  if (xs.empty()) fail(ErrorKind::InvalidParameter, std::string(what) + " set is empty");
}

void add_scaled(Parameters& into, const Parameters& from, double scale) {
  auto a = into.flat();
  auto b = from.flat();
  kernels::active().axpy(scale, b.data(), a.data(), a.size());
}

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::string hex(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

}  // namespace

// ---- Vocabulary -----------------------------------------------------------

Vocabulary::Vocabulary() : tokens_{std::string(kEndToken)}, index_{{std::string(kEndToken), kEnd}} {}

Vocabulary Vocabulary::build(std::span<const QAPair> qa, std::span<const std::string> refusals) {
  std::set<std::string> all;
  for (const auto& q : qa) {
    for (auto& t : tokenize(q.answer)) all.insert(std::move(t));
  }
  for (const auto& r : refusals) {
    for (auto& t : tokenize(r)) all.insert(std::move(t));
  }
  return from_tokens(std::vector<std::string>(all.begin(), all.end()));
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens_without_end) {
  Vocabulary v;
  for (auto& t : tokens_without_end) {
    if (t.empty() || t.find_first_of(" \t\r\n") != std::string::npos) {
      fail(ErrorKind::InvalidParameter, "vocabulary tokens must be non-empty and whitespace-free");
    }
    const auto id = static_cast<std::int32_t>(v.tokens_.size());
    if (!v.index_.emplace(t, id).second) {
      fail(ErrorKind::InvalidParameter, "duplicate vocabulary token '" + t + "'");
    }
    v.tokens_.push_back(std::move(t));
  }
  return v;
}

std::optional<std::int32_t> Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

// ---- Parameters -----------------------------------------------------------

Parameters::Parameters(const ModelShape& shape)
    : shape_(shape),
      data_((shape.nodes + shape.slot_rows + shape.positions + shape.vocab) * shape.width + shape.vocab,
            0.0) {}

void Parameters::set_zero() { std::fill(data_.begin(), data_.end(), 0.0); }

bool Parameters::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

// ---- ToyMemorizer ---------------------------------------------------------

std::size_t slot_row(ContractDomain domain, int slot) {
  if (slot < 1 || slot > static_cast<int>(kSlotsPerContract)) {
    fail(ErrorKind::InvalidParameter, "slot " + std::to_string(slot) + " is out of range");
  }
  const std::size_t base = domain == ContractDomain::SalesOfGoods ? 0 : kSlotsPerContract;
  return base + static_cast<std::size_t>(slot - 1);
}

ToyMemorizer::ToyMemorizer(Vocabulary vocab, std::size_t nodes,
                           std::unordered_map<std::string, EdgeBinding> edges,
                           std::size_t positions, std::size_t width)
    : vocab_(std::move(vocab)), edges_(std::move(edges)) {
  if (width == 0 || positions == 0 || nodes < 2) {
    fail(ErrorKind::InvalidParameter, "model needs width > 0, positions > 0 and at least 2 nodes");
  }
  for (const auto& [label, b] : edges_) {
    if (b.first >= nodes || b.second >= nodes || b.first == b.second) {
      fail(ErrorKind::InvalidParameter, "edge binding " + label + " has invalid endpoints");
    }
  }
  params_ = Parameters(ModelShape{nodes, 2 * kSlotsPerContract, positions, vocab_.size(), width});
}

ToyMemorizer ToyMemorizer::for_dataset(const CompiledDataset& ds,
                                       std::span<const std::string> refusals, std::size_t width) {
  if (!ds.has_topology()) {
    fail(ErrorKind::InvalidParameter, "model binding needs a dataset with its topology (manifest)");
  }
  if (ds.qa.empty()) fail(ErrorKind::InvalidParameter, "dataset is empty");
  std::unordered_map<std::string, EdgeBinding> edges;
  for (const Edge& e : ds.graph.edges()) edges[e.label] = {e.first, e.second, e.domain};
  std::size_t longest = 0;
  for (const auto& q : ds.qa) longest = std::max(longest, tokenize(q.answer).size());
  for (const auto& r : refusals) longest = std::max(longest, tokenize(r).size());
  return ToyMemorizer(Vocabulary::build(ds.qa, refusals), ds.graph.node_count(), std::move(edges),
                      longest + 1, width);
}

void ToyMemorizer::initialize(std::uint64_t seed, double scale) {
  Stream rng(derive_seed(seed, "toy-init"));
  auto flat = params_.flat();
  const std::size_t weights = params_.bias_offset();
  for (std::size_t i = 0; i < flat.size(); ++i) flat[i] = i < weights ? scale * rng.normal() : 0.0;
}

Example ToyMemorizer::encode(const QAPair& qa) const { return encode(qa, qa.answer); }

Example ToyMemorizer::encode(const QAPair& qa, std::string_view answer) const {
  auto it = edges_.find(qa.edge);
  if (it == edges_.end()) fail(ErrorKind::NotFound, "model has no edge '" + qa.edge + "'");
  Example ex;
  ex.id = {qa.edge, qa.slot};
  ex.first = it->second.first;
  ex.second = it->second.second;
  ex.slot_row = slot_row(it->second.domain, qa.slot);
  for (const auto& t : tokenize(answer)) {
    auto id = vocab_.id(t);
    if (!id) fail(ErrorKind::InvalidParameter, "token '" + t + "' of " + to_string(ex.id) + " is not in the vocabulary");
    ex.targets.push_back(*id);
  }
  ex.targets.push_back(Vocabulary::kEnd);
  if (ex.targets.size() > shape().positions) {
    fail(ErrorKind::InvalidParameter, "answer of " + to_string(ex.id) + " is longer than the position table");
  }
  return ex;
}

std::vector<Example> ToyMemorizer::encode(std::span<const QAPair> qa) const {
  std::vector<Example> out;
  out.reserve(qa.size());
  for (const auto& q : qa) out.push_back(encode(q));
  return out;
}

std::string ToyMemorizer::generate(const Example& ex) const {
  Scratch sc(shape());
  std::string out;
  for (std::size_t t = 0; t < shape().positions; ++t) {
    forward(params_, ex, t, sc);
    const auto best = static_cast<std::int32_t>(
        std::max_element(sc.logits.begin(), sc.logits.end()) - sc.logits.begin());
    if (best == Vocabulary::kEnd) break;
    if (!out.empty()) out += ' ';
    out += vocab_.token(best);
  }
  return out;
}

std::vector<std::int64_t> ToyMemorizer::target_ranks(const Example& ex) const {
  check_example(shape(), ex);
  Scratch sc(shape());
  std::vector<std::int64_t> ranks;
  // The end marker is not an answer token.
  for (std::size_t t = 0; t + 1 < ex.targets.size(); ++t) {
    forward(params_, ex, t, sc);
    const auto y = static_cast<std::size_t>(ex.targets[t]);
    std::int64_t rank = 1;
    for (std::size_t j = 0; j < sc.logits.size(); ++j) {
      if (j != y && sc.logits[j] >= sc.logits[y]) ++rank;
    }
    ranks.push_back(rank);
  }
  return ranks;
}

bool ToyMemorizer::reproduces(const Example& ex) const {
  check_example(shape(), ex);
  Scratch sc(shape());
  for (std::size_t t = 0; t < ex.targets.size(); ++t) {
    forward(params_, ex, t, sc);
    const auto best = std::max_element(sc.logits.begin(), sc.logits.end()) - sc.logits.begin();
    if (best != ex.targets[t]) return false;
  }
  return true;
}

// ---- losses ---------------------------------------------------------------

double example_nll(const Parameters& p, const Example& ex, Parameters* grad, double weight) {
  check_example(p.shape(), ex);
  Scratch sc(p.shape());
  double total = 0.0;
  for (std::size_t t = 0; t < ex.targets.size(); ++t) {
    forward(p, ex, t, sc);
    const auto y = static_cast<std::size_t>(ex.targets[t]);
    const double logit_y = sc.logits[y];
    const double lse = softmax_inplace(sc.logits);
    total += lse - logit_y;
    if (grad) {
      for (std::size_t j = 0; j < sc.logits.size(); ++j) sc.coef[j] = weight * sc.logits[j];
      sc.coef[y] -= weight;
      backward(p, ex, t, sc, *grad);
    }
  }
  return total;
}

double sequence_logprob(const Parameters& p, const Example& ex) {
  return -example_nll(p, ex, nullptr, 0.0);
}

LossResult loss_nll(const Parameters& p, std::span<const Example> examples) {
  LossResult r{0.0, Parameters(p.shape())};
  if (examples.empty()) return r;
  const double n = static_cast<double>(examples.size());
  for (const auto& ex : examples) {
    const double len = static_cast<double>(ex.targets.size());
    r.value += example_nll(p, ex, &r.gradient, 1.0 / (n * len)) / len;
  }
  r.value /= n;
  return r;
}

LossResult loss_ga(const Parameters& p, std::span<const Example> forget) {
  require_nonempty(forget, "forget");
  return loss_nll(p, forget);
}

LossResult loss_gd(const Parameters& p, std::span<const Example> forget,
                   std::span<const Example> retain) {
  require_nonempty(forget, "forget");
  require_nonempty(retain, "retain");
  LossResult f = loss_nll(p, forget);
  LossResult r = loss_nll(p, retain);
  add_scaled(r.gradient, f.gradient, -1.0);
  r.value -= f.value;
  return r;
}

LossResult kl_term(const Parameters& p, const Parameters& reference,
                   std::span<const Example> retain) {
  if (!(p.shape() == reference.shape())) {
    fail(ErrorKind::InvalidParameter, "reference model shape or vocabulary differs from the model");
  }
  LossResult r{0.0, Parameters(p.shape())};
  if (retain.empty()) return r;
  Scratch sc(p.shape());
  Scratch ref(p.shape());
  const double n = static_cast<double>(retain.size());
  for (const auto& ex : retain) {
    check_example(p.shape(), ex);
    const double len = static_cast<double>(ex.targets.size());
    const double w = 1.0 / (n * len);
    for (std::size_t t = 0; t < ex.targets.size(); ++t) {
      forward(reference, ex, t, ref);
      const std::vector<double> ref_logits = ref.logits;
      const double lse_ref = softmax_inplace(ref.logits);
      forward(p, ex, t, sc);
      const std::vector<double> logits = sc.logits;
      const double lse = softmax_inplace(sc.logits);
      double kl = 0.0;
      for (std::size_t j = 0; j < logits.size(); ++j) {
        const double q = ref.logits[j];
        kl += q * ((ref_logits[j] - lse_ref) - (logits[j] - lse));
        sc.coef[j] = w * (sc.logits[j] - q);
      }
      r.value += w * kl;
      backward(p, ex, t, sc, r.gradient);
    }
  }
  return r;
}

LossResult loss_ukl(const Parameters& p, const Parameters& reference,
                    std::span<const Example> forget, std::span<const Example> retain) {
  require_nonempty(forget, "forget");
  require_nonempty(retain, "retain");
  LossResult f = loss_nll(p, forget);
  LossResult k = kl_term(p, reference, retain);
  add_scaled(k.gradient, f.gradient, -1.0);
  k.value -= f.value;
  return k;
}

LossResult loss_dpo(const Parameters& p, std::span<const Example> retain,
                    std::span<const Example> forget_refusal) {
  require_nonempty(retain, "retain");
  require_nonempty(forget_refusal, "refusal-substituted forget");
  LossResult r = loss_nll(p, retain);
  LossResult f = loss_nll(p, forget_refusal);
  add_scaled(r.gradient, f.gradient, 1.0);
  r.value += f.value;
  return r;
}

LossResult loss_npo(const Parameters& p, std::span<const double> reference_logprob,
                    std::span<const Example> forget, double beta) {
  if (!(beta > 0.0)) fail(ErrorKind::InvalidParameter, "NPO beta must be positive");
  require_nonempty(forget, "forget");
  if (reference_logprob.size() != forget.size()) {
    fail(ErrorKind::InvalidParameter, "one reference log-likelihood per forget example is required");
  }
  LossResult r{0.0, Parameters(p.shape())};
  const double n = static_cast<double>(forget.size());
  for (std::size_t i = 0; i < forget.size(); ++i) {
    const double margin = beta * (sequence_logprob(p, forget[i]) - reference_logprob[i]);
    r.value += (2.0 / beta) * softplus(margin) / n;
    // d/dθ (2/β) softplus(β(logπ - logπ_ref)) = 2σ(margin) dlogπ/dθ = -2σ(margin) dΣCE/dθ.
    example_nll(p, forget[i], &r.gradient, -2.0 * sigmoid(margin) / n);
  }
  return r;
}

LossResult loss_npo(const Parameters& p, const Parameters& reference,
                    std::span<const Example> forget, double beta) {
  if (!(p.shape() == reference.shape())) {
    fail(ErrorKind::InvalidParameter, "reference model shape or vocabulary differs from the model");
  }
  std::vector<double> ref;
  ref.reserve(forget.size());
  for (const auto& ex : forget) ref.push_back(sequence_logprob(reference, ex));
  return loss_npo(p, ref, forget, beta);
}

// ---- checkpoints ----------------------------------------------------------

std::string format_checkpoint(const ToyMemorizer& model) {
  const ModelShape& s = model.shape();
  std::string out(kCheckpointHeader);
  out += "\nshape " + std::to_string(s.nodes) + " " + std::to_string(s.slot_rows) + " " +
         std::to_string(s.positions) + " " + std::to_string(s.vocab) + " " + std::to_string(s.width) + "\n";
  out += "vocab " + std::to_string(model.vocab().size()) + "\n";
  for (const auto& t : model.vocab().tokens()) out += t + "\n";
  std::vector<std::string> labels;
  for (const auto& [label, b] : model.edges()) labels.push_back(label);
  std::sort(labels.begin(), labels.end());
  out += "edges " + std::to_string(labels.size()) + "\n";
  for (const auto& l : labels) {
    const EdgeBinding& b = model.edges().at(l);
    out += l + " " + std::to_string(b.first) + " " + std::to_string(b.second) + " " +
           std::string(to_string(b.domain)) + "\n";
  }
  const auto table = [&](const char* name, std::size_t offset, std::size_t rows, std::size_t cols) {
    out += std::string(name) + "\n";
    const auto flat = model.params().flat();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        if (c) out += ' ';
        out += hex(flat[offset + r * cols + c]);
      }
      out += '\n';
    }
  };
  const Parameters& p = model.params();
  table("entity", p.entity_offset(0), s.nodes, s.width);
  table("slot", p.slot_offset(0), s.slot_rows, s.width);
  table("position", p.position_offset(0), s.positions, s.width);
  table("output", p.output_offset(), s.vocab, s.width);
  table("bias", p.bias_offset(), 1, s.vocab);
  out += "end\n";
  return out;
}

ToyMemorizer parse_checkpoint(std::string_view text) {
  std::vector<std::string_view> lines;
  for (std::size_t pos = 0; pos < text.size();) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(text.substr(pos, end - pos));
    pos = end + 1;
  }
  std::size_t at = 0;
  const auto bad = [&](const std::string& what) -> void {
    fail(ErrorKind::Parse, "checkpoint line " + std::to_string(at + 1) + ": " + what);
  };
  const auto next = [&]() -> std::string_view {
    if (at >= lines.size()) bad("unexpected end of file");
    return lines[at++];
  };
  const auto words = [](std::string_view line) {
    std::vector<std::string> w;
    std::istringstream ss{std::string(line)};
    for (std::string s; ss >> s;) w.push_back(s);
    return w;
  };
  const auto count = [&](const std::string& s) -> std::size_t {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
    if (s.empty() || *end != '\0' || s[0] == '-') bad("'" + s + "' is not a count");
    return static_cast<std::size_t>(v);
  };

  if (next() != kCheckpointHeader) {
    at = 0;
    bad("not a toy checkpoint (expected '" + std::string(kCheckpointHeader) + "')");
  }
  auto w = words(next());
  if (w.size() != 6 || w[0] != "shape") {
    --at;
    bad("expected 'shape <nodes> <slot rows> <positions> <vocab> <width>'");
  }
  ModelShape shape{count(w[1]), count(w[2]), count(w[3]), count(w[4]), count(w[5])};
  if (shape.slot_rows != 2 * kSlotsPerContract) bad("slot table must have 40 rows");

  w = words(next());
  if (w.size() != 2 || w[0] != "vocab" || count(w[1]) != shape.vocab) {
    --at;
    bad("vocabulary size does not match shape");
  }
  if (next() != Vocabulary::kEndToken) {
    --at;
    bad("vocabulary must start with the end marker");
  }
  std::vector<std::string> tokens;
  for (std::size_t i = 1; i < shape.vocab; ++i) tokens.emplace_back(next());

  w = words(next());
  if (w.size() != 2 || w[0] != "edges") {
    --at;
    bad("expected 'edges <count>'");
  }
  std::unordered_map<std::string, EdgeBinding> edges;
  const std::size_t n_edges = count(w[1]);
  for (std::size_t i = 0; i < n_edges; ++i) {
    w = words(next());
    if (w.size() != 4) {
      --at;
      bad("expected '<label> <first> <second> <domain>'");
    }
    edges[w[0]] = {count(w[1]), count(w[2]), parse_domain(w[3])};
  }

  ToyMemorizer model(Vocabulary::from_tokens(std::move(tokens)), shape.nodes, std::move(edges),
                     shape.positions, shape.width);
  if (!(model.shape() == shape)) bad("shape is inconsistent with vocabulary and slot table");
  Parameters& p = model.params();
  const auto table = [&](const char* name, std::size_t offset, std::size_t rows, std::size_t cols) {
    if (next() != name) {
      --at;
      bad(std::string("expected table '") + name + "'");
    }
    auto flat = p.flat();
    for (std::size_t r = 0; r < rows; ++r) {
      const auto cells = words(next());
      if (cells.size() != cols) {
        --at;
        bad("expected " + std::to_string(cols) + " values");
      }
      for (std::size_t c = 0; c < cols; ++c) {
        char* end = nullptr;
        const double v = std::strtod(cells[c].c_str(), &end);
        if (*end != '\0') {
          --at;
          bad("'" + cells[c] + "' is not a number");
        }
        flat[offset + r * cols + c] = v;
      }
    }
  };
  table("entity", p.entity_offset(0), shape.nodes, shape.width);
  table("slot", p.slot_offset(0), shape.slot_rows, shape.width);
  table("position", p.position_offset(0), shape.positions, shape.width);
  table("output", p.output_offset(), shape.vocab, shape.width);
  table("bias", p.bias_offset(), 1, shape.vocab);
  if (next() != "end") {
    --at;
    bad("expected 'end'");
  }
  return model;
}

void save_checkpoint(const ToyMemorizer& model, const std::filesystem::path& path) {
  write_file(path, format_checkpoint(model));
}

ToyMemorizer load_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint(read_file(path));
}

}  // namespace pistol::sim
