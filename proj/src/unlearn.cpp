#include "pistol/unlearn.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "pistol/error.hpp"

namespace pistol::sim {

std::string_view to_string(MethodKind kind) noexcept {
  switch (kind) {
    case MethodKind::GA: return "GA";
    case MethodKind::GD: return "GD";
    case MethodKind::UKL: return "UKL";
    case MethodKind::DPO: return "DPO";
    case MethodKind::NPO: return "NPO";
  }
  return "GA";
}

MethodKind parse_method(std::string_view text) {
  std::string s(text);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "ga") return MethodKind::GA;
  if (s == "gd") return MethodKind::GD;
  if (s == "ukl" || s == "kl") return MethodKind::UKL;
  if (s == "dpo") return MethodKind::DPO;
  if (s == "npo") return MethodKind::NPO;
  fail(ErrorKind::InvalidParameter, "unknown method '" + std::string(text) + "' (expected ga, gd, ukl, dpo or npo)");
}

std::vector<MethodKind> all_methods() {
  return {MethodKind::GA, MethodKind::GD, MethodKind::UKL, MethodKind::DPO, MethodKind::NPO};
}

std::vector<std::string> default_refusals() {
  return {"I don't know.", "I cannot answer that.", "No information available.",
          "That is not something I can share.", "I have no knowledge of that."};
}

// ---- Adam -----------------------------------------------------------------

Adam::Adam(std::size_t size, AdamConfig cfg) : cfg_(cfg), m_(size, 0.0), v_(size, 0.0) {}

void Adam::step(Parameters& p, const Parameters& grad, double lr) {
  auto x = p.flat();
  auto g = grad.flat();
  if (x.size() != m_.size() || g.size() != m_.size()) {
    fail(ErrorKind::InvalidParameter, "optimizer state does not match the parameter size");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < x.size(); ++i) {
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g[i];
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
    if (m_[i] == 0.0 && v_[i] == 0.0) continue;
    const double mhat = m_[i] / c1;
    const double vhat = v_[i] / c2;
    x[i] -= lr * mhat / (std::sqrt(vhat) + cfg_.epsilon);
  }
  if (cfg_.weight_decay != 0.0) {
    for (double& xi : x) xi -= lr * cfg_.weight_decay * xi;
  }
}

// ---- memorization ---------------------------------------------------------

namespace {

std::string residual_list(const std::vector<QuestionId>& ids) {
  std::string out;
  const std::size_t shown = std::min<std::size_t>(ids.size(), 10);
  for (std::size_t i = 0; i < shown; ++i) {
    if (i) out += ", ";
    out += to_string(ids[i]);
  }
  if (ids.size() > shown) out += ", ... (" + std::to_string(ids.size() - shown) + " more)";
  return out;
}

std::vector<QuestionId> unreproduced(const ToyMemorizer& m, std::span<const Example> xs) {
  std::vector<QuestionId> out;
  for (const auto& ex : xs) {
    if (!m.reproduces(ex)) out.push_back(ex.id);
  }
  return out;
}

template <typename T>
std::vector<T> gather(std::span<const T> xs, std::span<const std::size_t> idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(xs[i]);
  return out;
}

}  // namespace

MemorizedModel memorize(const CompiledDataset& ds, const MemorizeConfig& cfg) {
  if (ds.qa.empty()) fail(ErrorKind::InvalidParameter, "cannot memorize an empty dataset");
  if (cfg.batch_size == 0 || cfg.check_every == 0 || !(cfg.learning_rate > 0.0)) {
    fail(ErrorKind::InvalidParameter, "memorization needs batch size, check interval and learning rate > 0");
  }
  MemorizedModel out{ToyMemorizer::for_dataset(ds, cfg.refusals, cfg.width), {}, 0};
  ToyMemorizer& model = out.model;
  model.initialize(cfg.seed, cfg.init_scale);
  const auto examples = model.encode(ds.qa);
  Adam adam(model.params().size());
  Stream rng(derive_seed(cfg.seed, "memorize"));
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<QuestionId> residual;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
      const auto idx = std::span<const std::size_t>(order).subspan(b, std::min(cfg.batch_size, order.size() - b));
      const auto batch = gather(std::span<const Example>(examples), idx);
      const LossResult r = loss_nll(model.params(), batch);
      adam.step(model.params(), r.gradient, cfg.learning_rate);
    }
    if (!model.params().all_finite()) {
      fail(ErrorKind::Divergence, "memorization diverged at epoch " + std::to_string(epoch));
    }
    if (epoch % cfg.check_every == 0 || epoch == cfg.max_epochs) {
      residual = unreproduced(model, examples);
      if (residual.empty()) {
        out.epochs = epoch;
        out.reference = model.params();
        return out;
      }
    }
  }
  fail(ErrorKind::Convergence, "memorization did not reproduce " + std::to_string(residual.size()) +
                                   " of " + std::to_string(examples.size()) + " answers within " +
                                   std::to_string(cfg.max_epochs) + " epochs: " + residual_list(residual));
}

// ---- evaluation -----------------------------------------------------------

Evaluation evaluate(const ToyMemorizer& model, const ForgetSplit& split, bool with_ranks,
                    std::int64_t hit_cutoff) {
  Evaluation ev;
  for (const auto* side : {&split.forget, &split.retain}) {
    for (const auto& q : *side) {
      const Example ex = model.encode(q);
      ev.generations.push_back({ex.id, model.generate(ex)});
      if (with_ranks) ev.ranks.push_back({ex.id, model.target_ranks(ex)});
    }
  }
  std::optional<std::span<const RankRecord>> ranks;
  if (with_ranks) ranks = std::span<const RankRecord>(ev.ranks);
  ev.report = aggregate(split, ev.generations, ranks, hit_cutoff);
  return ev;
}

// ---- unlearning -----------------------------------------------------------

std::vector<Example> refusal_examples(const ToyMemorizer& model, std::span<const QAPair> forget,
                                      std::span<const std::string> refusals) {
  if (refusals.empty()) fail(ErrorKind::InvalidParameter, "refusal answer list is empty");
  std::vector<Example> out;
  out.reserve(forget.size());
  for (std::size_t i = 0; i < forget.size(); ++i) {
    out.push_back(model.encode(forget[i], refusals[i % refusals.size()]));
  }
  return out;
}

LossResult unlearning_objective(const Parameters& p, const Parameters& reference,
                                const UnlearnMethod& method, std::span<const Example> forget,
                                std::span<const Example> retain,
                                std::span<const Example> forget_refusal,
                                std::span<const double> reference_logprob) {
  switch (method.kind) {
    case MethodKind::GA: {
      LossResult r = loss_ga(p, forget);
      r.value = -r.value;
      for (double& g : r.gradient.flat()) g = -g;
      return r;
    }
    case MethodKind::GD: return loss_gd(p, forget, retain);
    case MethodKind::UKL: return loss_ukl(p, reference, forget, retain);
    case MethodKind::DPO: return loss_dpo(p, retain, forget_refusal);
    case MethodKind::NPO: return loss_npo(p, reference_logprob, forget, method.beta);
  }
  fail(ErrorKind::InvalidParameter, "unknown method");
}

SimResult run_unlearning(ToyMemorizer& model, const Parameters& reference, const ForgetSplit& split,
                         const UnlearnMethod& method, const TrainConfig& cfg) {
  if (!(cfg.learning_rate >= 0.0) || !std::isfinite(cfg.learning_rate)) {
    fail(ErrorKind::InvalidParameter, "learning rate must be a finite non-negative number");
  }
  if (cfg.epochs == 0 || cfg.batch_size == 0) {
    fail(ErrorKind::InvalidParameter, "epochs and batch size must be positive");
  }
  if (method.kind == MethodKind::NPO && !(method.beta > 0.0)) {
    fail(ErrorKind::InvalidParameter, "NPO beta must be positive");
  }
  if (split.forget.empty()) fail(ErrorKind::InvalidParameter, "forget set is empty");
  const bool needs_retain = method.kind == MethodKind::GD || method.kind == MethodKind::UKL ||
                            method.kind == MethodKind::DPO;
  if (needs_retain && split.retain.empty()) {
    fail(ErrorKind::InvalidParameter, std::string(to_string(method.kind)) + " needs a non-empty retain set");
  }
  if (!(reference.shape() == model.shape())) {
    fail(ErrorKind::InvalidParameter, "reference parameters do not match the model");
  }

  const auto forget = model.encode(split.forget);
  const auto retain = model.encode(split.retain);
  std::vector<Example> refusal;
  if (method.kind == MethodKind::DPO) refusal = refusal_examples(model, split.forget, cfg.refusals);
  std::vector<double> ref_logprob;
  if (method.kind == MethodKind::NPO) {
    for (const auto& ex : forget) ref_logprob.push_back(sequence_logprob(reference, ex));
  }

  SimResult result{method, cfg, {}, {}};
  Adam adam(model.params().size(), cfg.adam);
  Stream rng(derive_seed(cfg.seed, "unlearn"));
  std::vector<std::size_t> order(forget.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t steps_per_epoch = (forget.size() + cfg.batch_size - 1) / cfg.batch_size;
  std::size_t step = 0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
      const auto idx = std::span<const std::size_t>(order).subspan(b, std::min(cfg.batch_size, order.size() - b));
      std::vector<Example> fb, rb, qb;
      std::vector<double> lb;
      for (auto i : idx) {
        fb.push_back(forget[i]);
        if (!retain.empty()) rb.push_back(retain[rng.index(retain.size())]);
        if (!refusal.empty()) qb.push_back(refusal[i]);
        if (!ref_logprob.empty()) lb.push_back(ref_logprob[i]);
      }
      const LossResult obj = unlearning_objective(model.params(), reference, method, fb, rb, qb, lb);
      double lr = cfg.learning_rate;
      if (cfg.warmup_first_epoch && step < steps_per_epoch) {
        lr *= static_cast<double>(step + 1) / static_cast<double>(steps_per_epoch);
      }
      ++step;
      if (!std::isfinite(obj.value) || !obj.gradient.all_finite()) {
        fail(ErrorKind::Divergence, std::string(to_string(method.kind)) + " produced a non-finite loss at epoch " +
                                        std::to_string(epoch));
      }
      adam.step(model.params(), obj.gradient, lr);
      if (!model.params().all_finite()) {
        fail(ErrorKind::Divergence, std::string(to_string(method.kind)) + " diverged at epoch " +
                                        std::to_string(epoch));
      }
    }
    if (cfg.evaluate_each_epoch || epoch == cfg.epochs) {
      Evaluation ev = evaluate(model, split, cfg.with_ranks, cfg.hit_cutoff);
      if (cfg.evaluate_each_epoch) result.trajectory.push_back(ev.report);
      if (epoch == cfg.epochs) result.final = std::move(ev);
    }
  }
  return result;
}

// ---- gradient checking ----------------------------------------------------

GradCheckReport grad_check(const Parameters& p, const LossEvaluator& evaluate,
                           const GradCheckOptions& opts) {
  GradCheckReport rep;
  const LossResult base = evaluate(p);
  const std::size_t n = p.size();
  std::vector<std::size_t> coords(n);
  std::iota(coords.begin(), coords.end(), 0);
  if (opts.samples < n) {
    Stream rng(derive_seed(opts.seed, "grad-check"));
    // Partial Fisher-Yates: the first `samples` entries are a uniform subset.
    for (std::size_t i = 0; i < opts.samples; ++i) {
      std::swap(coords[i], coords[i + rng.index(n - i)]);
    }
    coords.resize(opts.samples);
  }
  Parameters probe = p;
  for (auto c : coords) {
    const double x0 = p.flat()[c];
    probe.flat()[c] = x0 + opts.step;
    const double up = evaluate(probe).value;
    probe.flat()[c] = x0 - opts.step;
    const double down = evaluate(probe).value;
    probe.flat()[c] = x0;
    const double numeric = (up - down) / (2.0 * opts.step);
    const double analytic = base.gradient.flat()[c];
    const double abs_err = std::abs(analytic - numeric);
    const double rel = abs_err / std::max({std::abs(analytic), std::abs(numeric), opts.floor});
    if (rel > rep.max_relative_error || rep.sampled.empty()) {
      rep.max_relative_error = std::max(rep.max_relative_error, rel);
      rep.worst_coordinate = c;
    }
    rep.max_absolute_error = std::max(rep.max_absolute_error, abs_err);
    rep.sampled.push_back(c);
    rep.analytic.push_back(analytic);
    rep.numeric.push_back(numeric);
  }
  rep.coordinates = coords.size();
  return rep;
}

}  // namespace pistol::sim
