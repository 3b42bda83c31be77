#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pistol/error.hpp"
#include "pistol/toy_model.hpp"
#include "pistol/unlearn.hpp"
#include "sim_fixtures.hpp"

using namespace pistol;
using namespace pistol::sim;

namespace {

struct Batch {
  std::vector<Example> forget;
  std::vector<Example> retain;
  std::vector<Example> refusal;
};

Batch batch_for(const ToyMemorizer& m) {
  const ForgetSplit split = split_forget(test::chain3(), {"01"});
  Batch b;
  const auto f = std::span<const QAPair>(split.forget).first(4);
  const auto r = std::span<const QAPair>(split.retain).first(4);
  b.forget = m.encode(f);
  b.retain = m.encode(r);
  b.refusal = refusal_examples(m, f, default_refusals());
  return b;
}

double norm(const Parameters& g) {
  double s = 0;
  for (double x : g.flat()) s += x * x;
  return std::sqrt(s);
}

void perturb(Parameters& p, std::uint64_t seed, double sigma) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, sigma);
  for (double& x : p.flat()) x += d(rng);
}

}  // namespace

class AllLosses : public ::testing::TestWithParam<MethodKind> {};

TEST_P(AllLosses, GradientMatchesCentralDifferences) {
  for (std::uint64_t point = 0; point < 3; ++point) {
    const ToyMemorizer m = test::small_model(100 + point);
    Parameters reference = m.params();
    perturb(reference, 7 + point, 0.05);
    const Batch b = batch_for(m);
    std::vector<double> ref_lp;
    for (const auto& ex : b.forget) ref_lp.push_back(sequence_logprob(reference, ex));
    const UnlearnMethod method{GetParam(), 0.1};
    const auto eval = [&](const Parameters& p) {
      return unlearning_objective(p, reference, method, b.forget, b.retain, b.refusal, ref_lp);
    };
    GradCheckOptions opts;
    opts.seed = point;
    const GradCheckReport r = grad_check(m.params(), eval, opts);
    EXPECT_GE(r.coordinates, 256u);
    EXPECT_LT(r.max_relative_error, 1e-4) << to_string(GetParam()) << " point " << point;
  }
}

INSTANTIATE_TEST_SUITE_P(Methods, AllLosses,
                         ::testing::Values(MethodKind::GA, MethodKind::GD, MethodKind::UKL, MethodKind::DPO,
                                           MethodKind::NPO),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(Losses, CentralDifferenceErrorIsSecondOrder) {
  const ToyMemorizer m = test::small_model(3);
  const Batch b = batch_for(m);
  const auto eval = [&](const Parameters& p) { return loss_ga(p, b.forget); };
  GradCheckOptions opts;
  opts.samples = 64;
  opts.step = 1e-3;
  const double e1 = grad_check(m.params(), eval, opts).max_absolute_error;
  opts.step = 2e-3;
  const double e2 = grad_check(m.params(), eval, opts).max_absolute_error;
  EXPECT_GT(e2 / e1, 3.0);
  EXPECT_LT(e2 / e1, 5.0);
}

TEST(Losses, UniformPointBiasGradient) {
  ToyMemorizer m = test::small_model(1);
  m.params().set_zero();
  const Batch b = batch_for(m);
  const auto eval = [&](const Parameters& p) { return loss_nll(p, b.retain); };
  const LossResult r = eval(m.params());
  const std::size_t v = m.shape().vocab;
  const std::size_t off = m.params().bias_offset();
  const double h = 1e-5;
  for (std::size_t j = 0; j < v; j += std::max<std::size_t>(1, v / 40)) {
    Parameters up = m.params(), down = m.params();
    up.flat()[off + j] += h;
    down.flat()[off + j] -= h;
    const double numeric = (eval(up).value - eval(down).value) / (2 * h);
    EXPECT_NEAR(r.gradient.flat()[off + j], numeric, 1e-8) << j;
  }
}

TEST(Losses, GaAscentIncreasesForgetLoss) {
  const auto& base = test::dataset1_model();
  const ForgetSplit split = split_forget(test::dataset1(), {"AB"});
  const auto forget = base.model.encode(split.forget);
  const LossResult before = loss_ga(base.model.params(), forget);
  Parameters p = base.model.params();
  auto x = p.flat();
  auto g = before.gradient.flat();
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += 1e-3 * g[i];
  EXPECT_GT(loss_ga(p, forget).value, before.value);
}

TEST(Losses, GaOfOneExampleIsItsLoss) {
  const ToyMemorizer m = test::small_model(4);
  const Batch b = batch_for(m);
  const std::vector<Example> one{b.forget[0]};
  const double l = example_nll(m.params(), b.forget[0], nullptr, 0.0) / b.forget[0].targets.size();
  EXPECT_NEAR(loss_ga(m.params(), one).value, l, 1e-14);
  EXPECT_THROW(loss_ga(m.params(), {}), Error);
}

TEST(Losses, GdComposesFromGaAndRetainLoss) {
  const ToyMemorizer m = test::small_model(5);
  const Batch b = batch_for(m);
  const LossResult gd = loss_gd(m.params(), b.forget, b.retain);
  const LossResult ga = loss_ga(m.params(), b.forget);
  const LossResult nll = loss_nll(m.params(), b.retain);
  EXPECT_NEAR(gd.value, -ga.value + nll.value, 1e-12);
  for (std::size_t i = 0; i < gd.gradient.size(); ++i) {
    ASSERT_NEAR(gd.gradient.flat()[i], -ga.gradient.flat()[i] + nll.gradient.flat()[i], 1e-12);
  }
  EXPECT_THROW(loss_gd(m.params(), b.forget, {}), Error);
}

TEST(Losses, GdWithZeroRetainLossIsMinusForget) {
  const auto& base = test::dataset1_model();
  const ForgetSplit split = split_forget(test::dataset1(), {"AB"});
  const auto forget = base.model.encode(std::span<const QAPair>(split.forget));
  const auto retain = base.model.encode(std::span<const QAPair>(split.retain).first(8));
  const double lr = loss_nll(base.model.params(), retain).value;
  const LossResult gd = loss_gd(base.model.params(), forget, retain);
  EXPECT_NEAR(gd.value, -loss_ga(base.model.params(), forget).value, lr + 1e-12);
}

TEST(Losses, KlIsZeroAtReferenceAndNonNegative) {
  const ToyMemorizer m = test::small_model(6);
  const Batch b = batch_for(m);
  EXPECT_EQ(kl_term(m.params(), m.params(), b.retain).value, 0.0);
  for (std::uint64_t s = 0; s < 1000; ++s) {
    Parameters p = m.params();
    perturb(p, s, 0.2);
    ASSERT_GE(kl_term(p, m.params(), b.retain).value, 0.0) << s;
  }
  const ToyMemorizer other = test::small_model(6, 4);
  EXPECT_THROW(kl_term(m.params(), other.params(), b.retain), Error);
}

TEST(Losses, UklAtReferenceEqualsMinusForget) {
  const ToyMemorizer m = test::small_model(7);
  const Batch b = batch_for(m);
  const LossResult ukl = loss_ukl(m.params(), m.params(), b.forget, b.retain);
  EXPECT_DOUBLE_EQ(ukl.value, -loss_ga(m.params(), b.forget).value);
}

TEST(Losses, DpoIsDescentOnRetainAndRefusals) {
  const ToyMemorizer m = test::small_model(8);
  const Batch b = batch_for(m);
  const LossResult dpo = loss_dpo(m.params(), b.retain, b.refusal);
  EXPECT_NEAR(dpo.value, loss_nll(m.params(), b.retain).value + loss_nll(m.params(), b.refusal).value, 1e-12);
  EXPECT_GT(dpo.value, 0.0);
  for (const auto& r : default_refusals()) {
    for (const auto& tok : tokenize(r)) EXPECT_TRUE(m.vocab().id(tok)) << tok;
  }
  EXPECT_THROW(refusal_examples(m, split_forget(test::chain3(), {"01"}).forget, {}), Error);
}

TEST(Losses, NpoAtReferenceIsTwoLogTwoOverBeta) {
  const ToyMemorizer m = test::small_model(9);
  const Batch b = batch_for(m);
  for (double beta : {0.1, 1.0, 2.5}) {
    EXPECT_NEAR(loss_npo(m.params(), m.params(), b.forget, beta).value, 2.0 / beta * std::log(2.0), 1e-12);
  }
  EXPECT_THROW(loss_npo(m.params(), m.params(), b.forget, 0.0), Error);
  EXPECT_THROW(loss_npo(m.params(), m.params(), b.forget, -1.0), Error);
}

TEST(Losses, NpoWeightVanishesOnForgottenExample) {
  const ToyMemorizer m = test::small_model(10);
  const Batch b = batch_for(m);
  const std::vector<Example> one{b.forget[0]};
  // Reference likelihood 1e6 times the model's: pi / pi_ref = 1e-6.
  const std::vector<double> ref{sequence_logprob(m.params(), one[0]) + std::log(1e6)};
  const double npo = norm(loss_npo(m.params(), ref, one, 1.0).gradient);
  const double ga = norm(loss_ga(m.params(), one).gradient);
  EXPECT_LT(npo, 1e-3 * ga);
}
