#include <cmath>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <gtest/gtest.h>

#include "isdm/divergence.hpp"
#include "isdm/isdm.hpp"
#include "isdm/random_instance.hpp"
#include "isdm/rng.hpp"

using namespace isdm;

namespace {

FiniteISDM single_step(std::vector<double> k0, std::vector<double> k1) {
  Model m{{dense_dist(std::move(k0)), dense_dist(std::move(k1))}};
  return FiniteISDM(
      {"a1", "a2"}, {"o1", "o2"}, {m}, dense_dist({1.0}), 1,
      [](std::size_t, const Transcript& x) { return static_cast<double>(x.steps[0].action); });
}

// Probability of a transcript computed step by step through the policy's
// history interface, independent of the forward enumeration.
double product_probability(const FiniteISDM& inst, std::size_t m, const DeterministicPolicy& pi,
                           const Transcript& x) {
  double p = 1.0;
  for (std::size_t t = 0; t < x.steps.size(); ++t) {
    const std::span<const Step> history(x.steps.data(), t);
    if (pi.action(history) != x.steps[t].action) return 0.0;
    p *= inst.kernel(m, x.steps[t].action, x.steps[t].observation);
  }
  return p;
}

}  // namespace

TEST(FiniteISDM, RejectsMalformedInstances) {
  Model good{{dense_dist({0.5, 0.5}), dense_dist({0.5, 0.5})}};
  auto zero = [](std::size_t, const Transcript&) { return 0.0; };
  EXPECT_THROW(FiniteISDM({"a", "b"}, {"x", "y"}, {good}, dense_dist({1.0}), 0, zero), DomainError);
  EXPECT_THROW(FiniteISDM({"a", "b"}, {"x", "y"}, {good}, dense_dist({0.5, 0.5}), 1, zero),
               DomainError);
  Model short_model{{dense_dist({1.0})}};
  EXPECT_THROW(FiniteISDM({"a", "b"}, {"x", "y"}, {short_model}, dense_dist({1.0}), 1, zero),
               DomainError);
  auto negative = [](std::size_t, const Transcript&) { return -1.0; };
  EXPECT_THROW(FiniteISDM({"a", "b"}, {"x", "y"}, {good}, dense_dist({1.0}), 1, negative),
               DomainError);
  auto infinite = [](std::size_t, const Transcript&) { return kInfinity; };
  EXPECT_THROW(FiniteISDM({"a", "b"}, {"x", "y"}, {good}, dense_dist({1.0}), 1, infinite),
               DomainError);
  EXPECT_THROW(FiniteISDM::with_regret_loss({"a", "b"}, {"x", "y"}, {good}, dense_dist({1.0}), 1),
               DomainError);
}

TEST(FiniteISDM, TranscriptIndexRoundTrips) {
  const auto inst = random_bernoulli_bandit(9);
  for (std::size_t x = 0; x < inst.num_transcripts(); ++x) {
    EXPECT_EQ(inst.index_of(inst.transcript(x)), x);
  }
}

TEST(FiniteISDM, TranscriptCapIsEnforced) {
  Model m{{dense_dist({0.5, 0.5}), dense_dist({0.5, 0.5})}};
  auto zero = [](std::size_t, const Transcript&) { return 0.0; };
  EXPECT_THROW(FiniteISDM({"a", "b"}, {"x", "y"}, {m}, dense_dist({1.0}), 10, zero), CapExceeded);
  EXPECT_THROW(FiniteISDM({"a", "b"}, {"x", "y"}, {m}, dense_dist({1.0}), 100, zero), CapExceeded);
  EXPECT_NO_THROW(FiniteISDM({"a", "b"}, {"x", "y"}, {m}, dense_dist({1.0}), 9, zero));
}

TEST(EnumeratePolicies, Counts) {
  const auto t1 = single_step({0.7, 0.3}, {0.5, 0.5});
  EXPECT_EQ(enumerate_policies(t1).size(), 2u);
  Model m{{dense_dist({0.5, 0.5}), dense_dist({0.5, 0.5})}};
  auto zero = [](std::size_t, const Transcript&) { return 0.0; };
  const FiniteISDM t2({"a", "b"}, {"x", "y"}, {m}, dense_dist({1.0}), 2, zero);
  const auto policies = enumerate_policies(t2);
  EXPECT_EQ(policies.size(), 8u);
  for (std::size_t i = 1; i < policies.size(); ++i) {
    EXPECT_LT(policies[i - 1].node_actions(), policies[i].node_actions());
  }
  const FiniteISDM t5({"a", "b"}, {"x", "y"}, {m}, dense_dist({1.0}), 5, zero);
  EXPECT_THROW(enumerate_policies(t5), CapExceeded);  // 2^31 trees
}

TEST(TrajectoryLaw, SingleStepAndDegenerateKernels) {
  const auto inst = single_step({0.7, 0.3}, {0.5, 0.5});
  const auto law = trajectory_law(inst, 0, DeterministicPolicy::constant(inst, 0));
  EXPECT_DOUBLE_EQ(law.prob(0), 0.7);
  EXPECT_DOUBLE_EQ(law.prob(1), 0.3);
  EXPECT_DOUBLE_EQ(law.prob(2), 0.0);

  Model det{{dense_dist({0.0, 1.0}), dense_dist({1.0, 0.0})}};
  auto zero = [](std::size_t, const Transcript&) { return 0.0; };
  const FiniteISDM t2({"a", "b"}, {"x", "y"}, {det}, dense_dist({1.0}), 2, zero);
  for (const auto& pi : enumerate_policies(t2)) {
    const auto l = trajectory_law(t2, 0, pi);
    std::size_t support = 0;
    for (std::size_t x = 0; x < l.size(); ++x) support += l.prob(x) > 0.0;
    EXPECT_EQ(support, 1u);
    EXPECT_NEAR(l.total_mass(), 1.0, 1e-15);
  }
}

TEST(TrajectoryLaw, MatchesStepwiseProductOnRandomInstances) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto inst = random_small_instance(seed);
    SplitMix64 rng(seed, {1});
    for (int k = 0; k < 5; ++k) {
      const auto pi = random_policy(inst, rng);
      for (std::size_t m = 0; m < inst.num_models(); ++m) {
        const auto law = trajectory_law(inst, m, pi);
        EXPECT_NEAR(law.total_mass(), 1.0, 1e-12);
        for (std::size_t x = 0; x < inst.num_transcripts(); ++x) {
          EXPECT_NEAR(law.prob(x), product_probability(inst, m, pi, inst.transcript(x)), 1e-15);
        }
      }
    }
  }
}

TEST(TrajectoryLaw, MonteCarloGoodnessOfFit) {
  // Chi-square test of simulate() against the exact law at level 0.001.
  const auto inst = random_bernoulli_bandit(4);
  SplitMix64 rng(4, {2});
  const auto pi = random_policy(inst, rng);
  const auto law = trajectory_law(inst, 0, pi);
  const std::size_t n = 200'000;
  std::vector<double> counts(inst.num_transcripts(), 0.0);
  for (std::size_t i = 0; i < n; ++i) counts[inst.index_of(simulate(inst, 0, pi, i).transcript)] += 1;
  double chi2 = 0.0;
  std::size_t cells = 0;
  for (std::size_t x = 0; x < counts.size(); ++x) {
    const double e = law.prob(x) * n;
    if (e == 0.0) {
      EXPECT_EQ(counts[x], 0.0);
      continue;
    }
    chi2 += (counts[x] - e) * (counts[x] - e) / e;
    ++cells;
  }
  ASSERT_GE(cells, 2u);
  const boost::math::chi_squared_distribution<double> dist(static_cast<double>(cells - 1));
  EXPECT_LT(chi2, boost::math::quantile(dist, 0.999));
}

TEST(Simulate, DeterministicPerSeed) {
  const auto inst = random_small_instance(3);
  SplitMix64 rng(3);
  const auto pi = random_policy(inst, rng);
  for (std::uint64_t s = 0; s < 20; ++s) {
    EXPECT_EQ(simulate(inst, 0, pi, s).transcript, simulate(inst, 0, pi, s).transcript);
  }
  Model det{{dense_dist({0.0, 1.0}), dense_dist({1.0, 0.0})}};
  auto zero = [](std::size_t, const Transcript&) { return 0.0; };
  const FiniteISDM t2({"a", "b"}, {"x", "y"}, {det}, dense_dist({1.0}), 2, zero);
  const auto p = DeterministicPolicy::constant(t2, 0);
  const auto first = simulate(t2, 0, p, 1).transcript;
  for (std::uint64_t s = 2; s < 30; ++s) EXPECT_EQ(simulate(t2, 0, p, s).transcript, first);
}

TEST(MixtureLaw, HandValues) {
  const auto inst = single_step({0.7, 0.3}, {0.4, 0.6});
  const auto a = DeterministicPolicy::constant(inst, 0);
  const auto b = DeterministicPolicy::constant(inst, 1);
  const auto la = trajectory_law(inst, 0, a);
  const PolicyMixture single({a}, dense_dist({1.0}));
  EXPECT_EQ(mixture_law(inst, 0, single).probs().size(), la.size());
  for (std::size_t x = 0; x < la.size(); ++x) EXPECT_DOUBLE_EQ(mixture_law(inst, 0, single).prob(x), la.prob(x));
  const PolicyMixture twin({a, a}, dense_dist({0.5, 0.5}));
  for (std::size_t x = 0; x < la.size(); ++x) EXPECT_DOUBLE_EQ(mixture_law(inst, 0, twin).prob(x), la.prob(x));
  const auto half = mixture_law(inst, 0, PolicyMixture({a, b}, dense_dist({0.5, 0.5})));
  EXPECT_DOUBLE_EQ(half.prob(0), 0.35);
  EXPECT_DOUBLE_EQ(half.prob(1), 0.15);
  EXPECT_DOUBLE_EQ(half.prob(2), 0.2);
  EXPECT_DOUBLE_EQ(half.prob(3), 0.3);
}

TEST(LossDistribution, PushforwardOfTranscriptLaw) {
  const auto inst = single_step({0.7, 0.3}, {0.4, 0.6});
  const auto law = trajectory_law(inst, 0, DeterministicPolicy::constant(inst, 1));
  const auto d = loss_distribution(inst, 0, law);
  ASSERT_EQ(d.atoms().size(), 1u);  // both transcripts of action a2 have loss 1
  EXPECT_DOUBLE_EQ(d.atoms()[0].value, 1.0);
  EXPECT_DOUBLE_EQ(d.atoms()[0].prob, 1.0);

  // Two-model, T=1 instance with loss 1{action != model}.
  Model m{{dense_dist({1.0}), dense_dist({1.0})}};
  const FiniteISDM ind({"a0", "a1"}, {"o"}, {m, m}, dense_dist({0.5, 0.5}), 1,
                       [](std::size_t mi, const Transcript& x) { return x.steps[0].action == mi ? 0.0 : 1.0; });
  const auto mix = mixture_law(ind, 0, PolicyMixture(enumerate_policies(ind), dense_dist({0.5, 0.5})));
  const auto bern = loss_distribution(ind, 0, mix);
  ASSERT_EQ(bern.atoms().size(), 2u);
  EXPECT_DOUBLE_EQ(bern.atoms()[0].prob, 0.5);
  EXPECT_DOUBLE_EQ(bern.atoms()[1].value, 1.0);
}

TEST(DivergenceDecomposition, ExactOnBernoulliBandits) {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const auto inst = random_bernoulli_bandit(seed);
    SplitMix64 rng(seed, {3});
    for (int k = 0; k < 10; ++k) {
      const auto pi = random_policy(inst, rng);
      const auto p1 = trajectory_law(inst, 0, pi);
      const auto p2 = trajectory_law(inst, 1, pi);
      const auto pulls = expected_pulls(inst, p1);
      double decomposed = 0.0;
      for (std::size_t a = 0; a < inst.num_actions(); ++a) {
        decomposed += pulls[a] * kl_finite(inst.models()[0].kernels[a], inst.models()[1].kernels[a]);
      }
      EXPECT_NEAR(kl_finite(p1, p2), decomposed, 1e-9);
      double total = 0.0;
      for (double v : pulls) total += v;
      EXPECT_NEAR(total, static_cast<double>(inst.horizon()), 1e-12);
    }
  }
}

TEST(RegretLoss, CountsGapTimesPulls) {
  const auto inst = random_bernoulli_bandit(12);
  for (std::size_t m = 0; m < inst.num_models(); ++m) {
    std::vector<double> means;
    for (const auto& k : inst.models()[m].kernels) means.push_back(k.prob(1));
    const double best = *std::max_element(means.begin(), means.end());
    for (std::size_t x = 0; x < inst.num_transcripts(); ++x) {
      double expected = 0.0;
      for (const auto& s : inst.transcript(x).steps) expected += best - means[s.action];
      EXPECT_NEAR(inst.loss(m, x), expected, 1e-12);
    }
  }
}

TEST(DeterministicPolicy, FromRuleTabulatesHistories) {
  const auto inst = random_bernoulli_bandit(2);
  // Follow the last observation: play arm 1 after a success, else arm 0.
  auto rule = [](std::span<const Step> h) -> std::size_t {
    return !h.empty() && h.back().observation == 1 ? 1 : 0;
  };
  const auto pi = DeterministicPolicy::from_rule(inst, rule);
  for (std::size_t x = 0; x < inst.num_transcripts(); ++x) {
    const auto tr = inst.transcript(x);
    for (std::size_t t = 0; t < tr.steps.size(); ++t) {
      const std::span<const Step> h(tr.steps.data(), t);
      EXPECT_EQ(pi.action(h), rule(h));
    }
  }
  EXPECT_THROW(DeterministicPolicy(2, 2, 2, {0, 1}), DomainError);
  EXPECT_THROW(DeterministicPolicy(2, 2, 1, {2}), DomainError);
}
