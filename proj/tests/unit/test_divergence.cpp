#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <gtest/gtest.h>

#include "isdm/divergence.hpp"
#include "isdm/rng.hpp"

using namespace isdm;

namespace {

// Independent long-double evaluation used as the reference for kl_finite.
long double reference_kl(const std::vector<double>& p, const std::vector<double>& q) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) return INFINITY;
    s += static_cast<long double>(p[i]) * std::log(static_cast<long double>(p[i]) / q[i]);
  }
  return s;
}

std::vector<double> random_probs(SplitMix64& rng, std::size_t n, bool allow_zero) {
  std::vector<double> w(n);
  double s = 0.0;
  for (auto& v : w) {
    v = -std::log(rng.uniform());
    if (allow_zero && rng.uniform() < 0.2) v = 0.0;
    s += v;
  }
  if (s == 0.0) {
    w[0] = 1.0;
    s = 1.0;
  }
  for (auto& v : w) v /= s;
  return w;
}

}  // namespace

TEST(KlBernoulli, HandValues) {
  EXPECT_DOUBLE_EQ(kl_bernoulli(0.5, 0.5), 0.0);
  EXPECT_NEAR(kl_bernoulli(1.0, 0.5), std::numbers::ln2, 1e-15);
  EXPECT_NEAR(kl_bernoulli(0.9, 0.5), 0.9 * std::log(1.8) + 0.1 * std::log(0.2), 1e-15);
  EXPECT_NEAR(kl_bernoulli(0.9, 0.5), 0.368064, 1e-6);
}

TEST(KlBernoulli, InfiniteAndRangeErrors) {
  EXPECT_EQ(kl_bernoulli(0.5, 0.0), kInfinity);
  EXPECT_EQ(kl_bernoulli(0.5, 1.0), kInfinity);
  EXPECT_DOUBLE_EQ(kl_bernoulli(0.0, 0.0), 0.0);
  EXPECT_THROW(kl_bernoulli(1.1, 0.5), DomainError);
  EXPECT_THROW(kl_bernoulli(0.5, -0.1), DomainError);
}

TEST(GaussianDivergences, HandValues) {
  EXPECT_DOUBLE_EQ(kl_gaussian_unit_var(0.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(kl_gaussian_unit_var(0.0, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(kl_gaussian_unit_var(1.0, -1.0), 2.0);
  EXPECT_DOUBLE_EQ(tv_gaussian_unit_var(0.0, 0.0), 0.0);
  EXPECT_NEAR(tv_gaussian_unit_var(-1.0, 1.0), 0.682689492137086, 1e-12);
  const double far = tv_gaussian_unit_var(0.0, 1e6);
  EXPECT_GT(far, 0.9999);
  EXPECT_LE(far, 1.0);
}

TEST(GaussianDivergences, TvMatchesBoostNormalCdf) {
  boost::math::normal_distribution<double> n01;
  for (double d : {1e-8, 0.01, 0.3, 1.0, 2.5, 7.0}) {
    const double expected = 2.0 * boost::math::cdf(n01, d / 2.0) - 1.0;
    EXPECT_NEAR(tv_gaussian_unit_var(0.0, d), expected, 1e-14) << d;
    EXPECT_DOUBLE_EQ(tv_gaussian_unit_var(0.0, d), tv_gaussian_unit_var(d, 0.0));
  }
}

TEST(FiniteDist, Validation) {
  EXPECT_NO_THROW(dense_dist({0.25, 0.75}));
  EXPECT_THROW(dense_dist({0.5, 0.6}), DomainError);
  EXPECT_THROW(dense_dist({-0.1, 1.1}), DomainError);
  EXPECT_THROW(dense_dist({}), DomainError);
  EXPECT_THROW(FiniteDist<int>({1, 2}, {1.0}), DomainError);
  const auto u = FiniteDist<int>::uniform({3, 4, 5, 6});
  EXPECT_DOUBLE_EQ(u.prob(2), 0.25);
}

TEST(KlFinite, HandValues) {
  const auto u = dense_dist({0.25, 0.25, 0.25, 0.25});
  EXPECT_DOUBLE_EQ(kl_finite(u, u), 0.0);
  EXPECT_NEAR(kl_finite(dense_dist({1.0, 0.0}), dense_dist({0.5, 0.5})), std::numbers::ln2, 1e-15);
  EXPECT_EQ(kl_finite(dense_dist({0.5, 0.5}), dense_dist({1.0, 0.0})), kInfinity);
  EXPECT_THROW(kl_finite(dense_dist({1.0}), dense_dist({0.5, 0.5})), DomainError);
}

TEST(TvFinite, HandValues) {
  const auto p = dense_dist({0.9, 0.1});
  EXPECT_DOUBLE_EQ(tv_finite(p, p), 0.0);
  EXPECT_DOUBLE_EQ(tv_finite(dense_dist({1.0, 0.0}), dense_dist({0.0, 1.0})), 1.0);
  EXPECT_NEAR(tv_finite(p, dense_dist({0.5, 0.5})), 0.4, 1e-15);
}

TEST(KlFinite, MatchesLongDoubleReference) {
  SplitMix64 rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 8);
    const auto p = random_probs(rng, n, true);
    const auto q = random_probs(rng, n, true);
    const long double ref = reference_kl(p, q);
    const double got = kl_finite(dense_dist(p), dense_dist(q));
    if (std::isinf(static_cast<double>(ref))) {
      EXPECT_EQ(got, kInfinity);
    } else {
      EXPECT_NEAR(got, static_cast<double>(ref), 1e-12);
      EXPECT_GE(got, 0.0);
    }
  }
}

TEST(BretagnolleHuber, HandValues) {
  EXPECT_DOUBLE_EQ(bretagnolle_huber_tv_upper(0.0), 0.5);
  EXPECT_NEAR(bretagnolle_huber_tv_upper(std::log(4.0 / 3.0)), 0.625, 1e-15);
  EXPECT_NEAR(bretagnolle_huber_tv_upper(50.0), 1.0, 1e-15);
  EXPECT_THROW(bretagnolle_huber_tv_upper(-1.0), DomainError);
}

TEST(BretagnolleHuber, HoldsOnRandomPairs) {
  SplitMix64 rng(2024);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform() * 6);
    const auto p = dense_dist(random_probs(rng, n, false));
    const auto q = dense_dist(random_probs(rng, n, false));
    const double kl = kl_finite(p, q);
    ASSERT_TRUE(std::isfinite(kl));
    EXPECT_LE(tv_finite(p, q), bretagnolle_huber_tv_upper(kl) + 1e-15);
    // Pinsker as a second, independent ceiling.
    EXPECT_LE(tv_finite(p, q), std::sqrt(kl / 2.0) + 1e-15);
  }
}

TEST(LeCamThreshold, HandValuesAndDomain) {
  EXPECT_NEAR(lecam_kl_threshold(0.25), std::log(4.0 / 3.0), 1e-15);
  EXPECT_NEAR(lecam_kl_threshold(0.05), 1.660731, 1e-6);
  EXPECT_NEAR(lecam_kl_threshold(0.05), std::log(1.0 / 0.19), 1e-14);
  EXPECT_THROW(lecam_kl_threshold(0.5), DomainError);
  EXPECT_THROW(lecam_kl_threshold(0.0), DomainError);
  double previous = kInfinity;
  for (double d = 0.01; d < 0.5; d += 0.01) {
    const double t = lecam_kl_threshold(d);
    EXPECT_LT(t, previous);
    EXPECT_GT(t, 0.0);
    previous = t;
  }
}

TEST(DfeThreshold, HandValues) {
  EXPECT_DOUBLE_EQ(dfe_threshold(DivergenceKind::KL, 0.1, 0.95), 0.0);
  EXPECT_NEAR(dfe_threshold(DivergenceKind::KL, 0.1, 0.5), kl_bernoulli(0.9, 0.5), 1e-15);
  EXPECT_NEAR(dfe_threshold(DivergenceKind::TV, 0.1, 0.5), 0.4, 1e-15);
  EXPECT_THROW(dfe_threshold(DivergenceKind::KL, 1.5, 0.5), DomainError);
}

TEST(DivergenceKind, ParsesOnlyKlAndTv) {
  EXPECT_EQ(parse_divergence_kind("KL"), DivergenceKind::KL);
  EXPECT_EQ(parse_divergence_kind("tv"), DivergenceKind::TV);
  EXPECT_THROW(parse_divergence_kind("hellinger"), DomainError);
  EXPECT_EQ(to_string(DivergenceKind::KL), "KL");
}
