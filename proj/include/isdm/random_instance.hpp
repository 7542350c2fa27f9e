#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "isdm/divergence.hpp"
#include "isdm/isdm.hpp"
#include "isdm/rng.hpp"

namespace isdm {

namespace detail {

inline std::vector<double> random_simplex(SplitMix64& rng, std::size_t n) {
  // Normalized exponentials: uniform on the simplex.
  std::vector<double> w(n);
  double s = 0.0;
  for (double& v : w) s += (v = -std::log(rng.uniform()));
  for (double& v : w) v /= s;
  return w;
}

inline std::size_t below(SplitMix64& rng, std::size_t n) {
  return static_cast<std::size_t>(rng.uniform() * static_cast<double>(n)) % n;
}

}  // namespace detail

// Small random instance for property tests: 2-3 models, 2 actions,
// 2 observations, horizon 1-3, losses drawn from {0, 0.5, 1, 2}. A quarter of
// the instances share one kernel set across models (indistinguishable
// models); half use a loss that depends only on (model, last action).
inline FiniteISDM random_small_instance(std::uint64_t seed) {
  static constexpr std::array<double, 4> kLevels{0.0, 0.5, 1.0, 2.0};
  SplitMix64 rng(seed, {0x1157});
  const std::size_t num_models = 2 + detail::below(rng, 2);
  const std::size_t horizon = 1 + detail::below(rng, 3);
  const bool shared = detail::below(rng, 4) == 0;
  const bool by_last_action = detail::below(rng, 2) == 0;

  std::vector<Model> models;
  for (std::size_t m = 0; m < num_models; ++m) {
    if (shared && m > 0) {
      models.push_back(models.front());
      continue;
    }
    Model model;
    for (std::size_t a = 0; a < 2; ++a) model.kernels.push_back(dense_dist(detail::random_simplex(rng, 2)));
    models.push_back(std::move(model));
  }
  auto prior = dense_dist(detail::random_simplex(rng, num_models));

  std::size_t transcripts = 1;
  for (std::size_t t = 0; t < horizon; ++t) transcripts *= 4;
  std::vector<std::vector<double>> table(num_models, std::vector<double>(transcripts));
  if (by_last_action) {
    std::vector<std::array<double, 2>> by_action(num_models);
    for (auto& row : by_action) {
      for (double& v : row) v = kLevels[detail::below(rng, kLevels.size())];
    }
    for (std::size_t m = 0; m < num_models; ++m) {
      for (std::size_t x = 0; x < transcripts; ++x) table[m][x] = by_action[m][(x % 4) / 2];
    }
  } else {
    for (auto& row : table) {
      for (double& v : row) v = kLevels[detail::below(rng, kLevels.size())];
    }
  }
  return FiniteISDM::with_loss_table({"a0", "a1"}, {"o0", "o1"}, std::move(models),
                                     std::move(prior), horizon, std::move(table));
}

// Random Bernoulli bandit: K in {2,3} arms, horizon 1-3, one model per
// prior atom, success probabilities in [0.05, 0.95] so every KL is finite.
inline FiniteISDM random_bernoulli_bandit(std::uint64_t seed, std::size_t num_models = 2) {
  SplitMix64 rng(seed, {0xBE2});
  const std::size_t arms = 2 + detail::below(rng, 2);
  const std::size_t horizon = 1 + detail::below(rng, 3);
  std::vector<std::string> actions;
  for (std::size_t a = 0; a < arms; ++a) actions.push_back("arm" + std::to_string(a));
  std::vector<Model> models;
  for (std::size_t m = 0; m < num_models; ++m) {
    Model model;
    for (std::size_t a = 0; a < arms; ++a) {
      const double p = 0.05 + 0.9 * rng.uniform();
      model.kernels.push_back(dense_dist({1.0 - p, p}));
    }
    models.push_back(std::move(model));
  }
  std::vector<double> uniform(num_models, 1.0 / static_cast<double>(num_models));
  return FiniteISDM::with_regret_loss(std::move(actions), {"0", "1"}, std::move(models),
                                      dense_dist(std::move(uniform)), horizon);
}

// Uniformly random deterministic policy tree.
inline DeterministicPolicy random_policy(const FiniteISDM& inst, SplitMix64& rng) {
  const std::size_t n = DeterministicPolicy::num_nodes(inst.num_observations(), inst.horizon());
  std::vector<std::size_t> nodes(n);
  for (auto& a : nodes) a = detail::below(rng, inst.num_actions());
  return DeterministicPolicy(inst.num_actions(), inst.num_observations(), inst.horizon(),
                             std::move(nodes));
}

}  // namespace isdm
