#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "isdm/bounds.hpp"
#include "isdm/divergence.hpp"
#include "isdm/error.hpp"
#include "isdm/normal.hpp"
#include "isdm/parallel.hpp"
#include "isdm/quantile.hpp"
#include "isdm/rng.hpp"

namespace isdm::bandit {

// Two arms with unit-variance Gaussian rewards.
struct GaussianTwoArmModel {
  double mu1;
  double mu2;

  double mean(std::size_t arm) const { return arm == 0 ? mu1 : mu2; }
  double best_mean() const { return std::max(mu1, mu2); }
  double gap(std::size_t arm) const { return best_mean() - mean(arm); }

  friend bool operator==(const GaussianTwoArmModel&, const GaussianTwoArmModel&) = default;
};

struct Uniform {};
struct EpsilonGreedy {
  double epsilon = 0.1;
};
struct ExploreThenCommit {
  std::size_t m = 10;  // pulls per arm before committing
};
struct Ucb {
  double c = 2.0;
};

using BanditAlgorithm = std::variant<Uniform, EpsilonGreedy, ExploreThenCommit, Ucb>;

inline std::string format_param(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

inline std::string name(const BanditAlgorithm& alg) {
  return std::visit(
      [](const auto& a) -> std::string {
        using A = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<A, Uniform>) return "uniform";
        if constexpr (std::is_same_v<A, EpsilonGreedy>) return "egreedy:" + format_param(a.epsilon);
        if constexpr (std::is_same_v<A, ExploreThenCommit>) return "etc:" + std::to_string(a.m);
        if constexpr (std::is_same_v<A, Ucb>) return "ucb:" + format_param(a.c);
      },
      alg);
}

// "uniform", "egreedy:0.1", "etc:10", "ucb:2"; a bare name takes the default.
inline BanditAlgorithm parse_algorithm(std::string_view spec) {
  const auto colon = spec.find(':');
  const std::string kind(spec.substr(0, colon));
  const std::string arg = colon == std::string_view::npos ? "" : std::string(spec.substr(colon + 1));
  auto number = [&](double fallback) {
    if (arg.empty()) return fallback;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(arg, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    require(used == arg.size(), "malformed algorithm parameter '" + arg + "'");
    return v;
  };
  if (kind == "uniform") {
    require(arg.empty(), "uniform takes no parameter");
    return Uniform{};
  }
  if (kind == "egreedy") return EpsilonGreedy{number(0.1)};
  if (kind == "etc") {
    const double m = number(10.0);
    require(m >= 1.0 && m == std::floor(m), "etc commit time must be a positive integer");
    return ExploreThenCommit{static_cast<std::size_t>(m)};
  }
  if (kind == "ucb") return Ucb{number(2.0)};
  throw DomainError("unknown bandit algorithm '" + std::string(spec) + "'");
}

inline void validate(const BanditAlgorithm& alg, std::size_t T) {
  require(T >= 1, "horizon must be at least 1");
  std::visit(
      [T](const auto& a) {
        using A = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<A, EpsilonGreedy>) {
          require(a.epsilon >= 0.0 && a.epsilon <= 1.0, "epsilon-greedy rate must lie in [0,1]");
        } else if constexpr (std::is_same_v<A, ExploreThenCommit>) {
          require(a.m >= 1 && 2 * a.m <= T, "etc needs 1 <= m <= T/2");
        } else if constexpr (std::is_same_v<A, Ucb>) {
          require(a.c > 0.0 && std::isfinite(a.c), "ucb width must be positive");
        }
      },
      alg);
}

struct RegretSample {
  double regret;
  std::array<std::size_t, 2> pulls;
  std::uint64_t seed;
};

// Pseudo-regret sum_a (mu* - mu_a) N_a.
inline double regret(const GaussianTwoArmModel& model, const std::array<std::size_t, 2>& pulls) {
  return model.gap(0) * static_cast<double>(pulls[0]) + model.gap(1) * static_cast<double>(pulls[1]);
}

// M1 = (+g/2, -g/2), M2 = (-g/2, +g/2).
inline std::pair<GaussianTwoArmModel, GaussianTwoArmModel> hard_pair(double g) {
  require(g > 0.0 && std::isfinite(g), "gap g must be positive");
  return {{0.5 * g, -0.5 * g}, {-0.5 * g, 0.5 * g}};
}

// (1 - eta) sqrt(2 Lambda_delta / T)
inline double optimal_gap(std::size_t T, double delta, double eta) {
  require(T >= 1, "horizon must be at least 1");
  require(eta >= 0.0 && eta < 1.0, "eta must lie in [0, 1)");
  return (1.0 - eta) * std::sqrt(2.0 * lecam_kl_threshold(delta) / static_cast<double>(T));
}

// KL between the hard-pair transcript laws: every pull shifts the mean by g,
// so the divergence decomposition gives (g^2 / 2) T for any algorithm.
inline double pair_kl(double g, std::size_t T) {
  require(g > 0.0, "gap g must be positive");
  return 0.5 * g * g * static_cast<double>(T);
}

namespace detail {

inline std::size_t argmax_mean(const std::array<double, 2>& sums,
                               const std::array<std::size_t, 2>& pulls) {
  const double m0 = sums[0] / static_cast<double>(pulls[0]);
  const double m1 = sums[1] / static_cast<double>(pulls[1]);
  return m1 > m0 ? 1 : 0;
}

}  // namespace detail

// One T-round episode. Each step draws the algorithm's uniforms and then one
// uniform for the reward, which is mapped through the inverse normal CDF.
inline RegretSample run_episode(const GaussianTwoArmModel& model, const BanditAlgorithm& alg,
                                std::size_t T, std::uint64_t seed) {
  validate(alg, T);
  SplitMix64 rng(seed);
  std::array<std::size_t, 2> pulls{0, 0};
  std::array<double, 2> sums{0.0, 0.0};
  std::size_t committed = 2;  // etc: arm chosen after exploration

  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t arm = std::visit(
        [&](const auto& a) -> std::size_t {
          using A = std::decay_t<decltype(a)>;
          if constexpr (std::is_same_v<A, Uniform>) {
            return rng.uniform() < 0.5 ? 0 : 1;
          } else if constexpr (std::is_same_v<A, EpsilonGreedy>) {
            const double u_explore = rng.uniform();
            const double u_arm = rng.uniform();
            if (pulls[0] == 0) return 0;
            if (pulls[1] == 0) return 1;
            if (u_explore < a.epsilon) return u_arm < 0.5 ? 0 : 1;
            return detail::argmax_mean(sums, pulls);
          } else if constexpr (std::is_same_v<A, ExploreThenCommit>) {
            if (t < 2 * a.m) return t % 2;
            if (committed == 2) committed = detail::argmax_mean(sums, pulls);
            return committed;
          } else {
            if (pulls[0] == 0) return 0;
            if (pulls[1] == 0) return 1;
            const double log_t = std::log(static_cast<double>(t + 1));
            const double i0 = sums[0] / static_cast<double>(pulls[0]) +
                              a.c * std::sqrt(log_t / static_cast<double>(pulls[0]));
            const double i1 = sums[1] / static_cast<double>(pulls[1]) +
                              a.c * std::sqrt(log_t / static_cast<double>(pulls[1]));
            return i1 > i0 ? 1 : 0;
          }
        },
        alg);
    const double reward = model.mean(arm) + normal_quantile(rng.uniform());
    sums[arm] += reward;
    ++pulls[arm];
  }
  return {regret(model, pulls), pulls, seed};
}

// Per-episode seed of the experiment: stream (master seed, model, episode).
inline std::uint64_t episode_seed(std::uint64_t seed, std::size_t model, std::size_t episode) {
  return SplitMix64(seed, {static_cast<std::uint64_t>(model), static_cast<std::uint64_t>(episode)})();
}

inline constexpr double kBoundRelativeSlack = 1e-12;

struct ModelSummary {
  std::string name;
  GaussianTwoArmModel model;
  double quantile;         // empirical strict (1 - delta)-quantile of regret
  std::size_t tail_count;  // #{ regret >= bound }
  WilsonInterval tail_ci;  // 99% Wilson interval for P(regret >= bound)
  double mean_regret;
};

struct ExperimentReport {
  std::string algorithm;
  std::size_t T;
  double delta;
  double eta;
  std::size_t reps;
  std::uint64_t seed;
  double g;
  double bound;  // (1 - eta) sqrt(T Lambda_delta / 2)
  std::array<ModelSummary, 2> models;
  std::size_t worst_model;  // argmax of the empirical quantile
  double max_quantile;
  bool point_check;  // max_quantile >= bound
  bool pass;
  std::size_t separation_checked = 0;
  std::size_t separation_violations = 0;

  std::string verdict() const { return pass ? "PASS" : "FAIL"; }
};

// Monte Carlo check of the quantile lower bound on the hard pair at the
// largest certified gap. The bound must hold for every algorithm on at least
// one of the two models.
inline ExperimentReport regret_quantile_experiment(const BanditAlgorithm& alg, std::size_t T,
                                                   double delta, double eta, std::size_t reps,
                                                   std::uint64_t seed, std::size_t workers = 0) {
  validate(alg, T);
  require(delta > 0.0 && delta < 0.5, "delta must lie in (0, 0.5)");
  require(eta > 0.0 && eta < 1.0, "eta must lie in (0, 1)");
  require(reps >= 1000, "at least 1000 replications are required");

  ExperimentReport r{};
  r.algorithm = name(alg);
  r.T = T;
  r.delta = delta;
  r.eta = eta;
  r.reps = reps;
  r.seed = seed;
  r.g = optimal_gap(T, delta, eta);
  r.bound = (1.0 - eta) * bandit_quantile_lower_bound(T, delta);
  const auto [m1, m2] = hard_pair(r.g);
  const std::array<GaussianTwoArmModel, 2> pair{m1, m2};
  const double threshold = r.bound * (1.0 - kBoundRelativeSlack);
  const double total = r.g * static_cast<double>(T);

  for (std::size_t mi = 0; mi < 2; ++mi) {
    std::vector<double> regrets(reps);
    std::vector<unsigned char> violation(reps, 0);
    parallel_for(
        reps,
        [&](std::size_t begin, std::size_t end) {
          for (std::size_t e = begin; e < end; ++e) {
            const auto s = run_episode(pair[mi], alg, T, episode_seed(seed, mi, e));
            regrets[e] = s.regret;
            // Both models' regrets from the same action sequence.
            const double r1 = regret(pair[0], s.pulls), r2 = regret(pair[1], s.pulls);
            const bool counts_ok = s.pulls[0] + s.pulls[1] == T;
            const bool sum_ok = std::abs(r1 + r2 - total) <=
                                4.0 * std::numeric_limits<double>::epsilon() * total;
            violation[e] = counts_ok && sum_ok ? 0 : 1;
          }
        },
        workers);
    r.separation_checked += reps;
    for (auto v : violation) r.separation_violations += v;

    std::sort(regrets.begin(), regrets.end());
    ModelSummary& ms = r.models[mi];
    ms.name = mi == 0 ? "M1" : "M2";
    ms.model = pair[mi];
    ms.quantile = empirical_strict_quantile(std::span<const double>(regrets), delta);
    ms.tail_count = static_cast<std::size_t>(
        regrets.end() - std::lower_bound(regrets.begin(), regrets.end(), threshold));
    ms.tail_ci = wilson_interval(ms.tail_count, reps, 0.99);
    double sum = 0.0;
    for (double v : regrets) sum += v;
    ms.mean_regret = sum / static_cast<double>(reps);
  }

  r.worst_model = r.models[1].quantile > r.models[0].quantile ? 1 : 0;
  r.max_quantile = r.models[r.worst_model].quantile;
  r.point_check = r.max_quantile >= threshold;
  if (r.point_check) {
    r.pass = true;
  } else {
    const std::size_t heavier = r.models[1].tail_count > r.models[0].tail_count ? 1 : 0;
    r.pass = r.models[heavier].tail_ci.hi > delta;
  }
  return r;
}

}  // namespace isdm::bandit
