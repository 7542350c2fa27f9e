#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "isdm/error.hpp"
#include "isdm/game.hpp"
#include "isdm/isdm.hpp"
#include "isdm/quantile.hpp"

namespace isdm {

struct Separation {
  bool holds;
  double delta_max;  // (1/2) min_x [L(M1,x) + L(M2,x)]
};

// Uniform two-point separation over every transcript.
inline Separation check_separation(const FiniteISDM& inst, std::size_t m1, std::size_t m2) {
  require(m1 < inst.num_models() && m2 < inst.num_models(), "model index out of range");
  double lowest = kInfinity;
  for (std::size_t x = 0; x < inst.num_transcripts(); ++x) {
    lowest = std::min(lowest, inst.loss(m1, x) + inst.loss(m2, x));
  }
  const double delta_max = 0.5 * lowest;
  return {delta_max > 0.0, delta_max};
}

// Exact minimax quantities of a FiniteISDM by brute force. Randomized
// algorithms are mixtures over the enumerated deterministic trees, so each
// quantity is the value of a (policies x models) matrix game.
class ExactOracle {
 public:
  explicit ExactOracle(const FiniteISDM& inst)
      : inst_(&inst), policies_(enumerate_policies(inst)) {
    laws_.reserve(policies_.size());
    for (const auto& pi : policies_) {
      std::vector<LossDistribution> row;
      row.reserve(inst.num_models());
      for (std::size_t m = 0; m < inst.num_models(); ++m) {
        row.push_back(loss_distribution(inst, m, trajectory_law(inst, m, pi)));
      }
      laws_.push_back(std::move(row));
    }
    breakpoints_.push_back(0.0);
    for (const auto& row : inst.loss_table()) {
      for (double l : row) breakpoints_.push_back(l);
    }
    std::sort(breakpoints_.begin(), breakpoints_.end());
    breakpoints_.erase(std::unique(breakpoints_.begin(), breakpoints_.end()), breakpoints_.end());
  }

  // The oracle keeps a pointer to the instance.
  explicit ExactOracle(const FiniteISDM&&) = delete;

  const FiniteISDM& instance() const { return *inst_; }
  const std::vector<DeterministicPolicy>& policies() const { return policies_; }
  const LossDistribution& loss_law(std::size_t policy, std::size_t model) const {
    return laws_[policy][model];
  }
  // 0 together with every loss value in the table.
  const std::vector<double>& breakpoints() const { return breakpoints_; }

  GameMatrix payoff(const std::function<double(const LossDistribution&)>& cell) const {
    GameMatrix g(policies_.size(), inst_->num_models());
    for (std::size_t i = 0; i < policies_.size(); ++i) {
      for (std::size_t m = 0; m < inst_->num_models(); ++m) g(i, m) = cell(laws_[i][m]);
    }
    return g;
  }

  // inf_ALG sup_M P(L > r)
  GameValue minimax_tail(double r) const {
    require(r >= 0.0, "tail threshold must be nonnegative");
    return solve_game(payoff([r](const LossDistribution& d) { return d.tail_strict(r); }));
  }

  // inf_ALG sup_M P(L >= r)
  GameValue minimax_weak_tail(double r) const {
    require(r >= 0.0, "tail threshold must be nonnegative");
    return solve_game(payoff([r](const LossDistribution& d) { return d.tail_weak(r); }));
  }

  // The exact minimax strict tail; it can only step at loss values.
  const TailCurve& tail_curve() const {
    if (!curve_) {
      std::vector<double> values;
      values.reserve(breakpoints_.size());
      for (double b : breakpoints_) values.push_back(tail_value(b));
      // Clean solver noise so the curve is exactly monotone.
      for (std::size_t k = 1; k < values.size(); ++k) values[k] = std::min(values[k], values[k - 1]);
      for (double& v : values) v = std::clamp(v, 0.0, 1.0);
      curve_ = TailCurve(breakpoints_, std::move(values));
    }
    return *curve_;
  }

  // inf{ r : inf_ALG sup_M P(L > r) <= delta }, through the tail-to-quantile
  // duality on the exact tail curve.
  double lower_minimax_quantile(double delta) const {
    return tail_to_quantile(tail_curve(), delta);
  }

  // inf_ALG sup_M Quantile(1 - delta). Some mixture has every model's strict
  // quantile <= b iff the game at level b has value <= delta, so scan the
  // breakpoints and return the first feasible one.
  double minimax_quantile_strict(double delta) const {
    detail::require_level(delta);
    for (double b : breakpoints_) {
      if (tail_value(b) <= delta + kProbSlack) return b;
    }
    return kInfinity;
  }

  // Weak-event analogue; the feasible set can be open at a breakpoint, which
  // the midpoint probe detects.
  double weak_minimax_quantile(double delta) const {
    detail::require_level(delta);
    for (std::size_t k = 0; k < breakpoints_.size(); ++k) {
      const double b = breakpoints_[k];
      if (weak_tail_value(b) <= delta + kProbSlack) return b;
      const double mid = k + 1 < breakpoints_.size() ? 0.5 * (b + breakpoints_[k + 1]) : b + 1.0;
      if (weak_tail_value(mid) <= delta + kProbSlack) return b;
    }
    return kInfinity;
  }

  // inf_ALG sup_M E[L]
  GameValue minimax_expected_risk() const {
    return solve_game(payoff([](const LossDistribution& d) { return d.mean(); }));
  }

  // Largest duality gap over every game this oracle has solved.
  double max_gap() const { return max_gap_; }

 private:
  double tail_value(double r) const {
    auto it = tail_cache_.find(r);
    if (it != tail_cache_.end()) return it->second;
    const GameValue g = minimax_tail(r);
    max_gap_ = std::max(max_gap_, g.gap);
    return tail_cache_[r] = g.value;
  }

  double weak_tail_value(double r) const {
    auto it = weak_cache_.find(r);
    if (it != weak_cache_.end()) return it->second;
    const GameValue g = minimax_weak_tail(r);
    max_gap_ = std::max(max_gap_, g.gap);
    return weak_cache_[r] = g.value;
  }

  const FiniteISDM* inst_;
  std::vector<DeterministicPolicy> policies_;
  std::vector<std::vector<LossDistribution>> laws_;
  std::vector<double> breakpoints_;
  mutable std::optional<TailCurve> curve_;
  mutable std::map<double, double> tail_cache_;
  mutable std::map<double, double> weak_cache_;
  mutable double max_gap_ = 0.0;
};

inline GameValue minimax_tail(const FiniteISDM& inst, double r) {
  return ExactOracle(inst).minimax_tail(r);
}

inline double lower_minimax_quantile(const FiniteISDM& inst, double delta) {
  return ExactOracle(inst).lower_minimax_quantile(delta);
}

inline double minimax_quantile_strict(const FiniteISDM& inst, double delta) {
  return ExactOracle(inst).minimax_quantile_strict(delta);
}

inline double weak_minimax_quantile(const FiniteISDM& inst, double delta) {
  return ExactOracle(inst).weak_minimax_quantile(delta);
}

inline GameValue minimax_expected_risk(const FiniteISDM& inst) {
  return ExactOracle(inst).minimax_expected_risk();
}

}  // namespace isdm
