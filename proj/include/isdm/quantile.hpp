#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "isdm/divergence.hpp"
#include "isdm/error.hpp"
#include "isdm/normal.hpp"

namespace isdm {

// Slack applied when testing a probability against a level delta, so that
// exact ties survive floating-point summation.
inline constexpr double kProbSlack = 1e-12;

struct LossAtom {
  double value;
  double prob;
};

// Law of a nonnegative, finite loss. Exact mode holds atoms; empirical mode
// additionally keeps the sorted samples so tail counts stay integral.
class LossDistribution {
 public:
  static LossDistribution from_atoms(std::vector<LossAtom> atoms,
                                     double mass_tolerance = kMassTolerance) {
    for (const auto& a : atoms) {
      require(std::isfinite(a.value) && a.value >= 0.0, "loss values must be finite and nonnegative");
      require(std::isfinite(a.prob) && a.prob >= 0.0 && a.prob <= 1.0 + mass_tolerance,
              "atom probability outside [0,1]");
    }
    std::sort(atoms.begin(), atoms.end(),
              [](const LossAtom& x, const LossAtom& y) { return x.value < y.value; });
    LossDistribution d;
    double mass = 0.0;
    for (const auto& a : atoms) {
      mass += a.prob;
      if (a.prob == 0.0) continue;
      if (!d.atoms_.empty() && d.atoms_.back().value == a.value) {
        d.atoms_.back().prob += a.prob;
      } else {
        d.atoms_.push_back(a);
      }
    }
    require(std::abs(mass - 1.0) <= mass_tolerance, "loss probabilities do not sum to 1");
    return d;
  }

  static LossDistribution point_mass(double value) { return from_atoms({{value, 1.0}}); }

  static LossDistribution empirical(std::vector<double> samples) {
    require(!samples.empty(), "empirical distribution needs at least one sample");
    for (double s : samples) {
      require(std::isfinite(s) && s >= 0.0, "loss samples must be finite and nonnegative");
    }
    std::sort(samples.begin(), samples.end());
    LossDistribution d;
    const double w = 1.0 / static_cast<double>(samples.size());
    for (double s : samples) {
      if (!d.atoms_.empty() && d.atoms_.back().value == s) {
        d.atoms_.back().prob += w;
      } else {
        d.atoms_.push_back({s, w});
      }
    }
    d.samples_ = std::move(samples);
    return d;
  }

  std::span<const LossAtom> atoms() const { return atoms_; }
  bool is_empirical() const { return !samples_.empty(); }
  std::span<const double> sorted_samples() const { return samples_; }

  // P(L > r)
  double tail_strict(double r) const {
    double p = 0.0;
    for (auto it = atoms_.rbegin(); it != atoms_.rend() && it->value > r; ++it) p += it->prob;
    return p;
  }

  // P(L >= r)
  double tail_weak(double r) const {
    double p = 0.0;
    for (auto it = atoms_.rbegin(); it != atoms_.rend() && it->value >= r; ++it) p += it->prob;
    return p;
  }

  double mean() const {
    double m = 0.0;
    for (const auto& a : atoms_) m += a.value * a.prob;
    return m;
  }

 private:
  std::vector<LossAtom> atoms_;
  std::vector<double> samples_;
};

namespace detail {

inline void require_level(double delta) {
  require(delta > 0.0 && delta <= 1.0, "delta must lie in (0, 1]");
}

// Candidate infima of a survival step function: 0 and every atom.
inline std::vector<double> quantile_candidates(const LossDistribution& dist) {
  std::vector<double> c{0.0};
  for (const auto& a : dist.atoms()) {
    if (a.value > 0.0) c.push_back(a.value);
  }
  return c;
}

}  // namespace detail

// inf{ r >= 0 : P(L > r) <= delta }. The strict survival is right-continuous
// and steps only at atoms, so the infimum is attained at 0 or an atom.
inline double strict_quantile(const LossDistribution& dist, double delta) {
  detail::require_level(delta);
  for (double c : detail::quantile_candidates(dist)) {
    if (dist.tail_strict(c) <= delta + kProbSlack) return c;
  }
  return kInfinity;  // unreachable: P(L > max atom) = 0
}

// inf{ r >= 0 : P(L >= r) <= delta }. The weak survival is left-continuous, so
// the set may be open at an atom; probing the midpoint to the next atom
// detects that case.
inline double weak_quantile(const LossDistribution& dist, double delta) {
  detail::require_level(delta);
  const auto cand = detail::quantile_candidates(dist);
  for (std::size_t k = 0; k < cand.size(); ++k) {
    if (dist.tail_weak(cand[k]) <= delta + kProbSlack) return cand[k];
    const double next = k + 1 < cand.size() ? 0.5 * (cand[k] + cand[k + 1]) : cand[k] + 1.0;
    if (dist.tail_weak(next) <= delta + kProbSlack) return cand[k];
  }
  return kInfinity;
}

struct WilsonInterval {
  double lo;
  double hi;
};

// Wilson score interval for a binomial proportion.
inline WilsonInterval wilson_interval(std::size_t successes, std::size_t trials,
                                      double confidence = 0.99) {
  require(trials > 0, "Wilson interval needs at least one trial");
  require(successes <= trials, "more successes than trials");
  require(confidence > 0.0 && confidence < 1.0, "confidence must lie in (0,1)");
  const double z = normal_quantile(1.0 - 0.5 * (1.0 - confidence));
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

// Strict quantile of the empirical measure: the (N - floor(delta N))-th order
// statistic, or 0 when that many samples already sit at zero.
inline double empirical_strict_quantile(std::span<const double> sorted_samples, double delta) {
  require(!sorted_samples.empty(), "empirical quantile of an empty sample");
  detail::require_level(delta);
  const auto n = sorted_samples.size();
  const auto allowed = static_cast<std::size_t>(
      std::floor((delta + kProbSlack) * static_cast<double>(n)));
  if (allowed >= n) return 0.0;
  return std::max(0.0, sorted_samples[n - allowed - 1]);
}

inline double empirical_strict_quantile(std::vector<double> samples, double delta) {
  require(!samples.empty(), "empirical quantile of an empty sample");
  std::sort(samples.begin(), samples.end());
  return empirical_strict_quantile(std::span<const double>(samples), delta);
}

struct EmpiricalQuantile {
  double value;
  std::size_t tail_count;  // #{ L > value }
  std::size_t samples;
  WilsonInterval tail_ci;
};

inline EmpiricalQuantile empirical_strict_quantile_ci(std::span<const double> sorted_samples,
                                                      double delta, double confidence = 0.99) {
  const double q = empirical_strict_quantile(sorted_samples, delta);
  const auto above = static_cast<std::size_t>(
      sorted_samples.end() - std::upper_bound(sorted_samples.begin(), sorted_samples.end(), q));
  return {q, above, sorted_samples.size(),
          wilson_interval(above, sorted_samples.size(), confidence)};
}

// Quantile-to-expectation: a certified lower bound on the minimax risk from a
// lower bound on the minimax (1-delta)-quantile.
inline double expectation_lower_bound(double delta, double quantile_lb) {
  detail::require_level(delta);
  require(quantile_lb >= 0.0, "quantile lower bound must be nonnegative");
  return delta * quantile_lb;
}

// Right-continuous, non-increasing step function r -> value, constant on
// [breakpoints[k], breakpoints[k+1]) and on [breakpoints.back(), inf).
class TailCurve {
 public:
  TailCurve(std::vector<double> breakpoints, std::vector<double> values)
      : breakpoints_(std::move(breakpoints)), values_(std::move(values)) {
    require(!breakpoints_.empty(), "tail curve needs at least one breakpoint");
    require(breakpoints_.size() == values_.size(), "breakpoints and values differ in length");
    require(breakpoints_.front() == 0.0, "tail curve must start at r = 0");
    for (std::size_t k = 0; k < values_.size(); ++k) {
      require(values_[k] >= -kProbSlack && values_[k] <= 1.0 + kProbSlack,
              "tail values must lie in [0,1]");
      if (k > 0) {
        require(breakpoints_[k] > breakpoints_[k - 1], "breakpoints must be strictly ascending");
        require(values_[k] <= values_[k - 1] + 1e-9, "tail curve must be non-increasing");
      }
    }
  }

  static TailCurve zero() { return TailCurve({0.0}, {0.0}); }

  double operator()(double r) const {
    require(r >= 0.0, "tail curve evaluated at negative r");
    auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), r);
    return values_[static_cast<std::size_t>(it - breakpoints_.begin()) - 1];
  }

  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<double> breakpoints_;
  std::vector<double> values_;
};

// sup{ r : curve(r) > delta }, 0 when the set is empty.
inline double tail_to_quantile(const TailCurve& curve, double delta) {
  detail::require_level(delta);
  const auto& b = curve.breakpoints();
  const auto& v = curve.values();
  for (std::size_t k = v.size(); k-- > 0;) {
    if (v[k] > delta + kProbSlack) return k + 1 < b.size() ? b[k + 1] : kInfinity;
  }
  return 0.0;
}

}  // namespace isdm
