#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "isdm/error.hpp"
#include "isdm/normal.hpp"

namespace isdm {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Tolerance on the total mass of a user-supplied distribution.
inline constexpr double kMassTolerance = 1e-12;

// A probability law on a finite, ordered support.
template <typename Label = std::size_t>
class FiniteDist {
 public:
  FiniteDist() = default;

  FiniteDist(std::vector<Label> support, std::vector<double> probs)
      : support_(std::move(support)), probs_(std::move(probs)) {
    validate();
  }

  // Skips validation; for laws produced by exact internal computations whose
  // mass is correct up to accumulated rounding.
  static FiniteDist unchecked(std::vector<Label> support, std::vector<double> probs) {
    FiniteDist d;
    d.support_ = std::move(support);
    d.probs_ = std::move(probs);
    return d;
  }

  static FiniteDist uniform(std::vector<Label> support) {
    require(!support.empty(), "uniform distribution over an empty support");
    std::vector<double> probs(support.size(), 1.0 / static_cast<double>(support.size()));
    return FiniteDist(std::move(support), std::move(probs));
  }

  const std::vector<Label>& support() const { return support_; }
  std::span<const double> probs() const { return probs_; }
  double prob(std::size_t i) const { return probs_[i]; }
  std::size_t size() const { return probs_.size(); }

  double total_mass() const { return std::accumulate(probs_.begin(), probs_.end(), 0.0); }

  friend bool operator==(const FiniteDist&, const FiniteDist&) = default;

 private:
  void validate() const {
    require(!probs_.empty(), "distribution has empty support");
    require(support_.size() == probs_.size(), "support and probability lengths differ");
    for (double p : probs_) {
      require(std::isfinite(p) && p >= 0.0 && p <= 1.0, "probability outside [0,1]");
    }
    require(std::abs(total_mass() - 1.0) <= kMassTolerance, "probabilities do not sum to 1");
    std::vector<Label> sorted = support_;
    std::sort(sorted.begin(), sorted.end());
    require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(),
            "support labels are not distinct");
  }

  std::vector<Label> support_;
  std::vector<double> probs_;
};

// Dense law over the indices 0..n-1.
inline FiniteDist<std::size_t> dense_dist(std::vector<double> probs) {
  std::vector<std::size_t> support(probs.size());
  std::iota(support.begin(), support.end(), std::size_t{0});
  return FiniteDist<std::size_t>(std::move(support), std::move(probs));
}

enum class DivergenceKind { KL, TV };

inline DivergenceKind parse_divergence_kind(std::string_view name) {
  if (name == "KL" || name == "kl") return DivergenceKind::KL;
  if (name == "TV" || name == "tv") return DivergenceKind::TV;
  throw DomainError("unsupported divergence '" + std::string(name) +
                    "': only KL and TV are implemented");
}

inline std::string_view to_string(DivergenceKind kind) {
  return kind == DivergenceKind::KL ? "KL" : "TV";
}

namespace detail {

inline void require_unit(double x, const char* name) {
  require(x >= 0.0 && x <= 1.0, std::string(name) + " must lie in [0,1]");
}

// p * ln(p / q) with 0 ln(0/.) = 0 and p ln(p/0) = +inf.
inline double kl_term(double p, double q) {
  if (p <= 0.0) return 0.0;
  if (q <= 0.0) return kInfinity;
  return p * std::log(p / q);
}

}  // namespace detail

inline double kl_bernoulli(double p, double q) {
  detail::require_unit(p, "p");
  detail::require_unit(q, "q");
  const double kl = detail::kl_term(p, q) + detail::kl_term(1.0 - p, 1.0 - q);
  return std::max(kl, 0.0);
}

inline double kl_gaussian_unit_var(double mu1, double mu2) {
  const double d = mu1 - mu2;
  return 0.5 * d * d;
}

// TV between N(mu1,1) and N(mu2,1): 2 Phi(|mu1-mu2|/2) - 1.
inline double tv_gaussian_unit_var(double mu1, double mu2) {
  const double half_gap = 0.5 * std::abs(mu1 - mu2);
  // 2 Phi(h) - 1 = 1 - erfc(h / sqrt 2), without cancellation near 0.
  return std::erf(half_gap / std::numbers::sqrt2);
}

template <typename Label>
void require_same_support(const FiniteDist<Label>& p, const FiniteDist<Label>& q) {
  if (p.support() != q.support()) throw DomainError("distributions have mismatched supports");
}

template <typename Label>
double kl_finite(const FiniteDist<Label>& p, const FiniteDist<Label>& q) {
  require_same_support(p, q);
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    kl += detail::kl_term(p.prob(i), q.prob(i));
    if (kl == kInfinity) return kInfinity;
  }
  return std::max(kl, 0.0);
}

template <typename Label>
double tv_finite(const FiniteDist<Label>& p, const FiniteDist<Label>& q) {
  require_same_support(p, q);
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += std::abs(p.prob(i) - q.prob(i));
  return std::clamp(0.5 * sum, 0.0, 1.0);
}

// Bretagnolle-Huber: TV(P,Q) <= 1 - exp(-KL(P||Q)) / 2.
inline double bretagnolle_huber_tv_upper(double kl) {
  require(kl >= 0.0, "KL divergence must be nonnegative");
  return 1.0 - 0.5 * std::exp(-kl);
}

// ln(1 / (4 delta (1 - delta))), the KL budget of the two-point method.
inline double lecam_kl_threshold(double delta) {
  require(delta > 0.0 && delta < 0.5, "delta must lie in (0, 0.5)");
  return -std::log(4.0 * delta * (1.0 - delta));
}

// D(Bern(1-eps) || Bern(p)) when p <= 1-eps, else 0.
inline double dfe_threshold(DivergenceKind kind, double epsilon, double p) {
  detail::require_unit(epsilon, "epsilon");
  detail::require_unit(p, "p");
  const double target = 1.0 - epsilon;
  if (p > target) return 0.0;
  switch (kind) {
    case DivergenceKind::KL:
      return kl_bernoulli(target, p);
    case DivergenceKind::TV:
      return target - p;
  }
  return 0.0;
}

}  // namespace isdm
