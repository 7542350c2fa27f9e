#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "isdm/divergence.hpp"
#include "isdm/error.hpp"
#include "isdm/isdm.hpp"
#include "isdm/oracle.hpp"

namespace isdm {

enum class Theorem { LeCamTV, LeCamKL, FanoMI, FanoEpsilonStar, BanditClosedForm };
enum class Verdict { Certified, ConditionFailed };

inline std::string_view to_string(Theorem t) {
  switch (t) {
    case Theorem::LeCamTV: return "LeCamTV";
    case Theorem::LeCamKL: return "LeCamKL";
    case Theorem::FanoMI: return "FanoMI";
    case Theorem::FanoEpsilonStar: return "FanoEpsilonStar";
    case Theorem::BanditClosedForm: return "BanditClosedForm";
  }
  return "?";
}

inline Theorem parse_theorem(std::string_view s) {
  for (auto t : {Theorem::LeCamTV, Theorem::LeCamKL, Theorem::FanoMI, Theorem::FanoEpsilonStar,
                 Theorem::BanditClosedForm}) {
    if (to_string(t) == s) return t;
  }
  throw DomainError("unknown theorem '" + std::string(s) + "'");
}

inline std::string_view to_string(Verdict v) {
  return v == Verdict::Certified ? "Certified" : "ConditionFailed";
}

inline Verdict parse_verdict(std::string_view s) {
  if (s == "Certified") return Verdict::Certified;
  if (s == "ConditionFailed") return Verdict::ConditionFailed;
  throw DomainError("unknown verdict '" + std::string(s) + "'");
}

// A checkable claim "lower minimax quantile at delta >= claimed_bound". Every
// number the verdict depends on is kept in `inputs`.
struct BoundCertificate {
  Theorem theorem;
  double delta = 0.0;
  double claimed_bound = 0.0;
  std::map<std::string, double> inputs;
  Verdict verdict = Verdict::ConditionFailed;
  std::string notes;
  std::string instance_hash;

  bool certified() const { return verdict == Verdict::Certified; }

  friend bool operator==(const BoundCertificate&, const BoundCertificate&) = default;
};

namespace detail {

inline BoundCertificate decide(Theorem theorem, double delta, double bound, bool premise,
                               std::map<std::string, double> inputs, std::string notes = {}) {
  BoundCertificate c{theorem, delta, premise ? bound : 0.0, std::move(inputs),
                     premise ? Verdict::Certified : Verdict::ConditionFailed, std::move(notes), {}};
  return c;
}

inline void require_lecam_delta(double delta) {
  require(delta > 0.0 && delta < 0.5, "delta must lie in (0, 0.5) for the two-point method");
}

}  // namespace detail

// Two-point method, TV form: certifies Delta iff tv < 1 - 2 delta. The caller
// vouches for the separation L(M1,x) + L(M2,x) >= 2 Delta.
inline BoundCertificate lecam_tv_certificate(double tv, double delta, double Delta) {
  require(tv >= 0.0 && tv <= 1.0, "TV must lie in [0,1]");
  detail::require_lecam_delta(delta);
  require(Delta >= 0.0 && std::isfinite(Delta), "Delta must be finite and nonnegative");
  const double threshold = 1.0 - 2.0 * delta;
  return detail::decide(Theorem::LeCamTV, delta, Delta, tv < threshold,
                        {{"tv", tv}, {"Delta", Delta}, {"threshold", threshold}});
}

// Two-point method, KL form: certifies Delta iff kl < ln(1 / (4 delta (1 - delta))).
inline BoundCertificate lecam_kl_certificate(double kl, double delta, double Delta) {
  require(kl >= 0.0, "KL must be nonnegative");
  detail::require_lecam_delta(delta);
  require(Delta >= 0.0 && std::isfinite(Delta), "Delta must be finite and nonnegative");
  const double threshold = lecam_kl_threshold(delta);
  return detail::decide(Theorem::LeCamKL, delta, Delta, kl < threshold,
                        {{"kl", kl}, {"Delta", Delta}, {"threshold", threshold}});
}

struct PairDivergence {
  double tv_sup;
  double kl_sup;
};

// sup over algorithms of TV and KL between the transcript laws of two models.
// Both are jointly convex, so deterministic trees attain the sup.
inline PairDivergence pair_divergences(const FiniteISDM& inst, std::size_t m1, std::size_t m2) {
  PairDivergence d{0.0, 0.0};
  for (const auto& pi : enumerate_policies(inst)) {
    const auto p1 = trajectory_law(inst, m1, pi);
    const auto p2 = trajectory_law(inst, m2, pi);
    d.tv_sup = std::max(d.tv_sup, tv_finite(p1, p2));
    d.kl_sup = std::max(d.kl_sup, kl_finite(p1, p2));
  }
  return d;
}

struct LeCamPair {
  BoundCertificate tv;
  BoundCertificate kl;
};

// Both two-point certificates for a model pair of a finite instance, with
// Delta the largest uniform separation.
inline LeCamPair lecam_certificates(const FiniteISDM& inst, std::size_t m1, std::size_t m2,
                                    double delta) {
  detail::require_lecam_delta(delta);
  const auto sep = check_separation(inst, m1, m2);
  const auto div = pair_divergences(inst, m1, m2);
  const std::string note = "divergences are sup over all algorithms (deterministic trees are extremal)";
  LeCamPair out{lecam_tv_certificate(div.tv_sup, delta, sep.delta_max),
                lecam_kl_certificate(div.kl_sup, delta, sep.delta_max)};
  for (auto* c : {&out.tv, &out.kl}) {
    c->inputs["m1"] = static_cast<double>(m1);
    c->inputs["m2"] = static_cast<double>(m2);
    c->notes = note;
    if (!sep.holds) {
      c->verdict = Verdict::ConditionFailed;
      c->claimed_bound = 0.0;
      c->notes = "uniform separation fails: min_x L(M1,x) + L(M2,x) = 0";
    }
  }
  return out;
}

// sup_x mu({M : L(M,x) <= Delta})
inline double p_max(const FiniteISDM& inst, const FiniteDist<std::size_t>& prior, double Delta) {
  require(prior.size() == inst.num_models(), "prior must have one entry per model");
  require(Delta >= 0.0, "Delta must be nonnegative");
  double best = 0.0;
  for (std::size_t x = 0; x < inst.num_transcripts(); ++x) {
    double mass = 0.0;
    for (std::size_t m = 0; m < inst.num_models(); ++m) {
      if (inst.loss(m, x) <= Delta) mass += prior.prob(m);
    }
    best = std::max(best, mass);
  }
  // A prior that sums to 1 only up to rounding must not pass as p_max < 1.
  if (best >= 1.0 - kMassTolerance) return 1.0;
  return std::clamp(best, 0.0, 1.0);
}

namespace detail {

inline double mutual_information_of(std::span<const TrajectoryLaw> laws,
                                    const FiniteDist<std::size_t>& prior) {
  const TrajectoryLaw marginal = mix_laws(laws, prior.probs());
  double mi = 0.0;
  for (std::size_t m = 0; m < laws.size(); ++m) {
    if (prior.prob(m) > 0.0) mi += prior.prob(m) * kl_finite(laws[m], marginal);
  }
  return std::max(mi, 0.0);
}

}  // namespace detail

// I(M; X) with M ~ prior and X ~ P^{M, policy}.
inline double mutual_information(const FiniteISDM& inst, const FiniteDist<std::size_t>& prior,
                                 const DeterministicPolicy& policy) {
  require(prior.size() == inst.num_models(), "prior must have one entry per model");
  std::vector<TrajectoryLaw> laws;
  for (std::size_t m = 0; m < inst.num_models(); ++m) laws.push_back(trajectory_law(inst, m, policy));
  return detail::mutual_information_of(laws, prior);
}

inline double mutual_information(const FiniteISDM& inst, const FiniteDist<std::size_t>& prior,
                                 const PolicyMixture& mix) {
  require(prior.size() == inst.num_models(), "prior must have one entry per model");
  std::vector<TrajectoryLaw> laws;
  for (std::size_t m = 0; m < inst.num_models(); ++m) laws.push_back(mixture_law(inst, m, mix));
  return detail::mutual_information_of(laws, prior);
}

struct FanoMiAnalysis {
  double p_max;
  double mi_sup;   // max over deterministic policies; MI is convex in the policy mixture
  double epsilon;  // 1 + (mi_sup + ln 2) / ln p_max; meaningless when p_max = 1
  double Delta;
};

inline FanoMiAnalysis fano_mi_analysis(const FiniteISDM& inst, const FiniteDist<std::size_t>& prior,
                                       double Delta) {
  require(Delta > 0.0 && std::isfinite(Delta), "Delta must be positive and finite");
  FanoMiAnalysis a{p_max(inst, prior, Delta), 0.0, 0.0, Delta};
  for (const auto& pi : enumerate_policies(inst)) {
    a.mi_sup = std::max(a.mi_sup, mutual_information(inst, prior, pi));
  }
  if (a.p_max >= 1.0) {
    a.epsilon = 0.0;
  } else if (a.p_max <= 0.0) {
    a.epsilon = 1.0;
  } else {
    a.epsilon = 1.0 + (a.mi_sup + std::numbers::ln2) / std::log(a.p_max);
  }
  return a;
}

inline BoundCertificate fano_mi_certificate(const FanoMiAnalysis& a, double delta) {
  detail::require_level(delta);
  std::map<std::string, double> inputs{
      {"p_max", a.p_max}, {"mi", a.mi_sup}, {"epsilon", a.epsilon}, {"Delta", a.Delta}};
  if (a.p_max >= 1.0) {
    return detail::decide(Theorem::FanoMI, delta, a.Delta, false, std::move(inputs),
                          "premise p_max < 1 violated");
  }
  return detail::decide(Theorem::FanoMI, delta, a.Delta, a.epsilon > 0.0 && delta < a.epsilon,
                        std::move(inputs), "mi is the sup over all algorithms");
}

inline BoundCertificate fano_mi_certificate(const FiniteISDM& inst,
                                            const FiniteDist<std::size_t>& prior, double Delta,
                                            double delta) {
  return fano_mi_certificate(fano_mi_analysis(inst, prior, Delta), delta);
}

// Uniform grid k/n, k = 1..n.
inline std::vector<double> uniform_epsilon_grid(std::size_t n = 1024) {
  require(n > 0, "epsilon grid must be nonempty");
  std::vector<double> g(n);
  for (std::size_t k = 0; k < n; ++k) g[k] = static_cast<double>(k + 1) / static_cast<double>(n);
  return g;
}

struct FanoSetup {
  const FiniteISDM* instance;
  FiniteDist<std::size_t> prior;
  double Delta;
  std::vector<TrajectoryLaw> q_candidates;
  std::vector<double> epsilon_grid;
};

// Reference laws: the prior-mixture transcript law of every deterministic
// policy, plus the uniform law on transcripts.
inline FanoSetup default_fano_setup(const FiniteISDM& inst, const FiniteDist<std::size_t>& prior,
                                    double Delta) {
  require(prior.size() == inst.num_models(), "prior must have one entry per model");
  FanoSetup s{&inst, prior, Delta, {}, uniform_epsilon_grid()};
  for (const auto& pi : enumerate_policies(inst)) {
    std::vector<TrajectoryLaw> laws;
    for (std::size_t m = 0; m < inst.num_models(); ++m) laws.push_back(trajectory_law(inst, m, pi));
    s.q_candidates.push_back(mix_laws(laws, prior.probs()));
  }
  std::vector<double> uniform(inst.num_transcripts(), 1.0 / static_cast<double>(inst.num_transcripts()));
  s.q_candidates.push_back(dense_dist(std::move(uniform)));
  return s;
}

struct FanoEpsilonStar {
  double epsilon_star = 0.0;
  std::size_t best_candidate = 0;
  double rho_bar = 0.0;  // for the best candidate
  double d_sup = 0.0;    // for the best candidate
  double Delta = 0.0;
};

// Largest grid epsilon such that, for some candidate Q,
// sup_ALG E_mu KL(P^{M,ALG} || Q) < d_{KL,eps}(rho_bar_{Delta,Q}).
inline FanoEpsilonStar fano_epsilon_star(const FanoSetup& setup) {
  require(setup.instance != nullptr, "Fano setup has no instance");
  const FiniteISDM& inst = *setup.instance;
  require(setup.prior.size() == inst.num_models(), "prior must have one entry per model");
  require(setup.Delta > 0.0 && std::isfinite(setup.Delta), "Delta must be positive and finite");
  require(!setup.q_candidates.empty(), "Fano setup has no reference candidates");
  require(!setup.epsilon_grid.empty(), "epsilon grid must be nonempty");
  for (std::size_t k = 0; k < setup.epsilon_grid.size(); ++k) {
    const double e = setup.epsilon_grid[k];
    require(e > 0.0 && e <= 1.0, "epsilon grid points must lie in (0,1]");
    require(k == 0 || e > setup.epsilon_grid[k - 1], "epsilon grid must be ascending");
  }

  std::vector<std::vector<TrajectoryLaw>> laws;  // [policy][model]
  for (const auto& pi : enumerate_policies(inst)) {
    std::vector<TrajectoryLaw> row;
    for (std::size_t m = 0; m < inst.num_models(); ++m) row.push_back(trajectory_law(inst, m, pi));
    laws.push_back(std::move(row));
  }
  std::vector<double> success(inst.num_transcripts(), 0.0);  // mu({M : L(M,x) <= Delta})
  for (std::size_t x = 0; x < inst.num_transcripts(); ++x) {
    for (std::size_t m = 0; m < inst.num_models(); ++m) {
      if (inst.loss(m, x) <= setup.Delta) success[x] += setup.prior.prob(m);
    }
  }

  FanoEpsilonStar best;
  best.Delta = setup.Delta;
  for (std::size_t qi = 0; qi < setup.q_candidates.size(); ++qi) {
    const auto& q = setup.q_candidates[qi];
    require(q.size() == inst.num_transcripts(), "reference law does not match the transcript space");
    double rho = 0.0;
    for (std::size_t x = 0; x < q.size(); ++x) rho += q.prob(x) * success[x];
    rho = std::clamp(rho, 0.0, 1.0);
    double d_sup = 0.0;
    for (const auto& row : laws) {
      double d = 0.0;
      for (std::size_t m = 0; m < row.size() && d < kInfinity; ++m) {
        if (setup.prior.prob(m) > 0.0) d += setup.prior.prob(m) * kl_finite(row[m], q);
      }
      d_sup = std::max(d_sup, d);
      if (d_sup == kInfinity) break;
    }
    if (d_sup == kInfinity) continue;
    for (std::size_t k = setup.epsilon_grid.size(); k-- > 0;) {
      const double eps = setup.epsilon_grid[k];
      if (eps <= best.epsilon_star) break;
      if (d_sup < dfe_threshold(DivergenceKind::KL, eps, rho)) {
        best = {eps, qi, rho, d_sup, setup.Delta};
        break;
      }
    }
  }
  return best;
}

inline BoundCertificate fano_epsilon_star_certificate(const FanoEpsilonStar& r, double delta) {
  detail::require_level(delta);
  return detail::decide(Theorem::FanoEpsilonStar, delta, r.Delta,
                        r.epsilon_star > 0.0 && delta < r.epsilon_star,
                        {{"epsilon_star", r.epsilon_star},
                         {"rho_bar", r.rho_bar},
                         {"d_sup", r.d_sup},
                         {"candidate", static_cast<double>(r.best_candidate)},
                         {"Delta", r.Delta}},
                        "KL divergence; epsilon_star is the largest certified grid point");
}

// sqrt(T ln(1/(4 delta (1-delta))) / 2)
inline double bandit_quantile_lower_bound(std::size_t T, double delta) {
  require(T >= 1, "horizon must be at least 1");
  return std::sqrt(static_cast<double>(T) * lecam_kl_threshold(delta) / 2.0);
}

inline BoundCertificate bandit_certificate(std::size_t T, double delta) {
  const double bound = bandit_quantile_lower_bound(T, delta);
  return detail::decide(Theorem::BanditClosedForm, delta, bound, true,
                        {{"T", static_cast<double>(T)}, {"Lambda", lecam_kl_threshold(delta)}},
                        "two-armed unit-variance Gaussian bandit, pseudo-regret loss");
}

}  // namespace isdm
