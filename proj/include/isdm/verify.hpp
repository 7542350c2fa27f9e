#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "isdm/bounds.hpp"
#include "isdm/oracle.hpp"
#include "isdm/random_instance.hpp"
#include "isdm/rng.hpp"
#include "isdm/serialize.hpp"

namespace isdm {

inline const std::vector<double>& default_delta_grid() {
  static const std::vector<double> grid{0.01, 0.02, 0.05, 0.1, 0.2, 0.25, 0.4, 0.45};
  return grid;
}

inline constexpr double kCertificateSlack = 1e-6;
inline constexpr double kIdentitySlack = 1e-9;

struct CheckTally {
  std::size_t checked = 0;
  std::size_t failed = 0;
};

struct VerificationReport {
  std::uint64_t seed = 0;
  std::size_t instances = 0;
  std::vector<double> delta_grid;
  std::map<std::string, CheckTally> checks;
  std::map<std::string, std::size_t> certified;  // per theorem
  std::vector<std::string> failures;             // first few, for diagnosis
  double max_gap = 0.0;

  bool passed() const {
    for (const auto& [name, t] : checks) {
      if (t.failed > 0) return false;
    }
    return true;
  }

  void record(const std::string& check, bool ok, const std::string& detail) {
    auto& t = checks[check];
    ++t.checked;
    if (!ok) {
      ++t.failed;
      if (failures.size() < 50) failures.push_back(check + ": " + detail);
    }
  }
};

// Seed of the i-th generated instance.
inline std::uint64_t instance_seed(std::uint64_t seed, std::size_t i) {
  return SplitMix64(seed, {0x5EED, static_cast<std::uint64_t>(i)})();
}

namespace detail {

inline std::string describe(std::uint64_t inst_seed, double delta, const std::string& what) {
  std::ostringstream os;
  os << "instance seed " << inst_seed << ", delta " << format_number(delta) << ": " << what;
  return os.str();
}

inline void check_certificate(VerificationReport& rep, const BoundCertificate& c, double lower_q,
                              std::uint64_t inst_seed) {
  if (!c.certified()) return;
  ++rep.certified[std::string(to_string(c.theorem))];
  const bool ok = c.claimed_bound <= lower_q + kCertificateSlack;
  rep.record("certificate_soundness", ok,
             describe(inst_seed, c.delta,
                      std::string(to_string(c.theorem)) + " claims " +
                          format_number(c.claimed_bound) + " > lower quantile " +
                          format_number(lower_q)));
}

}  // namespace detail

// Checks one instance against every oracle property and bound certificate.
inline void verify_instance(VerificationReport& rep, const FiniteISDM& inst,
                            std::uint64_t inst_seed, const std::vector<double>& grid) {
  const ExactOracle oracle(inst);

  std::set<double> positive_losses;
  for (const auto& row : inst.loss_table()) {
    for (double l : row) {
      if (l > 0.0) positive_losses.insert(l);
    }
  }
  std::vector<FanoMiAnalysis> fano_mi;
  std::vector<FanoEpsilonStar> fano_eps;
  for (double Delta : positive_losses) {
    fano_mi.push_back(fano_mi_analysis(inst, inst.prior(), Delta));
    fano_eps.push_back(fano_epsilon_star(default_fano_setup(inst, inst.prior(), Delta)));
  }
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<PairDivergence> pair_div;
  std::vector<Separation> pair_sep;
  for (std::size_t a = 0; a < inst.num_models(); ++a) {
    for (std::size_t b = a + 1; b < inst.num_models(); ++b) {
      pairs.emplace_back(a, b);
      pair_div.push_back(pair_divergences(inst, a, b));
      pair_sep.push_back(check_separation(inst, a, b));
    }
  }

  const double risk = oracle.minimax_expected_risk().value;
  std::vector<double> sorted = grid;
  std::sort(sorted.begin(), sorted.end());
  double previous = kInfinity;
  for (double delta : sorted) {
    const double lower = oracle.lower_minimax_quantile(delta);
    const double strict = oracle.minimax_quantile_strict(delta);
    const double weak = oracle.weak_minimax_quantile(delta);

    rep.record("monotone_in_delta", lower <= previous,
               detail::describe(inst_seed, delta, "lower quantile increased"));
    previous = lower;
    rep.record("risk_vs_quantile", risk >= delta * strict - kIdentitySlack,
               detail::describe(inst_seed, delta,
                                "risk " + format_number(risk) + " < delta * " + format_number(strict)));
    rep.record("sandwich_lower", lower <= strict + kIdentitySlack,
               detail::describe(inst_seed, delta, "lower quantile exceeds strict quantile"));
    for (double xi : {delta / 4.0, delta / 2.0}) {
      const double shifted = oracle.lower_minimax_quantile(delta - xi);
      rep.record("sandwich_upper", strict <= shifted + kIdentitySlack,
                 detail::describe(inst_seed, delta,
                                  "strict " + format_number(strict) + " > lower at delta - " +
                                      format_number(xi)));
    }
    rep.record("weak_at_least_strict", weak >= strict,
               detail::describe(inst_seed, delta, "weak quantile below strict quantile"));

    if (delta < 0.5) {
      for (std::size_t k = 0; k < pairs.size(); ++k) {
        if (!pair_sep[k].holds) continue;
        const auto tv = lecam_tv_certificate(pair_div[k].tv_sup, delta, pair_sep[k].delta_max);
        const auto kl = lecam_kl_certificate(pair_div[k].kl_sup, delta, pair_sep[k].delta_max);
        detail::check_certificate(rep, tv, lower, inst_seed);
        detail::check_certificate(rep, kl, lower, inst_seed);
        if (kl.certified()) {
          rep.record("kl_implies_tv", tv.certified(),
                     detail::describe(inst_seed, delta, "KL form certified but TV form did not"));
        }
      }
    }
    for (std::size_t k = 0; k < fano_mi.size(); ++k) {
      detail::check_certificate(rep, fano_mi_certificate(fano_mi[k], delta), lower, inst_seed);
      detail::check_certificate(rep, fano_epsilon_star_certificate(fano_eps[k], delta), lower,
                                inst_seed);
    }
  }
  rep.max_gap = std::max(rep.max_gap, oracle.max_gap());
  rep.record("duality_gap", oracle.max_gap() <= kGameTolerance,
             detail::describe(inst_seed, 0.0, "game gap " + format_number(oracle.max_gap())));
}

// Runs the soundness suite on `instances` seeded random small instances.
inline VerificationReport run_verification(std::uint64_t seed, std::size_t instances,
                                           const std::vector<double>& grid = default_delta_grid()) {
  require(!grid.empty(), "delta grid must be nonempty");
  for (double d : grid) require(d > 0.0 && d < 1.0, "grid deltas must lie in (0, 1)");
  VerificationReport rep;
  rep.seed = seed;
  rep.instances = instances;
  rep.delta_grid = grid;
  for (std::size_t i = 0; i < instances; ++i) {
    const std::uint64_t s = instance_seed(seed, i);
    verify_instance(rep, random_small_instance(s), s, grid);
  }
  return rep;
}

inline json verification_to_json(const VerificationReport& rep) {
  json checks = json::object();
  for (const auto& [name, t] : rep.checks) {
    checks[name] = {{"checked", t.checked}, {"failed", t.failed}};
  }
  json certified = json::object();
  for (const auto& [name, n] : rep.certified) certified[name] = n;
  return {{"seed", rep.seed},
          {"instances", rep.instances},
          {"delta_grid", rep.delta_grid},
          {"checks", checks},
          {"certified", certified},
          {"failures", rep.failures},
          {"max_duality_gap", rep.max_gap},
          {"result", rep.passed() ? "PASS" : "FAIL"},
          {"tool_version", kToolVersion}};
}

}  // namespace isdm
