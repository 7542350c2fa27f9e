#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "isdm/divergence.hpp"
#include "isdm/error.hpp"
#include "isdm/quantile.hpp"
#include "isdm/rng.hpp"

namespace isdm {

struct EnumerationCaps {
  std::size_t transcripts = 1'000'000;
  std::size_t policies = 100'000;
};

struct Step {
  std::size_t action;
  std::size_t observation;
  friend bool operator==(const Step&, const Step&) = default;
};

struct Transcript {
  std::vector<Step> steps;
  friend bool operator==(const Transcript&, const Transcript&) = default;
};

// One observation law per action, over observation indices.
struct Model {
  std::vector<FiniteDist<std::size_t>> kernels;
};

enum class LossKind { Table, RegretBandit };

// Law of the transcript, dense over transcript indices.
using TrajectoryLaw = FiniteDist<std::size_t>;

namespace detail {

// base^exp, or cap + 1 if that exceeds cap.
inline std::size_t capped_pow(std::size_t base, std::size_t exp, std::size_t cap) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < exp; ++i) {
    if (base != 0 && r > cap / base) return cap + 1;
    r *= base;
  }
  return r;
}

}  // namespace detail

// A fully enumerable interactive decision problem: finitely many models, a
// prior, finite action and observation alphabets, horizon T, and a loss on
// (model, transcript). Transcripts are indexed lexicographically: step t
// contributes the digit action * |O| + observation in base |A||O|.
class FiniteISDM {
 public:
  using LossRule = std::function<double(std::size_t model, const Transcript&)>;

  FiniteISDM(std::vector<std::string> actions, std::vector<std::string> observations,
             std::vector<Model> models, FiniteDist<std::size_t> prior, std::size_t horizon,
             const LossRule& loss, EnumerationCaps caps = {})
      : actions_(std::move(actions)),
        observations_(std::move(observations)),
        models_(std::move(models)),
        prior_(std::move(prior)),
        horizon_(horizon),
        caps_(caps) {
    validate_structure();
    materialize(loss);
  }

  static FiniteISDM with_loss_table(std::vector<std::string> actions,
                                    std::vector<std::string> observations,
                                    std::vector<Model> models, FiniteDist<std::size_t> prior,
                                    std::size_t horizon, std::vector<std::vector<double>> table,
                                    EnumerationCaps caps = {}) {
    require(table.size() == models.size(), "loss table needs one row per model");
    auto rule = [](std::size_t, const Transcript&) { return 0.0; };
    FiniteISDM inst(std::move(actions), std::move(observations), std::move(models),
                    std::move(prior), horizon, rule, caps);
    for (std::size_t m = 0; m < table.size(); ++m) {
      require(table[m].size() == inst.num_transcripts(),
              "loss table row length must equal the number of transcripts");
    }
    inst.losses_ = std::move(table);
    inst.validate_losses();
    return inst;
  }

  // Pseudo-regret sum_t (mu*(M) - mu_{a_t}(M)), with arm means taken from
  // numeric observation labels.
  static FiniteISDM with_regret_loss(std::vector<std::string> actions,
                                     std::vector<std::string> observations,
                                     std::vector<Model> models, FiniteDist<std::size_t> prior,
                                     std::size_t horizon, EnumerationCaps caps = {}) {
    std::vector<double> values;
    for (const auto& o : observations) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(o, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      require(used == o.size() && std::isfinite(v),
              "regret loss requires numeric observation labels, got '" + o + "'");
      values.push_back(v);
    }
    std::vector<std::vector<double>> gaps;
    for (const auto& model : models) {
      std::vector<double> means;
      for (const auto& k : model.kernels) {
        double mean = 0.0;
        for (std::size_t o = 0; o < k.size() && o < values.size(); ++o) mean += k.prob(o) * values[o];
        means.push_back(mean);
      }
      double best = means.empty() ? 0.0 : *std::max_element(means.begin(), means.end());
      std::vector<double> g;
      for (double m : means) g.push_back(best - m);
      gaps.push_back(std::move(g));
    }
    const std::size_t num_actions = actions.size();
    auto rule = [gaps, num_actions](std::size_t m, const Transcript& x) {
      std::vector<std::size_t> pulls(num_actions, 0);
      for (const auto& s : x.steps) ++pulls[s.action];
      double regret = 0.0;
      for (std::size_t a = 0; a < num_actions; ++a) {
        regret += gaps[m][a] * static_cast<double>(pulls[a]);
      }
      return regret;
    };
    FiniteISDM inst(std::move(actions), std::move(observations), std::move(models),
                    std::move(prior), horizon, rule, caps);
    inst.loss_kind_ = LossKind::RegretBandit;
    return inst;
  }

  const std::vector<std::string>& actions() const { return actions_; }
  const std::vector<std::string>& observations() const { return observations_; }
  const std::vector<Model>& models() const { return models_; }
  const FiniteDist<std::size_t>& prior() const { return prior_; }
  std::size_t horizon() const { return horizon_; }
  std::size_t num_actions() const { return actions_.size(); }
  std::size_t num_observations() const { return observations_.size(); }
  std::size_t num_models() const { return models_.size(); }
  std::size_t num_transcripts() const { return num_transcripts_; }
  const EnumerationCaps& caps() const { return caps_; }
  LossKind loss_kind() const { return loss_kind_; }

  double kernel(std::size_t model, std::size_t action, std::size_t observation) const {
    return models_[model].kernels[action].prob(observation);
  }

  double loss(std::size_t model, std::size_t transcript) const {
    return losses_[model][transcript];
  }
  std::span<const double> loss_row(std::size_t model) const { return losses_[model]; }
  const std::vector<std::vector<double>>& loss_table() const { return losses_; }

  Transcript transcript(std::size_t index) const {
    Transcript x;
    x.steps.resize(horizon_);
    const std::size_t base = num_actions() * num_observations();
    for (std::size_t t = horizon_; t-- > 0;) {
      const std::size_t digit = index % base;
      index /= base;
      x.steps[t] = {digit / num_observations(), digit % num_observations()};
    }
    return x;
  }

  std::size_t index_of(const Transcript& x) const {
    require(x.steps.size() == horizon_, "transcript length differs from the horizon");
    std::size_t index = 0;
    for (const auto& s : x.steps) {
      require(s.action < num_actions() && s.observation < num_observations(),
              "transcript label out of range");
      index = index * num_actions() * num_observations() + s.action * num_observations() +
              s.observation;
    }
    return index;
  }

  // Same instance with the prior replaced.
  FiniteISDM with_prior(FiniteDist<std::size_t> prior) const {
    FiniteISDM copy = *this;
    require(prior.size() == models_.size(), "prior must have one entry per model");
    copy.prior_ = std::move(prior);
    return copy;
  }

 private:
  void validate_structure() {
    require(horizon_ >= 1, "horizon must be at least 1");
    require(!actions_.empty(), "instance needs at least one action");
    require(!observations_.empty(), "instance needs at least one observation");
    require(!models_.empty(), "instance needs at least one model");
    require(prior_.size() == models_.size(), "prior must have one entry per model");
    for (std::size_t i = 0; i < prior_.size(); ++i) {
      require(prior_.support()[i] == i, "prior support must be the model indices 0..n-1");
    }
    for (const auto& m : models_) {
      require(m.kernels.size() == actions_.size(), "every model needs one kernel per action");
      for (const auto& k : m.kernels) {
        require(k.size() == observations_.size(),
                "every kernel must cover the full observation alphabet");
        for (std::size_t o = 0; o < k.size(); ++o) {
          require(k.support()[o] == o, "kernel support must be the observation indices");
        }
      }
    }
    num_transcripts_ =
        detail::capped_pow(actions_.size() * observations_.size(), horizon_, caps_.transcripts);
    if (num_transcripts_ > caps_.transcripts) {
      throw CapExceeded("transcript space exceeds the enumeration cap of " +
                        std::to_string(caps_.transcripts));
    }
  }

  void materialize(const LossRule& loss) {
    losses_.assign(models_.size(), std::vector<double>(num_transcripts_));
    for (std::size_t x = 0; x < num_transcripts_; ++x) {
      const Transcript tr = transcript(x);
      for (std::size_t m = 0; m < models_.size(); ++m) losses_[m][x] = loss(m, tr);
    }
    validate_losses();
  }

  void validate_losses() const {
    for (const auto& row : losses_) {
      for (double l : row) require(std::isfinite(l) && l >= 0.0, "losses must be finite and nonnegative");
    }
  }

  std::vector<std::string> actions_;
  std::vector<std::string> observations_;
  std::vector<Model> models_;
  FiniteDist<std::size_t> prior_;
  std::size_t horizon_;
  EnumerationCaps caps_;
  std::size_t num_transcripts_ = 0;
  std::vector<std::vector<double>> losses_;
  LossKind loss_kind_ = LossKind::Table;
};

// A deterministic adaptive policy. Along any history the policy generated,
// the actions are implied by the observations, so the tree is stored as one
// action per observation prefix (o_1..o_t), t = 0..T-1, ordered by depth and
// then lexicographically.
class DeterministicPolicy {
 public:
  DeterministicPolicy(std::size_t num_actions, std::size_t num_observations, std::size_t horizon,
                      std::vector<std::size_t> node_actions)
      : num_actions_(num_actions),
        num_observations_(num_observations),
        horizon_(horizon),
        node_actions_(std::move(node_actions)) {
    require(horizon_ >= 1, "horizon must be at least 1");
    require(node_actions_.size() == num_nodes(num_observations_, horizon_),
            "policy tree has the wrong number of nodes");
    for (auto a : node_actions_) require(a < num_actions_, "policy action out of range");
  }

  static std::size_t num_nodes(std::size_t num_observations, std::size_t horizon) {
    std::size_t nodes = 0, width = 1;
    for (std::size_t t = 0; t < horizon; ++t) {
      nodes += width;
      width *= num_observations;
    }
    return nodes;
  }

  static DeterministicPolicy constant(const FiniteISDM& inst, std::size_t action) {
    require(action < inst.num_actions(), "action out of range");
    return {inst.num_actions(), inst.num_observations(), inst.horizon(),
            std::vector<std::size_t>(num_nodes(inst.num_observations(), inst.horizon()), action)};
  }

  // Tabulates a history-dependent rule on every reachable history.
  static DeterministicPolicy from_rule(
      const FiniteISDM& inst, const std::function<std::size_t(std::span<const Step>)>& rule) {
    std::vector<std::size_t> nodes(num_nodes(inst.num_observations(), inst.horizon()));
    std::vector<Step> history;
    std::function<void(std::size_t, std::size_t, std::size_t)> visit =
        [&](std::size_t depth, std::size_t offset, std::size_t code) {
          if (depth == inst.horizon()) return;
          const std::size_t a = rule(history);
          nodes[offset + code] = a;
          const std::size_t width = detail::capped_pow(inst.num_observations(), depth, SIZE_MAX - 1);
          for (std::size_t o = 0; o < inst.num_observations(); ++o) {
            history.push_back({a, o});
            visit(depth + 1, offset + width, code * inst.num_observations() + o);
            history.pop_back();
          }
        };
    visit(0, 0, 0);
    return {inst.num_actions(), inst.num_observations(), inst.horizon(), std::move(nodes)};
  }

  std::size_t action_at_node(std::size_t node) const { return node_actions_[node]; }

  // Action after the given history; only its observations are consulted.
  std::size_t action(std::span<const Step> history) const {
    require(history.size() < horizon_, "history is already at the horizon");
    std::size_t offset = 0, width = 1, code = 0;
    for (std::size_t t = 0; t < history.size(); ++t) {
      offset += width;
      width *= num_observations_;
      code = code * num_observations_ + history[t].observation;
    }
    return node_actions_[offset + code];
  }

  const std::vector<std::size_t>& node_actions() const { return node_actions_; }
  std::size_t horizon() const { return horizon_; }

  friend bool operator==(const DeterministicPolicy&, const DeterministicPolicy&) = default;

 private:
  std::size_t num_actions_;
  std::size_t num_observations_;
  std::size_t horizon_;
  std::vector<std::size_t> node_actions_;
};

struct PolicyMixture {
  std::vector<DeterministicPolicy> atoms;
  FiniteDist<std::size_t> weights;

  PolicyMixture(std::vector<DeterministicPolicy> policies, FiniteDist<std::size_t> w)
      : atoms(std::move(policies)), weights(std::move(w)) {
    require(!atoms.empty(), "policy mixture needs at least one atom");
    require(atoms.size() == weights.size(), "one weight per policy atom");
  }
};

inline std::size_t count_policies(const FiniteISDM& inst, std::size_t cap) {
  return detail::capped_pow(inst.num_actions(),
                            DeterministicPolicy::num_nodes(inst.num_observations(), inst.horizon()),
                            cap);
}

// All deterministic policy trees, ordered lexicographically by their node
// action vectors.
inline std::vector<DeterministicPolicy> enumerate_policies(const FiniteISDM& inst) {
  const std::size_t cap = inst.caps().policies;
  const std::size_t count = count_policies(inst, cap);
  if (count > cap) {
    throw CapExceeded("policy count exceeds the enumeration cap of " + std::to_string(cap));
  }
  const std::size_t nodes = DeterministicPolicy::num_nodes(inst.num_observations(), inst.horizon());
  std::vector<DeterministicPolicy> out;
  out.reserve(count);
  std::vector<std::size_t> digits(nodes, 0);
  for (std::size_t i = 0; i < count; ++i) {
    out.emplace_back(inst.num_actions(), inst.num_observations(), inst.horizon(), digits);
    for (std::size_t k = nodes; k-- > 0;) {
      if (++digits[k] < inst.num_actions()) break;
      digits[k] = 0;
    }
  }
  return out;
}

// Exact law of the transcript under (model, policy), by forward enumeration.
inline TrajectoryLaw trajectory_law(const FiniteISDM& inst, std::size_t model,
                                    const DeterministicPolicy& policy) {
  require(model < inst.num_models(), "model index out of range");
  require(policy.horizon() == inst.horizon(), "policy horizon differs from the instance");
  const std::size_t na = inst.num_actions(), no = inst.num_observations();
  std::vector<double> probs(inst.num_transcripts(), 0.0);
  std::function<void(std::size_t, std::size_t, std::size_t, std::size_t, double)> expand =
      [&](std::size_t depth, std::size_t node_offset, std::size_t code, std::size_t index,
          double p) {
        if (depth == inst.horizon()) {
          probs[index] += p;
          return;
        }
        const std::size_t a = policy.action_at_node(node_offset + code);
        std::size_t width = 1;
        for (std::size_t t = 0; t < depth; ++t) width *= no;
        for (std::size_t o = 0; o < no; ++o) {
          const double k = inst.kernel(model, a, o);
          if (k == 0.0) continue;
          expand(depth + 1, node_offset + width, code * no + o, index * na * no + a * no + o,
                 p * k);
        }
      };
  expand(0, 0, 0, 0, 1.0);
  std::vector<std::size_t> support(probs.size());
  std::iota(support.begin(), support.end(), std::size_t{0});
  return TrajectoryLaw::unchecked(std::move(support), std::move(probs));
}

// Pointwise convex combination of a family of laws on a common support.
inline TrajectoryLaw mix_laws(std::span<const TrajectoryLaw> laws, std::span<const double> weights) {
  require(!laws.empty() && laws.size() == weights.size(), "one weight per law");
  std::vector<double> probs(laws.front().size(), 0.0);
  for (std::size_t i = 0; i < laws.size(); ++i) {
    require_same_support(laws.front(), laws[i]);
    if (weights[i] == 0.0) continue;
    for (std::size_t x = 0; x < probs.size(); ++x) probs[x] += weights[i] * laws[i].prob(x);
  }
  return TrajectoryLaw::unchecked(laws.front().support(), std::move(probs));
}

inline TrajectoryLaw mixture_law(const FiniteISDM& inst, std::size_t model,
                                 const PolicyMixture& mix) {
  std::vector<TrajectoryLaw> laws;
  laws.reserve(mix.atoms.size());
  for (const auto& p : mix.atoms) laws.push_back(trajectory_law(inst, model, p));
  return mix_laws(laws, mix.weights.probs());
}

// Pushforward of a transcript law through L(model, .); equal losses merge.
inline LossDistribution loss_distribution(const FiniteISDM& inst, std::size_t model,
                                          const TrajectoryLaw& law) {
  require(law.size() == inst.num_transcripts(), "law does not match the transcript space");
  std::vector<LossAtom> atoms;
  for (std::size_t x = 0; x < law.size(); ++x) {
    if (law.prob(x) > 0.0) atoms.push_back({inst.loss(model, x), law.prob(x)});
  }
  return LossDistribution::from_atoms(std::move(atoms), 1e-9);
}

// E[N_a] for every action under a transcript law.
inline std::vector<double> expected_pulls(const FiniteISDM& inst, const TrajectoryLaw& law) {
  std::vector<double> pulls(inst.num_actions(), 0.0);
  for (std::size_t x = 0; x < law.size(); ++x) {
    if (law.prob(x) == 0.0) continue;
    for (const auto& s : inst.transcript(x).steps) pulls[s.action] += law.prob(x);
  }
  return pulls;
}

struct SimulationResult {
  Transcript transcript;
  double loss;
};

namespace detail {

inline std::size_t sample_index(std::span<const double> probs, double u) {
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  // u beyond accumulated mass (rounding): last outcome with positive mass.
  for (std::size_t i = probs.size(); i-- > 0;) {
    if (probs[i] > 0.0) return i;
  }
  return 0;
}

}  // namespace detail

// One sampled interaction under a (possibly randomized) history-dependent
// algorithm. Observations consume exactly one uniform per step.
inline SimulationResult simulate(
    const FiniteISDM& inst, std::size_t model,
    const std::function<std::size_t(std::span<const Step>, SplitMix64&)>& algorithm,
    std::uint64_t seed) {
  require(model < inst.num_models(), "model index out of range");
  SplitMix64 rng(seed, {0x51u});
  SplitMix64 alg_rng(seed, {0xA1u});
  Transcript x;
  x.steps.reserve(inst.horizon());
  for (std::size_t t = 0; t < inst.horizon(); ++t) {
    const std::size_t a = algorithm(x.steps, alg_rng);
    require(a < inst.num_actions(), "algorithm chose an action out of range");
    const std::size_t o = detail::sample_index(inst.models()[model].kernels[a].probs(), rng.uniform());
    x.steps.push_back({a, o});
  }
  const double l = inst.loss(model, inst.index_of(x));
  return {std::move(x), l};
}

inline SimulationResult simulate(const FiniteISDM& inst, std::size_t model,
                                 const DeterministicPolicy& policy, std::uint64_t seed) {
  return simulate(
      inst, model, [&policy](std::span<const Step> h, SplitMix64&) { return policy.action(h); },
      seed);
}

}  // namespace isdm
