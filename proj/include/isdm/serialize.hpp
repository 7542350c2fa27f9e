#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "isdm/bandit.hpp"
#include "isdm/bounds.hpp"
#include "isdm/error.hpp"
#include "isdm/isdm.hpp"
#include "isdm/oracle.hpp"
#include "isdm/version.hpp"

namespace isdm {

using json = nlohmann::json;

// %.17g, which round-trips every double. Non-finite values become strings.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "\"nan\"";
  if (std::isinf(v)) return v > 0 ? "\"inf\"" : "\"-inf\"";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double number_from_json(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return kInfinity;
    if (s == "-inf") return -kInfinity;
    if (s == "nan") return std::nan("");
  }
  throw DomainError("expected a number, got " + j.dump());
}

namespace detail {

inline void write_json(std::ostringstream& os, const json& j, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
  const std::string close_pad(static_cast<std::size_t>(indent * depth), ' ');
  const char* nl = indent > 0 ? "\n" : "";
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << '{' << nl;
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {  // std::map: keys sorted
        if (!first) os << ',' << nl;
        first = false;
        os << pad << json(it.key()).dump() << (indent > 0 ? ": " : ":");
        write_json(os, it.value(), indent, depth + 1);
      }
      os << nl << close_pad << '}';
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      os << '[' << nl;
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i > 0) os << ',' << nl;
        os << pad;
        write_json(os, j[i], indent, depth + 1);
      }
      os << nl << close_pad << ']';
      return;
    }
    case json::value_t::number_float:
      os << format_number(j.get<double>());
      return;
    default:
      os << j.dump();
  }
}

}  // namespace detail

// Deterministic text: sorted keys, 17 significant digits, no timestamps.
inline std::string dump_json(const json& j, int indent = 2) {
  std::ostringstream os;
  detail::write_json(os, j, indent, 0);
  os << '\n';
  return os.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// 64-bit FNV-1a, printed as 16 hex digits.
inline std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---- instances -------------------------------------------------------------

inline json instance_to_json(const FiniteISDM& inst) {
  json j;
  j["actions"] = inst.actions();
  j["observations"] = inst.observations();
  j["horizon"] = inst.horizon();
  j["prior"] = std::vector<double>(inst.prior().probs().begin(), inst.prior().probs().end());
  json models = json::array();
  for (const auto& m : inst.models()) {
    json kernels = json::array();
    for (const auto& k : m.kernels) kernels.push_back(std::vector<double>(k.probs().begin(), k.probs().end()));
    models.push_back({{"kernels", kernels}});
  }
  j["models"] = models;
  if (inst.loss_kind() == LossKind::RegretBandit) {
    j["loss"] = {{"type", "regret_bandit"}};
  } else {
    j["loss"] = {{"type", "table"}, {"values", inst.loss_table()}};
  }
  return j;
}

inline FiniteISDM instance_from_json(const json& j) {
  try {
    for (const char* key : {"actions", "observations", "horizon", "prior", "models", "loss"}) {
      require(j.contains(key), std::string("instance is missing field '") + key + "'");
    }
    auto actions = j.at("actions").get<std::vector<std::string>>();
    auto observations = j.at("observations").get<std::vector<std::string>>();
    const auto horizon_raw = j.at("horizon");
    require(horizon_raw.is_number_integer() && horizon_raw.get<long long>() >= 1,
            "horizon must be a positive integer");
    const auto horizon = horizon_raw.get<std::size_t>();

    std::vector<Model> models;
    for (const auto& m : j.at("models")) {
      require(m.contains("kernels"), "model is missing 'kernels'");
      Model model;
      for (const auto& k : m.at("kernels")) model.kernels.push_back(dense_dist(k.get<std::vector<double>>()));
      models.push_back(std::move(model));
    }
    auto prior = dense_dist(j.at("prior").get<std::vector<double>>());

    EnumerationCaps caps;
    if (j.contains("caps")) {
      caps.transcripts = j["caps"].value("transcripts", caps.transcripts);
      caps.policies = j["caps"].value("policies", caps.policies);
    }

    const auto& loss = j.at("loss");
    const auto type = loss.at("type").get<std::string>();
    if (type == "regret_bandit") {
      return FiniteISDM::with_regret_loss(std::move(actions), std::move(observations),
                                          std::move(models), std::move(prior), horizon, caps);
    }
    require(type == "table", "loss type must be 'table' or 'regret_bandit'");
    require(loss.contains("values"), "table loss needs 'values'");
    std::vector<std::vector<double>> table;
    for (const auto& row : loss.at("values")) {
      std::vector<double> r;
      for (const auto& v : row) r.push_back(number_from_json(v));
      table.push_back(std::move(r));
    }
    return FiniteISDM::with_loss_table(std::move(actions), std::move(observations),
                                       std::move(models), std::move(prior), horizon,
                                       std::move(table), caps);
  } catch (const json::exception& e) {
    throw DomainError(std::string("malformed instance: ") + e.what());
  }
}

inline FiniteISDM load_instance(const std::string& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw DomainError("instance '" + path + "' is not valid JSON: " + e.what());
  }
  return instance_from_json(j);
}

inline std::string instance_hash(const FiniteISDM& inst) {
  return fnv1a_hex(dump_json(instance_to_json(inst), 0));
}

// ---- certificates ----------------------------------------------------------

inline json certificate_to_json(const BoundCertificate& c) {
  json inputs = json::object();
  for (const auto& [k, v] : c.inputs) inputs[k] = v;
  return {{"theorem", std::string(to_string(c.theorem))},
          {"delta", c.delta},
          {"claimed_bound", c.claimed_bound},
          {"inputs", inputs},
          {"verdict", std::string(to_string(c.verdict))},
          {"notes", c.notes},
          {"tool_version", kToolVersion},
          {"instance_hash", c.instance_hash}};
}

inline BoundCertificate certificate_from_json(const json& j) {
  try {
    BoundCertificate c{};
    c.theorem = parse_theorem(j.at("theorem").get<std::string>());
    c.delta = number_from_json(j.at("delta"));
    c.claimed_bound = number_from_json(j.at("claimed_bound"));
    for (auto it = j.at("inputs").begin(); it != j.at("inputs").end(); ++it) {
      c.inputs[it.key()] = number_from_json(it.value());
    }
    c.verdict = parse_verdict(j.at("verdict").get<std::string>());
    c.notes = j.value("notes", "");
    c.instance_hash = j.value("instance_hash", "");
    return c;
  } catch (const json::exception& e) {
    throw DomainError(std::string("malformed certificate: ") + e.what());
  }
}

// ---- oracle exports --------------------------------------------------------

inline json game_value_to_json(const GameValue& g) {
  return {{"value", g.value}, {"gap", g.gap}, {"row_mixture", g.row_mixture},
          {"col_mixture", g.col_mixture}};
}

inline json tail_curve_to_json(const TailCurve& c) {
  return {{"breakpoints", c.breakpoints()}, {"values", c.values()},
          {"semantics", "right-continuous step function r -> inf_ALG sup_M P(L > r); "
                        "ALG ranges over mixtures of deterministic policies"}};
}

// ---- bandit CSV ------------------------------------------------------------

inline std::string experiment_csv_header() {
  return "alg,model,T,delta,eta,reps,seed,g,quantile_emp,tail_ci_lo,tail_ci_hi,bound,verdict\n";
}

inline std::string experiment_csv_rows(const bandit::ExperimentReport& r) {
  std::ostringstream os;
  auto row = [&](const std::string& model, double q, const WilsonInterval& ci,
                 const std::string& verdict) {
    os << r.algorithm << ',' << model << ',' << r.T << ',' << format_number(r.delta) << ','
       << format_number(r.eta) << ',' << r.reps << ',' << r.seed << ',' << format_number(r.g)
       << ',' << format_number(q) << ',' << format_number(ci.lo) << ',' << format_number(ci.hi)
       << ',' << format_number(r.bound) << ',' << verdict << '\n';
  };
  for (const auto& m : r.models) row(m.name, m.quantile, m.tail_ci, "n/a");
  row("max", r.max_quantile, r.models[r.worst_model].tail_ci, r.verdict());
  return os.str();
}

}  // namespace isdm
