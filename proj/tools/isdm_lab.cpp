// isdm_lab: certificates, bandit experiments, exact oracles and the
// verification suite from the command line.
//
// Exit codes: 0 success, 1 a verdict failed, 2 malformed input, 3 an
// enumeration cap was exceeded.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "isdm/bandit.hpp"
#include "isdm/bounds.hpp"
#include "isdm/error.hpp"
#include "isdm/oracle.hpp"
#include "isdm/serialize.hpp"
#include "isdm/verify.hpp"

namespace {

using isdm::json;

struct RunConfig {
  std::size_t T = 100;
  double delta = 0.05;
  double eta = 0.05;
  std::size_t reps = 200'000;
  std::uint64_t seed = 0;
  std::vector<std::string> alg{"uniform"};
  std::string instance;
  std::string out;
  std::vector<double> delta_grid = isdm::default_delta_grid();
  std::size_t instances = 50;
  std::string config;
  // bound lecam / fano extras
  double tv = -1.0;
  double kl = -1.0;
  double Delta = -1.0;
  std::vector<std::size_t> pair{0, 1};
  std::string form;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Writes to --out, or into a default file name when --out is a directory, or
// to stdout when --out is empty.
void emit(const RunConfig& cfg, const std::string& default_name, const std::string& text) {
  if (cfg.out.empty()) {
    std::cout << text;
    return;
  }
  std::filesystem::path p(cfg.out);
  if (std::filesystem::is_directory(p)) p /= default_name;
  isdm::write_text_file(p.string(), text);
}

void emit_json(const RunConfig& cfg, const std::string& default_name, const json& j) {
  emit(cfg, default_name, isdm::dump_json(j));
}

std::size_t model_count_check(const isdm::FiniteISDM& inst, std::size_t m) {
  if (m >= inst.num_models()) throw isdm::DomainError("model index " + std::to_string(m) + " out of range");
  return m;
}

isdm::FiniteISDM require_instance(const RunConfig& cfg) {
  if (cfg.instance.empty()) throw UsageError("this command needs --instance");
  return isdm::load_instance(cfg.instance);
}

int cmd_bound_bandit(const RunConfig& cfg) {
  emit_json(cfg, "certificate.json", isdm::certificate_to_json(isdm::bandit_certificate(cfg.T, cfg.delta)));
  return 0;
}

int cmd_bound_lecam(const RunConfig& cfg) {
  isdm::detail::require_lecam_delta(cfg.delta);
  std::string form = cfg.form;
  isdm::BoundCertificate cert{};
  if (!cfg.instance.empty()) {
    const auto inst = isdm::load_instance(cfg.instance);
    if (cfg.pair.size() != 2) throw UsageError("--pair takes two model indices");
    const auto m1 = model_count_check(inst, cfg.pair[0]);
    const auto m2 = model_count_check(inst, cfg.pair[1]);
    if (m1 == m2) throw UsageError("--pair needs two distinct models");
    const auto certs = isdm::lecam_certificates(inst, m1, m2, cfg.delta);
    if (form.empty()) form = "kl";
    cert = form == "tv" ? certs.tv : certs.kl;
    cert.instance_hash = isdm::instance_hash(inst);
  } else {
    if (cfg.Delta < 0.0) throw UsageError("bound lecam needs --instance or --Delta with --tv/--kl");
    if (form.empty()) form = cfg.kl >= 0.0 ? "kl" : "tv";
    if (form == "tv") {
      if (cfg.tv < 0.0) throw UsageError("the TV form needs --tv");
      cert = isdm::lecam_tv_certificate(cfg.tv, cfg.delta, cfg.Delta);
    } else {
      if (cfg.kl < 0.0) throw UsageError("the KL form needs --kl");
      cert = isdm::lecam_kl_certificate(cfg.kl, cfg.delta, cfg.Delta);
    }
  }
  if (form != "tv" && form != "kl") throw UsageError("--form must be tv or kl for lecam");
  emit_json(cfg, "certificate.json", isdm::certificate_to_json(cert));
  return 0;
}

int cmd_bound_fano(const RunConfig& cfg) {
  isdm::detail::require_level(cfg.delta);
  if (cfg.Delta <= 0.0) throw UsageError("bound fano needs --Delta > 0");
  const auto inst = require_instance(cfg);
  const std::string form = cfg.form.empty() ? "epsilon-star" : cfg.form;
  isdm::BoundCertificate cert{};
  if (form == "mi") {
    cert = isdm::fano_mi_certificate(inst, inst.prior(), cfg.Delta, cfg.delta);
  } else if (form == "epsilon-star") {
    cert = isdm::fano_epsilon_star_certificate(
        isdm::fano_epsilon_star(isdm::default_fano_setup(inst, inst.prior(), cfg.Delta)), cfg.delta);
  } else {
    throw UsageError("--form must be mi or epsilon-star for fano");
  }
  cert.instance_hash = isdm::instance_hash(inst);
  emit_json(cfg, "certificate.json", isdm::certificate_to_json(cert));
  return 0;
}

int cmd_simulate_bandit(const RunConfig& cfg) {
  std::vector<isdm::bandit::BanditAlgorithm> algs;
  for (const auto& spec : cfg.alg) {
    std::size_t start = 0;
    while (start <= spec.size()) {
      const auto comma = spec.find(',', start);
      const auto piece = spec.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      if (!piece.empty()) algs.push_back(isdm::bandit::parse_algorithm(piece));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  if (algs.empty()) throw UsageError("--alg is empty");
  std::string csv = isdm::experiment_csv_header();
  bool all_pass = true;
  for (const auto& alg : algs) {
    const auto report = isdm::bandit::regret_quantile_experiment(alg, cfg.T, cfg.delta, cfg.eta,
                                                                 cfg.reps, cfg.seed);
    csv += isdm::experiment_csv_rows(report);
    all_pass = all_pass && report.pass && report.separation_violations == 0;
  }
  emit(cfg, "experiment.csv", csv);
  return all_pass ? 0 : 1;
}

json oracle_header(const isdm::FiniteISDM& inst) {
  return {{"instance_hash", isdm::instance_hash(inst)},
          {"algorithms", "randomized: mixtures over deterministic policy trees"},
          {"tool_version", isdm::kToolVersion}};
}

int cmd_oracle_tail(const RunConfig& cfg) {
  const auto inst = require_instance(cfg);
  const isdm::ExactOracle oracle(inst);
  json j = oracle_header(inst);
  j["tail_curve"] = isdm::tail_curve_to_json(oracle.tail_curve());
  json games = json::array();
  for (double b : oracle.breakpoints()) {
    json g = isdm::game_value_to_json(oracle.minimax_tail(b));
    g["r"] = b;
    games.push_back(g);
  }
  j["games"] = games;
  emit_json(cfg, "oracle_tail.json", j);
  return 0;
}

int cmd_oracle_quantile(const RunConfig& cfg) {
  const auto inst = require_instance(cfg);
  const isdm::ExactOracle oracle(inst);
  json j = oracle_header(inst);
  json rows = json::array();
  for (double d : cfg.delta_grid) {
    rows.push_back({{"delta", d},
                    {"lower", oracle.lower_minimax_quantile(d)},
                    {"strict", oracle.minimax_quantile_strict(d)},
                    {"weak", oracle.weak_minimax_quantile(d)}});
  }
  j["quantiles"] = rows;
  j["tail_curve"] = isdm::tail_curve_to_json(oracle.tail_curve());
  emit_json(cfg, "oracle_quantile.json", j);
  return 0;
}

int cmd_oracle_risk(const RunConfig& cfg) {
  const auto inst = require_instance(cfg);
  const isdm::ExactOracle oracle(inst);
  json j = oracle_header(inst);
  j["expected_risk"] = isdm::game_value_to_json(oracle.minimax_expected_risk());
  emit_json(cfg, "oracle_risk.json", j);
  return 0;
}

int cmd_verify(const RunConfig& cfg) {
  const auto rep = isdm::run_verification(cfg.seed, cfg.instances, cfg.delta_grid);
  emit_json(cfg, "verify.json", isdm::verification_to_json(rep));
  if (!cfg.out.empty()) std::cerr << "verify: " << (rep.passed() ? "PASS" : "FAIL") << '\n';
  return rep.passed() ? 0 : 1;
}

// Fills every option the user did not pass on the command line from the JSON
// config file.
void apply_config(RunConfig& cfg, const CLI::App& app) {
  if (cfg.config.empty()) return;
  json j;
  try {
    j = json::parse(isdm::read_text_file(cfg.config));
  } catch (const json::parse_error& e) {
    throw UsageError("config '" + cfg.config + "' is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  const std::map<std::string, std::function<void(const json&)>> setters{
      {"T", [&](const json& v) { cfg.T = v.get<std::size_t>(); }},
      {"delta", [&](const json& v) { cfg.delta = v.get<double>(); }},
      {"eta", [&](const json& v) { cfg.eta = v.get<double>(); }},
      {"reps", [&](const json& v) { cfg.reps = v.get<std::size_t>(); }},
      {"seed", [&](const json& v) { cfg.seed = v.get<std::uint64_t>(); }},
      {"alg",
       [&](const json& v) {
         cfg.alg = v.is_array() ? v.get<std::vector<std::string>>()
                                : std::vector<std::string>{v.get<std::string>()};
       }},
      {"instance", [&](const json& v) { cfg.instance = v.get<std::string>(); }},
      {"out", [&](const json& v) { cfg.out = v.get<std::string>(); }},
      {"delta_grid", [&](const json& v) { cfg.delta_grid = v.get<std::vector<double>>(); }},
      {"instances", [&](const json& v) { cfg.instances = v.get<std::size_t>(); }},
      {"tv", [&](const json& v) { cfg.tv = v.get<double>(); }},
      {"kl", [&](const json& v) { cfg.kl = v.get<double>(); }},
      {"Delta", [&](const json& v) { cfg.Delta = v.get<double>(); }},
      {"pair", [&](const json& v) { cfg.pair = v.get<std::vector<std::size_t>>(); }},
      {"form", [&](const json& v) { cfg.form = v.get<std::string>(); }},
  };
  // Options can live on the subcommand that was run or on the root.
  auto given = [&](const std::string& key) {
    const std::string flag = key == "delta_grid" ? "--delta-grid" : "--" + key;
    for (const CLI::App* a = &app; a != nullptr;) {
      for (const CLI::Option* o : a->get_options()) {
        if (o->check_lname(flag.substr(2)) && o->count() > 0) return true;
      }
      const auto subs = a->get_subcommands();
      a = subs.empty() ? nullptr : subs.front();
    }
    return false;
  };
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto s = setters.find(it.key());
    if (s == setters.end()) throw UsageError("unknown config key '" + it.key() + "'");
    if (given(it.key())) continue;
    try {
      s->second(it.value());
    } catch (const json::exception& e) {
      throw UsageError("config key '" + it.key() + "': " + e.what());
    }
  }
}

void add_common(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--T", cfg.T, "horizon");
  sub->add_option("--delta", cfg.delta, "tail level");
  sub->add_option("--eta", cfg.eta, "gap shrinkage for the bandit experiment");
  sub->add_option("--reps", cfg.reps, "episodes per model");
  sub->add_option("--seed", cfg.seed, "master seed");
  sub->add_option("--alg", cfg.alg, "bandit algorithm(s): uniform, egreedy:E, etc:M, ucb:C");
  sub->add_option("--instance", cfg.instance, "instance JSON file");
  sub->add_option("--out", cfg.out, "output file or directory (default stdout)");
  sub->add_option("--delta-grid", cfg.delta_grid, "comma-separated deltas")->delimiter(',');
  sub->add_option("--instances", cfg.instances, "random instances for verify");
  sub->add_option("--tv", cfg.tv, "total variation for the two-point TV form");
  sub->add_option("--kl", cfg.kl, "KL divergence for the two-point KL form");
  sub->add_option("--Delta", cfg.Delta, "separation level");
  sub->add_option("--pair", cfg.pair, "two model indices")->delimiter(',')->expected(2);
  sub->add_option("--form", cfg.form, "lecam: tv|kl, fano: mi|epsilon-star");
  sub->add_option("--config", cfg.config, "JSON config; command-line flags win");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minimax quantile lower-bound lab", "isdm_lab"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(isdm::kToolVersion));
  RunConfig cfg;
  std::function<int(const RunConfig&)> action;

  auto* bound = app.add_subcommand("bound", "emit a lower-bound certificate");
  bound->require_subcommand(1);
  auto* oracle = app.add_subcommand("oracle", "exact minimax quantities of a finite instance");
  oracle->require_subcommand(1);
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo experiments");
  simulate->require_subcommand(1);
  auto* verify = app.add_subcommand("verify", "certificate soundness suite on random instances");
  add_common(verify, cfg);
  verify->callback([&] { action = cmd_verify; });

  struct Leaf {
    CLI::App* parent;
    const char* name;
    const char* help;
    int (*fn)(const RunConfig&);
  };
  for (const Leaf& leaf : {Leaf{bound, "lecam", "two-point certificate", cmd_bound_lecam},
                           Leaf{bound, "fano", "Fano certificate", cmd_bound_fano},
                           Leaf{bound, "bandit", "Gaussian bandit closed form", cmd_bound_bandit},
                           Leaf{simulate, "bandit", "hard-pair regret quantile experiment",
                                cmd_simulate_bandit},
                           Leaf{oracle, "tail", "minimax tail curve", cmd_oracle_tail},
                           Leaf{oracle, "quantile", "minimax quantiles over the delta grid",
                                cmd_oracle_quantile},
                           Leaf{oracle, "risk", "minimax expected risk", cmd_oracle_risk}}) {
    auto* sub = leaf.parent->add_subcommand(leaf.name, leaf.help);
    add_common(sub, cfg);
    auto* fn = leaf.fn;
    sub->callback([&action, fn] { action = fn; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    apply_config(cfg, app);
    return action(cfg);
  } catch (const isdm::CapExceeded& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const isdm::DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
