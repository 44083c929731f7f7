#pragma once

// Run configuration: a small line-oriented format with [section] headers
// and key = value lines, '#' starting a comment. Unknown sections, unknown
// keys, duplicate keys, and malformed values are all hard parse errors;
// silence would hide typos that change an experiment.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "swob/adversary.hpp"
#include "swob/analysis.hpp"
#include "swob/core.hpp"
#include "swob/csv.hpp"
#include "swob/engine.hpp"
#include "swob/error.hpp"
#include "swob/learner.hpp"

namespace swob {

struct AdversaryConfig {
  std::string generator;  // stochastic_gap | hard_instance | file
  std::optional<std::size_t> T;
  std::optional<std::size_t> K;
  std::optional<std::size_t> optimal_action;
  std::optional<double> gap;
  std::optional<double> base;        // mean loss of the best arm, default 0.4
  std::optional<std::string> epsilon;  // a number, or "regime"
  std::optional<std::string> sigma;    // a number, or "default"
  double c1 = 0.1, c2 = 0.1, c3 = 0.1;  // regime gap constants
  std::uint64_t seed = 0;               // used when seed_policy = fixed
  InstanceSeedPolicy seed_policy = InstanceSeedPolicy::PER_REPETITION;
  std::optional<std::string> path;  // generator = file
};

struct LearnerConfig {
  std::string mode;  // full | flex | bandit | router
  std::optional<std::size_t> budget;
  std::optional<std::size_t> M;  // flex observation size
  double threshold_c = 1.0;      // router threshold constant
  std::optional<double> eta_override;
  std::optional<std::size_t> batches_override;
  std::optional<std::size_t> batch_len_override;
};

struct EngineSection {
  std::size_t repetitions = 1;
  std::uint64_t base_seed = 0;
  bool switching_costs = true;
  BudgetSetting setting = BudgetSetting::TOTAL_BUDGET;
};

struct OutputSection {
  std::string out_dir = ".";
  bool export_trajectories = false;
};

struct RunConfig {
  AdversaryConfig adversary;
  LearnerConfig learner;
  EngineSection engine;
  OutputSection output;
  std::string raw_text;  // the config exactly as read, echoed into metadata
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

inline double config_double(const std::string& v, std::size_t line) {
  try {
    return parse_double(v, line);
  } catch (const ParseError&) {
    throw ParseError("line " + std::to_string(line) + ": bad number '" + v + "'");
  }
}

inline std::uint64_t config_u64(const std::string& v, std::size_t line) {
  try {
    return parse_u64(v, line);
  } catch (const ParseError&) {
    throw ParseError("line " + std::to_string(line) + ": bad integer '" + v +
                     "'");
  }
}

inline bool config_bool(const std::string& v, std::size_t line) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ParseError("line " + std::to_string(line) + ": expected true or false, got '" +
                   v + "'");
}

}  // namespace detail

inline RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg;
  cfg.raw_text = text;

  std::istringstream in(text);
  std::string line;
  std::string section;
  std::set<std::string> seen;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ParseError("line " + std::to_string(lineno) +
                         ": unterminated section header");
      }
      section = detail::trim(line.substr(1, line.size() - 2));
      if (section != "adversary" && section != "learner" &&
          section != "engine" && section != "output") {
        throw ParseError("line " + std::to_string(lineno) +
                         ": unknown section [" + section + "]");
      }
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("line " + std::to_string(lineno) +
                       ": expected key = value");
    }
    if (section.empty()) {
      throw ParseError("line " + std::to_string(lineno) +
                       ": key before any [section]");
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ParseError("line " + std::to_string(lineno) +
                       ": empty key or value");
    }
    if (!seen.insert(section + "." + key).second) {
      throw ParseError("line " + std::to_string(lineno) + ": duplicate key '" +
                       key + "' in section [" + section + "]");
    }

    const std::size_t n = lineno;
    if (section == "adversary") {
      auto& a = cfg.adversary;
      if (key == "generator") a.generator = value;
      else if (key == "T") a.T = detail::config_u64(value, n);
      else if (key == "K") a.K = detail::config_u64(value, n);
      else if (key == "optimal_action") a.optimal_action = detail::config_u64(value, n);
      else if (key == "gap") a.gap = detail::config_double(value, n);
      else if (key == "base") a.base = detail::config_double(value, n);
      else if (key == "epsilon") a.epsilon = value;
      else if (key == "sigma") a.sigma = value;
      else if (key == "c1") a.c1 = detail::config_double(value, n);
      else if (key == "c2") a.c2 = detail::config_double(value, n);
      else if (key == "c3") a.c3 = detail::config_double(value, n);
      else if (key == "seed") a.seed = detail::config_u64(value, n);
      else if (key == "seed_policy") {
        if (value == "per_repetition") a.seed_policy = InstanceSeedPolicy::PER_REPETITION;
        else if (value == "fixed") a.seed_policy = InstanceSeedPolicy::FIXED;
        else throw ParseError("line " + std::to_string(n) +
                              ": seed_policy must be per_repetition or fixed");
      }
      else if (key == "path") a.path = value;
      else throw ParseError("line " + std::to_string(n) + ": unknown key '" +
                            key + "' in section [adversary]");
    } else if (section == "learner") {
      auto& l = cfg.learner;
      if (key == "mode") l.mode = value;
      else if (key == "budget") l.budget = detail::config_u64(value, n);
      else if (key == "M") l.M = detail::config_u64(value, n);
      else if (key == "threshold_c") l.threshold_c = detail::config_double(value, n);
      else if (key == "eta_override") l.eta_override = detail::config_double(value, n);
      else if (key == "batches_override") l.batches_override = detail::config_u64(value, n);
      else if (key == "batch_len_override") l.batch_len_override = detail::config_u64(value, n);
      else throw ParseError("line " + std::to_string(n) + ": unknown key '" +
                            key + "' in section [learner]");
    } else if (section == "engine") {
      auto& e = cfg.engine;
      if (key == "repetitions") e.repetitions = detail::config_u64(value, n);
      else if (key == "base_seed") e.base_seed = detail::config_u64(value, n);
      else if (key == "switching_costs") e.switching_costs = detail::config_bool(value, n);
      else if (key == "setting") {
        try {
          e.setting = budget_setting_from_string(value);
        } catch (const ParseError&) {
          throw ParseError("line " + std::to_string(n) +
                           ": setting must be total_budget or extra_budget");
        }
      }
      else throw ParseError("line " + std::to_string(n) + ": unknown key '" +
                            key + "' in section [engine]");
    } else {  // output
      auto& o = cfg.output;
      if (key == "out_dir") o.out_dir = value;
      else if (key == "export_trajectories") o.export_trajectories = detail::config_bool(value, n);
      else throw ParseError("line " + std::to_string(n) + ": unknown key '" +
                            key + "' in section [output]");
    }
  }
  return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

// ---- plan building -----------------------------------------------------

enum class SweepAxis { BUDGET_B, EXTRA_BUDGET_B_EX, HORIZON_T };

inline const char* to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::BUDGET_B: return "BUDGET_B";
    case SweepAxis::EXTRA_BUDGET_B_EX: return "EXTRA_BUDGET_B_EX";
    case SweepAxis::HORIZON_T: return "HORIZON_T";
  }
  return "?";
}

inline SweepAxis sweep_axis_from_string(const std::string& s) {
  if (s == "BUDGET_B" || s == "budget_b") return SweepAxis::BUDGET_B;
  if (s == "EXTRA_BUDGET_B_EX" || s == "extra_budget_b_ex") {
    return SweepAxis::EXTRA_BUDGET_B_EX;
  }
  if (s == "HORIZON_T" || s == "horizon_t") return SweepAxis::HORIZON_T;
  throw ParseError("unknown sweep axis: " + s +
                   " (expected BUDGET_B, EXTRA_BUDGET_B_EX, or HORIZON_T)");
}

// Everything needed to execute one configured run (or one sweep point).
struct RunPlan {
  AdversarySource source;
  AlgorithmSpec spec;
  GameConfig game;
  std::size_t T = 0;
  std::size_t K = 0;
  double resolved_epsilon = std::numeric_limits<double>::quiet_NaN();
  double resolved_sigma = std::numeric_limits<double>::quiet_NaN();
  double bound = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

// Builds the adversary source, resolving "regime"/"default" keywords.
// extra_budget is the charged B_ex when the run uses the extra setting,
// otherwise 0 (pure bandit feedback).
inline AdversarySource build_adversary(const AdversaryConfig& a,
                                       std::size_t extra_budget,
                                       double* epsilon_out,
                                       double* sigma_out,
                                       std::size_t* T_out,
                                       std::size_t* K_out) {
  if (a.generator.empty()) {
    throw ParseError("adversary: missing required key 'generator'");
  }
  if (a.generator == "file") {
    if (!a.path) throw ParseError("adversary: generator=file needs 'path'");
    if (a.T || a.K) {
      throw ParseError(
          "adversary: T and K are implied by the instance file; remove them");
    }
    LoadedInstance loaded = load_instance(*a.path);
    *T_out = loaded.matrix.T;
    *K_out = loaded.matrix.K;
    return AdversarySource::fixed(std::move(loaded.matrix));
  }

  if (!a.T || !a.K) {
    throw ParseError("adversary: generator '" + a.generator +
                     "' needs both T and K");
  }
  *T_out = *a.T;
  *K_out = *a.K;

  if (a.generator == "stochastic_gap") {
    if (!a.gap) throw ParseError("adversary: stochastic_gap needs 'gap'");
    StochasticGapParams p;
    p.T = *a.T;
    p.K = *a.K;
    p.gap = *a.gap;
    p.base = a.base.value_or(0.4);
    p.optimal_action = a.optimal_action.value_or(0);
    p.seed = a.seed;
    return AdversarySource::stochastic_gap(p, a.seed_policy);
  }

  if (a.generator == "hard_instance") {
    if (!a.epsilon) throw ParseError("adversary: hard_instance needs 'epsilon'");
    HardInstanceParams p;
    p.T = *a.T;
    p.K = *a.K;
    if (*a.epsilon == "regime") {
      p.epsilon =
          regime_epsilon(p.T, p.K, extra_budget, a.c1, a.c2, a.c3);
    } else {
      try {
        p.epsilon = config_double(*a.epsilon, 0);
      } catch (const ParseError&) {
        throw ParseError("adversary: epsilon must be a number or 'regime'");
      }
    }
    const std::string sigma_key = a.sigma.value_or("default");
    if (sigma_key == "default") {
      p.sigma = default_noise_sigma(p.T);
    } else {
      try {
        p.sigma = config_double(sigma_key, 0);
      } catch (const ParseError&) {
        throw ParseError("adversary: sigma must be a number or 'default'");
      }
    }
    if (a.optimal_action) p.optimal_action = *a.optimal_action;
    p.seed = a.seed;
    *epsilon_out = p.epsilon;
    *sigma_out = p.sigma;
    return AdversarySource::hard_instance(p, a.seed_policy);
  }

  throw ParseError("adversary: unknown generator '" + a.generator + "'");
}

}  // namespace detail

// Resolves a config (with an optional sweep-axis substitution) into a
// runnable plan. Parse-level problems throw ParseError; schedules that
// cannot exist throw SpecError from the resolvers.
inline RunPlan build_plan(RunConfig cfg,
                          std::optional<std::pair<SweepAxis, double>> axis = {}) {
  if (axis) {
    const double v = axis->second;
    if (!(v >= 1.0) || v != std::floor(v)) {
      throw DomainError("sweep value must be a positive integer, got " +
                        format_double(v));
    }
    const auto value = static_cast<std::size_t>(v);
    switch (axis->first) {
      case SweepAxis::BUDGET_B:
        cfg.learner.budget = value;
        break;
      case SweepAxis::EXTRA_BUDGET_B_EX:
        if (cfg.engine.setting != BudgetSetting::EXTRA_BUDGET) {
          throw SpecError(
              "sweep axis EXTRA_BUDGET_B_EX requires setting = extra_budget");
        }
        cfg.learner.budget = value;
        break;
      case SweepAxis::HORIZON_T:
        if (cfg.adversary.generator == "file") {
          throw SpecError("cannot sweep HORIZON_T over a fixed instance file");
        }
        cfg.adversary.T = value;
        break;
    }
  }

  if (cfg.learner.mode.empty()) {
    throw ParseError("learner: missing required key 'mode'");
  }
  if (!cfg.learner.budget) {
    throw ParseError("learner: missing required key 'budget'");
  }
  const std::size_t budget = *cfg.learner.budget;

  RunPlan plan;
  const std::size_t extra_budget =
      cfg.engine.setting == BudgetSetting::EXTRA_BUDGET ? budget : 0;
  plan.source = detail::build_adversary(cfg.adversary, extra_budget,
                                        &plan.resolved_epsilon,
                                        &plan.resolved_sigma, &plan.T, &plan.K);

  const auto& l = cfg.learner;
  if (l.mode == "full") {
    plan.spec = resolve_spec_full(plan.T, plan.K, budget);
  } else if (l.mode == "flex") {
    if (!l.M) throw ParseError("learner: flex mode needs 'M'");
    plan.spec = resolve_spec_flex(plan.T, plan.K, budget, *l.M);
  } else if (l.mode == "bandit") {
    plan.spec = resolve_spec_bandit(plan.T, plan.K, budget);
  } else if (l.mode == "router") {
    if (cfg.engine.setting != BudgetSetting::EXTRA_BUDGET) {
      throw SpecError("learner: router mode requires setting = extra_budget");
    }
    plan.spec = route_extra_budget(plan.T, plan.K, budget, l.threshold_c);
  } else {
    throw ParseError("learner: unknown mode '" + l.mode + "'");
  }

  if (l.eta_override) plan.spec.eta = *l.eta_override;
  if (l.batches_override) plan.spec.batches = *l.batches_override;
  if (l.batch_len_override) plan.spec.batch_len = *l.batch_len_override;
  plan.spec.switching_costs_enabled = cfg.engine.switching_costs;
  validate(plan.spec);

  plan.game.budget = budget;
  plan.game.setting = cfg.engine.setting;
  plan.game.repetitions = cfg.engine.repetitions;
  plan.game.base_seed = cfg.engine.base_seed;
  plan.bound = theoretical_bound(plan.spec.mode, plan.T, plan.K,
                                 plan.spec.planned_budget);
  return plan;
}

}  // namespace swob
