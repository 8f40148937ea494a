// Copyright 2026 The Horizon Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <iomanip>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "horizon/catalog.hpp"
#include "horizon/session.hpp"

/// \file
/// Headless sweeps: simulated tenants against the scripted landlord.
///
/// The simulated tenants are harness fixtures for exercising the metrics.
/// They decide every issue on its own, see only their own payoffs, and
/// always propose options worth at least their current target. Together
/// with the landlord's per-issue rule this makes agreement on an issue
/// absorbing, so a session ends when its slowest issue settles.

namespace horizon {

//==============================================================================
// Simulated tenants

/// What a simulated tenant may look at.
struct HumanContext
{
  std::span<const HumanIssueView> views;
  int turn_number = 1;
  const std::optional<Offer>& last_counter;
  std::span<const Turn> turns;
  std::uint64_t seed = 0;
};

using HumanPolicy = std::function<Offer(const HumanContext&)>;

inline constexpr double kHumanReservationShare = 0.35;

namespace detail {

inline std::uint64_t mix(std::uint64_t h, std::uint64_t v)
{
  // splitmix64 step
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  h += 0x9e3779b97f4a7c15ULL;
  h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ULL;
  h = (h ^ (h >> 27)) * 0x94d049bb133111ebULL;
  return h ^ (h >> 31);
}

inline std::uint64_t mix(std::uint64_t h, const std::string& s)
{
  for (unsigned char c : s)
    h = mix(h, c);
  return h;
}

inline double own_max(const OptionRow& u) { return *std::max_element(u.begin(), u.end()); }
inline double own_min(const OptionRow& u) { return *std::min_element(u.begin(), u.end()); }

inline double human_reservation(const OptionRow& u)
{
  return own_min(u) + kHumanReservationShare * (own_max(u) - own_min(u));
}

/// Issue-by-issue tenant: copy the standing counter when it meets the
/// target, otherwise propose `choose(view, target, rng)`.
template <typename Target, typename Choose>
HumanPolicy per_issue_policy(Target target_fn, Choose choose)
{
  return [target_fn, choose](const HumanContext& ctx) {
    Offer offer;
    offer.proposer = Role::human;
    for (const auto& view : ctx.views)
    {
      const auto& u = view.human_payoffs;
      const double target = target_fn(u, ctx.turn_number);
      if (ctx.last_counter)
      {
        const int c = ctx.last_counter->selections.at(view.spec.id);
        if (u[c] + 1e-9 >= target)
        {
          offer.selections[view.spec.id] = c;
          continue;
        }
      }
      std::mt19937_64 rng(
        mix(mix(ctx.seed, view.spec.id), static_cast<std::uint64_t>(ctx.turn_number)));
      offer.selections[view.spec.id] = choose(view, target, ctx, rng);
    }
    return offer;
  };
}

} // namespace detail

/// Opens at its best option on every issue and concedes very late.
inline HumanPolicy greedy_own_max_policy(int horizon = kDefaultRoundCap, double beta = 4.0)
{
  return detail::per_issue_policy(
    [horizon, beta](const OptionRow& u, int t) {
      return boulware_target(
        detail::own_max(u), detail::human_reservation(u), t - 1, horizon, beta);
    },
    [](const HumanIssueView& v, double target, const HumanContext&, std::mt19937_64&) {
      return closest_not_below(v.human_payoffs, target, 0);
    });
}

/// Anchors at the midpoint of its own payoff range and concedes linearly
/// from there.
inline HumanPolicy midpoint_anchoring_policy(int horizon = kDefaultRoundCap)
{
  return detail::per_issue_policy(
    [horizon](const OptionRow& u, int t) {
      const double anchor = (detail::own_max(u) + detail::own_min(u)) / 2.0;
      return std::min(anchor,
        boulware_target(detail::own_max(u), detail::human_reservation(u), t - 1,
          horizon, 1.0));
    },
    [](const HumanIssueView& v, double target, const HumanContext&, std::mt19937_64&) {
      return closest_not_below(v.human_payoffs, target, 0);
    });
}

/// Picks at random among acceptable options, favouring the ones it has
/// proposed least so far.
inline HumanPolicy entropy_seeking_policy(int horizon = kDefaultRoundCap, double beta = 1.5)
{
  return detail::per_issue_policy(
    [horizon, beta](const OptionRow& u, int t) {
      return boulware_target(
        detail::own_max(u), detail::human_reservation(u), t - 1, horizon, beta);
    },
    [](const HumanIssueView& v, double target, const HumanContext& ctx,
       std::mt19937_64& rng) {
      std::array<int, kOptionCount> used{};
      for (const auto& turn : ctx.turns)
        ++used[turn.human_offer.selections.at(v.spec.id)];
      std::vector<int> candidates;
      int fewest = std::numeric_limits<int>::max();
      for (int j = 0; j <= kMaxOptionIndex; ++j)
      {
        if (v.human_payoffs[j] + 1e-9 < target)
          continue;
        if (used[j] < fewest)
        {
          fewest = used[j];
          candidates.clear();
        }
        if (used[j] == fewest)
          candidates.push_back(j);
      }
      if (candidates.empty())
        return closest_not_below(v.human_payoffs, target, 0);
      return candidates[rng() % candidates.size()];
    });
}

inline const std::vector<std::string>& human_policy_names()
{
  static const std::vector<std::string> names{
    "greedy-own-max", "midpoint-anchoring", "entropy-seeking"};
  return names;
}

inline HumanPolicy make_human_policy(const std::string& name)
{
  if (name == "greedy-own-max")
    return greedy_own_max_policy();
  if (name == "midpoint-anchoring")
    return midpoint_anchoring_policy();
  if (name == "entropy-seeking")
    return entropy_seeking_policy();
  throw std::invalid_argument("unknown human policy '" + name + "'");
}

/// Deterministic stand-in for the time a tenant spends on one turn.
inline TurnTiming simulated_timing(
  Millis received_at, std::size_t dimensionality, int turn_number, std::uint64_t seed)
{
  std::mt19937_64 rng(detail::mix(seed, static_cast<std::uint64_t>(turn_number)));
  const auto n = static_cast<Millis>(dimensionality);
  const Millis think = 1500 + 400 * n + static_cast<Millis>(rng() % 500);
  const Millis type = 800 + 250 * n;
  return TurnTiming{received_at, received_at + think, received_at + think + type};
}

inline constexpr Millis kSimulatedAgentLatencyMs = 400;

/// Drives one session to its end.
inline SessionState simulate_session(
  SessionState s, const HumanPolicy& human, const Opponent& opponent, std::uint64_t seed)
{
  Millis clock = 0;
  while (!terminal(s.phase))
  {
    const int t = s.round + 1;
    const Offer offer =
      human(HumanContext{s.views, t, s.last_counter(), s.log.turns, seed});
    s = submit_human_offer(
      std::move(s), offer, simulated_timing(clock, s.log.task.size(), t, seed));
    if (s.phase == Phase::awaiting_agent)
      s = advance_agent(std::move(s), opponent);
    clock = s.elapsed_ms + kSimulatedAgentLatencyMs;
  }
  return s;
}

//==============================================================================
// Sweeps

struct BatchConfig
{
  std::optional<std::filesystem::path> catalog_path;
  std::vector<int> n_values{1, 3, 5, 7};
  int reps = 20;
  std::uint64_t base_seed = 1;
  std::vector<std::uint64_t> seeds;  // overrides base_seed + rep when non-empty
  std::string agent = "scripted";
  std::vector<std::string> human_policies{"greedy-own-max"};
  Condition condition = Condition::decision_support;
  std::filesystem::path out_dir = "batch-out";
  unsigned jobs = 0;  // 0: hardware concurrency
  bool write_logs = true;

  std::vector<std::uint64_t> session_seeds() const
  {
    if (!seeds.empty())
      return seeds;
    std::vector<std::uint64_t> out;
    for (int r = 0; r < reps; ++r)
      out.push_back(base_seed + static_cast<std::uint64_t>(r));
    return out;
  }
};

inline void to_json(json& j, const BatchConfig& c)
{
  j = json{{"n", c.n_values},
           {"reps", c.reps},
           {"base_seed", c.base_seed},
           {"seeds", c.seeds},
           {"agent", c.agent},
           {"human_policy", c.human_policies},
           {"condition", to_string(c.condition)},
           {"out", c.out_dir.string()},
           {"jobs", c.jobs},
           {"write_logs", c.write_logs}};
  if (c.catalog_path)
    j["catalog"] = c.catalog_path->string();
}

/// Keys mirror the command-line flags; absent keys keep defaults.
inline void from_json(const json& j, BatchConfig& c)
{
  static const std::set<std::string> known{"catalog", "n", "reps", "base_seed",
    "seeds", "agent", "human_policy", "condition", "out", "jobs", "write_logs"};
  for (const auto& [key, _] : j.items())
    if (!known.count(key))
      throw std::invalid_argument("unknown batch config key '" + key + "'");
  if (j.contains("catalog"))
    c.catalog_path = j.at("catalog").get<std::string>();
  c.n_values = j.value("n", c.n_values);
  c.reps = j.value("reps", c.reps);
  c.base_seed = j.value("base_seed", c.base_seed);
  c.seeds = j.value("seeds", c.seeds);
  c.agent = j.value("agent", c.agent);
  if (j.contains("human_policy"))
  {
    const auto& p = j.at("human_policy");
    c.human_policies = p.is_string() ? std::vector<std::string>{p.get<std::string>()}
                                     : p.get<std::vector<std::string>>();
  }
  if (j.contains("condition"))
    c.condition = condition_from_string(j.at("condition").get<std::string>());
  if (j.contains("out"))
    c.out_dir = j.at("out").get<std::string>();
  c.jobs = j.value("jobs", c.jobs);
  c.write_logs = j.value("write_logs", c.write_logs);
}

inline void validate_batch_config(const BatchConfig& c, const TaskCatalog& catalog)
{
  if (c.reps < 0)
    throw std::invalid_argument("reps must be non-negative");
  if (c.n_values.empty())
    throw std::invalid_argument("at least one dimensionality is required");
  for (int n : c.n_values)
    if (n < kMinDimensionality || n > static_cast<int>(catalog.issues.size()))
      throw std::invalid_argument(
        "dimensionality " + std::to_string(n) + " outside 1.." +
        std::to_string(catalog.issues.size()));
  if (c.agent != "scripted")
    throw std::invalid_argument(
      "batch runs support the scripted agent only, got '" + c.agent + "'");
  if (c.human_policies.empty())
    throw std::invalid_argument("at least one human policy is required");
  for (const auto& p : c.human_policies)
    make_human_policy(p);
}

struct BatchRow
{
  MetricsReport metrics;
  SessionMetadata meta;
};

struct BatchResult
{
  std::vector<BatchRow> rows;  // sorted by policy, n, seed
  std::string metrics_csv;
  std::string summary_csv;
};

inline std::string batch_session_id(int n, const std::string& policy, std::uint64_t seed)
{
  return "n" + std::to_string(n) + "-" + policy + "-s" + std::to_string(seed);
}

inline const std::vector<std::string>& summary_columns()
{
  static const std::vector<std::string> columns{"human_policy", "dimensionality",
    "sessions", "agreements", "agreement_rate", "mean_total_turns",
    "mean_human_payoff_pct", "mean_joint_payoff", "mean_pareto_proximity",
    "mean_chat_duration_s", "mean_sequence_entropy", "mean_backtracking_count"};
  return columns;
}

inline std::string summary_table(const std::vector<BatchRow>& rows)
{
  struct Acc
  {
    int sessions = 0, agreements = 0, proximity_count = 0;
    double turns = 0, payoff = 0, joint = 0, proximity = 0, duration = 0,
           entropy = 0, backtracking = 0;
  };
  std::map<std::pair<std::string, int>, Acc> groups;
  for (const auto& row : rows)
  {
    auto& a = groups[{row.meta.human_policy, row.metrics.dimensionality}];
    const auto& m = row.metrics;
    ++a.sessions;
    a.agreements += m.outcome == OutcomeKind::agreement;
    a.turns += m.total_turns;
    a.payoff += m.total_human_payoff_pct;
    a.joint += m.joint_payoff;
    if (m.pareto_proximity)
    {
      a.proximity += *m.pareto_proximity;
      ++a.proximity_count;
    }
    a.duration += m.chat_duration_s;
    a.entropy += m.sequence_entropy;
    a.backtracking += m.backtracking_count;
  }

  std::string out;
  for (const auto& c : summary_columns())
    out += (out.empty() ? "" : ",") + c;
  out += "\n";
  for (const auto& [key, a] : groups)
  {
    const double s = a.sessions;
    const std::vector<std::string> cells{key.first, std::to_string(key.second),
      std::to_string(a.sessions), std::to_string(a.agreements),
      detail::format_number(a.agreements / s), detail::format_number(a.turns / s),
      detail::format_number(a.payoff / s), detail::format_number(a.joint / s),
      a.proximity_count ? detail::format_number(a.proximity / a.proximity_count) : "",
      detail::format_number(a.duration / s), detail::format_number(a.entropy / s),
      detail::format_number(a.backtracking / s)};
    for (std::size_t k = 0; k < cells.size(); ++k)
      out += (k ? "," : "") + cells[k];
    out += "\n";
  }
  return out;
}

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& body)
{
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw StorageError("cannot write '" + tmp + "'");
    out << body;
    if (!out.flush())
      throw StorageError("write to '" + tmp + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

} // namespace detail

/// Runs every (policy, n, seed) combination and writes metrics.csv,
/// summary.csv and, optionally, logs/<session>/session.jsonl under out_dir.
/// Pass an empty out_dir to skip writing.
inline BatchResult run_batch(const BatchConfig& config)
{
  const TaskCatalog catalog =
    config.catalog_path ? load_catalog(*config.catalog_path) : default_catalog();
  require_nontrivial(catalog);
  validate_batch_config(config, catalog);

  struct Job
  {
    std::string policy;
    int n;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const auto& policy : config.human_policies)
    for (int n : config.n_values)
      for (auto seed : config.session_seeds())
        jobs.push_back(Job{policy, n, seed});
  std::sort(jobs.begin(), jobs.end(), [](const Job& a, const Job& b) {
    return std::tie(a.policy, a.n, a.seed) < std::tie(b.policy, b.n, b.seed);
  });

  const bool writing = !config.out_dir.empty();
  std::optional<LogStore> store;
  if (writing)
  {
    std::error_code ec;
    std::filesystem::create_directories(config.out_dir, ec);
    if (ec)
      throw StorageError("cannot create '" + config.out_dir.string() + "': " + ec.message());
    if (config.write_logs)
      store.emplace(config.out_dir / "logs");
  }

  auto run_one = [&](const Job& job) {
    ScriptedPolicy policy;
    policy.seed = job.seed;
    SessionHeader header{batch_session_id(job.n, job.policy, job.seed),
      config.condition, config.agent, job.seed, policy};
    SessionState s = start_session(header.session_id,
      sample_task(catalog, job.n, job.seed), config.condition);
    s = simulate_session(std::move(s), make_human_policy(job.policy),
      scripted_opponent(policy), job.seed);
    MetricsReport report = finalize(s, header, store ? &*store : nullptr);
    return BatchRow{std::move(report),
      SessionMetadata{job.seed, to_string(config.condition), config.agent, job.policy}};
  };

  std::vector<BatchRow> rows(jobs.size());
  const unsigned workers = std::max(1u,
    config.jobs ? config.jobs : std::thread::hardware_concurrency());
  std::vector<std::future<void>> pending;
  for (unsigned w = 0; w < workers; ++w)
  {
    pending.push_back(std::async(std::launch::async, [&, w] {
      for (std::size_t k = w; k < jobs.size(); k += workers)
        rows[k] = run_one(jobs[k]);
    }));
  }
  for (auto& f : pending)
    f.get();

  BatchResult result;
  result.rows = std::move(rows);
  result.metrics_csv = metrics_header() + "\n";
  for (const auto& row : result.rows)
    result.metrics_csv += metrics_row(row.metrics, row.meta) + "\n";
  result.summary_csv = summary_table(result.rows);

  if (writing)
  {
    detail::write_file(config.out_dir / "metrics.csv", result.metrics_csv);
    detail::write_file(config.out_dir / "summary.csv", result.summary_csv);
  }
  return result;
}

//==============================================================================
// Worked-example conformance

struct ConformanceCheck
{
  std::string name;
  double expected = 0.0;
  double tolerance = 0.0;  // 0: exact
  double actual = 0.0;
  bool pass = false;
};

struct ConformanceReport
{
  std::vector<ConformanceCheck> checks;

  bool pass() const
  {
    return std::all_of(checks.begin(), checks.end(),
      [](const ConformanceCheck& c) { return c.pass; });
  }
};

/// Worked example on the Utilities Included issue: prior belief, agent
/// proposals at labels 4,5,4,5 and a new proposal at label 5.
inline ConformanceReport conformance_appendix_a(const ModelParameters& params = {})
{
  ConformanceReport report;
  auto check = [&](std::string name, double expected, double tolerance, double actual) {
    const bool pass = tolerance == 0.0 ? actual == expected
                                       : std::abs(actual - expected) <= tolerance;
    report.checks.push_back({std::move(name), expected, tolerance, actual, pass});
  };

  const Issue issue = utilities_fixture();
  const std::vector<HumanIssueView> views{human_view(issue)};

  BeliefState state = init_beliefs(std::vector<IssueId>{issue.spec.id});
  IssueBelief& b = state.issues.front();
  b.pmf = {0.10, 0.12, 0.15, 0.22, 0.25, 0.10, 0.06};
  b.agent_history = {3, 4, 3, 4};
  b.zopa = zopa_bounds(b.agent_history);
  b.boundary_confidence = boundary_confidence(b.agent_history, params);

  UpdateDiagnostics diag;
  state = bayesian_update(std::move(state),
    EvidenceEvent{issue.spec.id, Role::agent, 4, 5, 0.0}, &diag, params);
  const IssueBelief& post = state.issues.front();
  const IntensityGrid grid = intensity_grid(state, views, params);

  check("zopa lower (label)", 4, 0, post.zopa ? post.zopa->lower + 1 : -1);
  check("zopa upper (label)", 5, 0, post.zopa ? post.zopa->upper + 1 : -1);
  check("boundary confidence", 0.92, 0.01, post.boundary_confidence);
  check("c_temporal", 0.8, 1e-9, post.c_temporal);
  check("s_consistency", 0.86, 0.02, post.s_consistency);
  check("agent weight W", 1.0, 0, diag.weight);
  check("unnormalized sum", 0.386, 0.01, diag.unnormalized_sum);
  check("normalization eta", 2.59, 0.01, diag.eta);
  check("posterior option 5", 0.52, 0.01, post.pmf[4]);
  check("posterior option 4", 0.45, 0.01, post.pmf[3]);
  check("intensity option 5", 0.6, 0, grid.intensity[0][4]);
  check("intensity option 2", 0.0, 0, grid.intensity[0][1]);

  const ParetoReport pareto = pareto_report(issue.payoffs);
  const OptionRow joint_expected{100, 100, 110, 120, 130, 135, 130};
  for (std::size_t j = 0; j < kOptionCount; ++j)
    check("joint payoff option " + std::to_string(j + 1), joint_expected[j], 0,
      pareto.joint_payoffs[j]);
  check("joint optimum (label)", 6, 0, pareto.joint_optimum_index + 1);
  check("joint optimum value", 135, 0, pareto.joint_optimum_value);
  check("midpoint shortfall", 15, 0,
    pareto.joint_optimum_value - pareto.joint_payoffs[kMiddleOption]);
  return report;
}

inline std::string format_conformance(const ConformanceReport& report)
{
  std::ostringstream out;
  out << std::left << std::setw(26) << "check" << std::setw(12) << "expected"
      << std::setw(12) << "tolerance" << std::setw(14) << "actual" << "result\n";
  for (const auto& c : report.checks)
  {
    std::ostringstream tol;
    if (c.tolerance == 0.0)
      tol << "exact";
    else
      tol << "+/-" << c.tolerance;
    out << std::left << std::setw(26) << c.name << std::setw(12) << c.expected
        << std::setw(12) << tol.str() << std::setw(14) << std::setprecision(6)
        << c.actual << (c.pass ? "PASS" : "FAIL") << "\n";
  }
  out << (report.pass() ? "conformance: PASS" : "conformance: FAIL") << "\n";
  return out.str();
}

} // namespace horizon
