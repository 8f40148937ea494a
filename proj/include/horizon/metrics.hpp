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
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "horizon/catalog.hpp"
#include "horizon/domain.hpp"

namespace horizon {

struct ConcessionStats
{
  int count = 0;
  double avg_magnitude = 0.0;
  bool empty = true;  // no conceding turn, avg_magnitude is a placeholder
  std::vector<double> per_turn;

  bool operator==(const ConcessionStats&) const = default;
};

struct TimingStats
{
  double chat_duration_s = 0.0;
  std::optional<double> avg_first_keystroke_s;
  int total_turns = 0;
};

struct MetricsReport
{
  std::string session_id;
  int dimensionality = 0;
  OutcomeKind outcome = OutcomeKind::timeout;

  double total_human_payoff_pct = 0.0;
  double joint_payoff = 0.0;
  std::optional<double> pareto_proximity;
  int total_turns = 0;
  double chat_duration_s = 0.0;
  std::optional<double> avg_first_keystroke_s;
  int backtracking_count = 0;
  ConcessionStats concessions;  // human side
  double sequence_entropy = 0.0;

  bool operator==(const MetricsReport&) const = default;
};

namespace detail {

inline std::vector<const Offer*> offers_by(const SessionLog& log, Role role)
{
  std::vector<const Offer*> out;
  for (const auto& turn : log.turns)
  {
    if (role == Role::human)
      out.push_back(&turn.human_offer);
    else if (turn.agent_offer)
      out.push_back(&*turn.agent_offer);
  }
  return out;
}

inline const Issue& issue_of(const SessionLog& log, const IssueId& id)
{
  for (const auto& issue : log.task)
    if (issue.spec.id == id)
      return issue;
  throw std::out_of_range("issue '" + id + "' not in session task");
}

} // namespace detail

/// Shannon entropy (bits) of a sample of option indices.
inline double shannon_entropy(std::span<const int> samples)
{
  if (samples.empty())
    return 0.0;
  std::array<int, kOptionCount> counts{};
  for (int s : samples)
    ++counts.at(static_cast<std::size_t>(s));
  const double n = static_cast<double>(samples.size());
  double h = 0.0;
  for (int c : counts)
  {
    if (c == 0)
      continue;
    const double p = c / n;
    h -= p * std::log2(p);
  }
  return h;
}

/// Mean over issues of the entropy of the human's proposed options.
inline double sequence_entropy(const SessionLog& log)
{
  if (log.task.empty() || log.turns.empty())
    return 0.0;
  double total = 0.0;
  for (const auto& issue : log.task)
  {
    std::vector<int> proposals;
    for (const auto& turn : log.turns)
    {
      const auto it = turn.human_offer.selections.find(issue.spec.id);
      if (it != turn.human_offer.selections.end())
        proposals.push_back(it->second);
    }
    total += shannon_entropy(proposals);
  }
  return total / static_cast<double>(log.task.size());
}

inline ConcessionStats concession_stats(const SessionLog& log, Role role)
{
  ConcessionStats stats;
  const auto offers = detail::offers_by(log, role);
  double conceded = 0.0;
  for (std::size_t k = 1; k < offers.size(); ++k)
  {
    double magnitude = 0.0;
    for (const auto& [id, current] : offers[k]->selections)
    {
      const auto prev = offers[k - 1]->selections.find(id);
      if (prev == offers[k - 1]->selections.end())
        continue;
      const auto& m = detail::issue_of(log, id).payoffs;
      magnitude +=
        std::max(0.0, m.payoff(role, prev->second) - m.payoff(role, current));
    }
    stats.per_turn.push_back(magnitude);
    if (magnitude > 0.0)
    {
      ++stats.count;
      conceded += magnitude;
    }
  }
  stats.empty = stats.count == 0;
  stats.avg_magnitude = stats.empty ? 0.0 : conceded / stats.count;
  return stats;
}

/// Human turns that return to an earlier, non-adjacent selection vector.
inline int backtracking_count(const SessionLog& log)
{
  int count = 0;
  for (std::size_t k = 1; k < log.turns.size(); ++k)
  {
    const auto& current = log.turns[k].human_offer.selections;
    if (current == log.turns[k - 1].human_offer.selections)
      continue;
    for (std::size_t e = 0; e + 1 < k; ++e)
    {
      if (log.turns[e].human_offer.selections == current)
      {
        ++count;
        break;
      }
    }
  }
  return count;
}

/// Mean per-issue shortfall of the agreed joint payoff from the joint optimum.
/// Absent unless the session ended in agreement.
inline std::optional<double> pareto_proximity(
  const SessionLog& log, std::span<const ParetoReport> reports)
{
  if (!log.outcome || log.outcome->kind != OutcomeKind::agreement)
    return std::nullopt;
  if (reports.empty())
    return std::nullopt;
  double shortfall = 0.0;
  for (const auto& r : reports)
  {
    const int j = log.outcome->selections.at(r.issue_id);
    shortfall += r.joint_optimum_value - r.joint_payoffs.at(j);
  }
  return shortfall / static_cast<double>(reports.size());
}

inline TimingStats timing_stats(const SessionLog& log)
{
  TimingStats t;
  t.total_turns = static_cast<int>(log.turns.size());
  if (log.turns.empty())
    return t;
  Millis last = log.turns.back().timing.submitted_at;
  if (log.outcome)
    last = std::max(last, log.outcome->decided_at);
  t.chat_duration_s =
    static_cast<double>(last - log.turns.front().timing.submitted_at) / 1000.0;
  if (log.turns.size() > 1)
  {
    double sum = 0.0;
    for (std::size_t k = 1; k < log.turns.size(); ++k)
    {
      const auto& timing = log.turns[k].timing;
      sum += static_cast<double>(timing.first_keystroke_at - timing.received_at);
    }
    t.avg_first_keystroke_s =
      sum / static_cast<double>(log.turns.size() - 1) / 1000.0;
  }
  return t;
}

inline MetricsReport compute_metrics(const SessionLog& log)
{
  MetricsReport r;
  r.session_id = log.session_id;
  r.dimensionality = static_cast<int>(log.dimensionality());
  r.outcome = log.outcome ? log.outcome->kind : OutcomeKind::timeout;

  std::vector<ParetoReport> reports;
  for (const auto& issue : log.task)
    reports.push_back(pareto_report(issue.payoffs));

  if (r.outcome == OutcomeKind::agreement)
  {
    double human = 0.0;
    double human_max = 0.0;
    double joint = 0.0;
    for (const auto& issue : log.task)
    {
      const auto& m = issue.payoffs;
      const int j = log.outcome->selections.at(issue.spec.id);
      human += m.human.at(j);
      joint += m.human.at(j) + m.agent.at(j);
      human_max += *std::max_element(m.human.begin(), m.human.end());
    }
    r.total_human_payoff_pct = human_max > 0.0 ? human / human_max * 100.0 : 0.0;
    r.joint_payoff = joint;
  }
  r.pareto_proximity = pareto_proximity(log, reports);

  const auto timing = timing_stats(log);
  r.total_turns = timing.total_turns;
  r.chat_duration_s = timing.chat_duration_s;
  r.avg_first_keystroke_s = timing.avg_first_keystroke_s;
  r.backtracking_count = backtracking_count(log);
  r.concessions = concession_stats(log, Role::human);
  r.sequence_entropy = sequence_entropy(log);
  return r;
}

//==============================================================================
inline void to_json(json& j, const MetricsReport& r)
{
  j = json{{"session_id", r.session_id},
           {"dimensionality", r.dimensionality},
           {"outcome", to_string(r.outcome)},
           {"total_human_payoff_pct", r.total_human_payoff_pct},
           {"joint_payoff", r.joint_payoff},
           {"total_turns", r.total_turns},
           {"chat_duration_s", r.chat_duration_s},
           {"backtracking_count", r.backtracking_count},
           {"concession_count", r.concessions.count},
           {"avg_concession_magnitude", r.concessions.avg_magnitude},
           {"concessions_empty", r.concessions.empty},
           {"per_turn_concessions", r.concessions.per_turn},
           {"sequence_entropy", r.sequence_entropy}};
  j["pareto_proximity"] =
    r.pareto_proximity ? json(*r.pareto_proximity) : json(nullptr);
  j["avg_first_keystroke_s"] =
    r.avg_first_keystroke_s ? json(*r.avg_first_keystroke_s) : json(nullptr);
}

inline void from_json(const json& j, MetricsReport& r)
{
  j.at("session_id").get_to(r.session_id);
  j.at("dimensionality").get_to(r.dimensionality);
  r.outcome = outcome_kind_from_string(j.at("outcome").get<std::string>());
  j.at("total_human_payoff_pct").get_to(r.total_human_payoff_pct);
  j.at("joint_payoff").get_to(r.joint_payoff);
  j.at("total_turns").get_to(r.total_turns);
  j.at("chat_duration_s").get_to(r.chat_duration_s);
  j.at("backtracking_count").get_to(r.backtracking_count);
  j.at("concession_count").get_to(r.concessions.count);
  j.at("avg_concession_magnitude").get_to(r.concessions.avg_magnitude);
  j.at("concessions_empty").get_to(r.concessions.empty);
  j.at("per_turn_concessions").get_to(r.concessions.per_turn);
  j.at("sequence_entropy").get_to(r.sequence_entropy);
  r.pareto_proximity.reset();
  if (!j.at("pareto_proximity").is_null())
    r.pareto_proximity = j.at("pareto_proximity").get<double>();
  r.avg_first_keystroke_s.reset();
  if (!j.at("avg_first_keystroke_s").is_null())
    r.avg_first_keystroke_s = j.at("avg_first_keystroke_s").get<double>();
}

//==============================================================================
// Delimiter-separated export, one row per session.

inline const std::vector<std::string>& metrics_columns()
{
  static const std::vector<std::string> columns{
    "session_id", "seed", "dimensionality", "condition", "agent",
    "human_policy", "outcome", "total_human_payoff_pct", "joint_payoff",
    "pareto_proximity", "total_turns", "chat_duration_s",
    "avg_first_keystroke_s", "backtracking_count", "concession_count",
    "avg_concession_magnitude", "per_turn_concessions", "sequence_entropy"};
  return columns;
}

struct SessionMetadata
{
  std::uint64_t seed = 0;
  std::string condition;
  std::string agent;
  std::string human_policy;
};

namespace detail {

inline std::string format_number(double v)
{
  std::ostringstream out;
  out << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return out.str();
}

inline std::string format_optional(const std::optional<double>& v)
{
  return v ? format_number(*v) : std::string{};
}

} // namespace detail

inline std::string metrics_header(char delimiter = ',')
{
  std::string out;
  for (const auto& c : metrics_columns())
  {
    if (!out.empty())
      out += delimiter;
    out += c;
  }
  return out;
}

inline std::string metrics_row(
  const MetricsReport& r, const SessionMetadata& meta, char delimiter = ',')
{
  std::string per_turn;
  for (double v : r.concessions.per_turn)
  {
    if (!per_turn.empty())
      per_turn += ';';
    per_turn += detail::format_number(v);
  }
  const std::vector<std::string> cells{
    r.session_id,
    std::to_string(meta.seed),
    std::to_string(r.dimensionality),
    meta.condition,
    meta.agent,
    meta.human_policy,
    to_string(r.outcome),
    detail::format_number(r.total_human_payoff_pct),
    detail::format_number(r.joint_payoff),
    detail::format_optional(r.pareto_proximity),
    std::to_string(r.total_turns),
    detail::format_number(r.chat_duration_s),
    detail::format_optional(r.avg_first_keystroke_s),
    std::to_string(r.backtracking_count),
    std::to_string(r.concessions.count),
    detail::format_number(r.concessions.avg_magnitude),
    per_turn,
    detail::format_number(r.sequence_entropy)};
  std::string out;
  for (std::size_t k = 0; k < cells.size(); ++k)
  {
    if (k)
      out += delimiter;
    out += cells[k];
  }
  return out;
}

} // namespace horizon
