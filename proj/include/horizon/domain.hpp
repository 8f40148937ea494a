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

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace horizon {

using json = nlohmann::json;

/// Every issue offers exactly this many discrete options.
inline constexpr std::size_t kOptionCount = 7;
inline constexpr int kMaxOptionIndex = static_cast<int>(kOptionCount) - 1;
inline constexpr int kMiddleOption = 3;

inline constexpr int kDefaultRoundCap = 15;
inline constexpr std::int64_t kDefaultTimeCapMs = 900'000;

inline constexpr int kMinDimensionality = 1;
inline constexpr int kMaxDimensionality = 16;

/// Milliseconds since session start. Never wall clock.
using Millis = std::int64_t;

using IssueId = std::string;

/// Per-option values of one issue, indexed 0..6.
using OptionRow = std::array<double, kOptionCount>;

/// Selections keyed by issue id; values are 0-based option indices.
using Selections = std::map<IssueId, int>;

enum class Role
{
  human,
  agent
};

inline const char* to_string(Role role)
{
  return role == Role::human ? "human" : "agent";
}

inline Role role_from_string(const std::string& text)
{
  if (text == "human")
    return Role::human;
  if (text == "agent")
    return Role::agent;
  throw std::invalid_argument("unknown role '" + text + "'");
}

constexpr bool valid_option(int index)
{
  return index >= 0 && index <= kMaxOptionIndex;
}

//==============================================================================
struct IssueSpec
{
  IssueId id;
  std::string name;
  std::array<std::string, kOptionCount> option_labels;
  double xi = 1.0;
  double tau_min = 0.0;
  double tau_max = 0.0;

  bool operator==(const IssueSpec&) const = default;
};

struct PayoffMatrix
{
  IssueId issue_id;
  OptionRow human{};
  OptionRow agent{};

  double payoff(Role role, int option) const
  {
    return role == Role::human ? human.at(option) : agent.at(option);
  }

  bool operator==(const PayoffMatrix&) const = default;
};

/// One negotiable issue: public description plus both private payoff columns.
struct Issue
{
  IssueSpec spec;
  PayoffMatrix payoffs;

  bool operator==(const Issue&) const = default;
};

/// What the human side may see of an issue: no agent payoffs.
struct HumanIssueView
{
  IssueSpec spec;
  OptionRow human_payoffs{};

  bool operator==(const HumanIssueView&) const = default;
};

inline HumanIssueView human_view(const Issue& issue)
{
  return {issue.spec, issue.payoffs.human};
}

inline std::vector<HumanIssueView> human_views(const std::vector<Issue>& task)
{
  std::vector<HumanIssueView> out;
  out.reserve(task.size());
  for (const auto& issue : task)
    out.push_back(human_view(issue));
  return out;
}

struct Offer
{
  Role proposer = Role::human;
  Selections selections;
  std::string note;

  bool operator==(const Offer&) const = default;
};

struct TurnTiming
{
  Millis received_at = 0;
  Millis first_keystroke_at = 0;
  Millis submitted_at = 0;

  bool monotone() const
  {
    return received_at <= first_keystroke_at &&
           first_keystroke_at <= submitted_at;
  }

  bool operator==(const TurnTiming&) const = default;
};

/// A human proposal followed by the agent's counter. The counter is absent
/// only on the last turn of an aborted session.
struct Turn
{
  int turn_number = 1;
  Offer human_offer;
  std::optional<Offer> agent_offer;
  TurnTiming timing;

  bool operator==(const Turn&) const = default;
};

enum class OutcomeKind
{
  agreement,
  timeout,
  aborted
};

inline const char* to_string(OutcomeKind kind)
{
  switch (kind)
  {
    case OutcomeKind::agreement: return "agreement";
    case OutcomeKind::timeout: return "timeout";
    case OutcomeKind::aborted: return "aborted";
  }
  return "aborted";
}

inline OutcomeKind outcome_kind_from_string(const std::string& text)
{
  if (text == "agreement")
    return OutcomeKind::agreement;
  if (text == "timeout")
    return OutcomeKind::timeout;
  if (text == "aborted")
    return OutcomeKind::aborted;
  throw std::invalid_argument("unknown outcome '" + text + "'");
}

struct Outcome
{
  OutcomeKind kind = OutcomeKind::timeout;
  Selections selections;  // agreement only
  Millis decided_at = 0;  // submit time of the message that ended the session
  std::string diagnostic;  // aborted only

  bool operator==(const Outcome&) const = default;
};

struct SessionLog
{
  std::string session_id;
  std::vector<Issue> task;
  std::vector<Turn> turns;
  std::optional<Outcome> outcome;
  int round_cap = kDefaultRoundCap;
  Millis time_cap_ms = kDefaultTimeCapMs;

  std::size_t dimensionality() const { return task.size(); }

  bool operator==(const SessionLog&) const = default;
};

//==============================================================================
struct Violation
{
  std::string field;
  std::string rule;

  bool operator==(const Violation&) const = default;
};

namespace detail {

inline void check_offer(
  const Offer& offer,
  const std::set<IssueId>& active,
  const std::string& where,
  std::vector<Violation>& out)
{
  for (const auto& [issue, index] : offer.selections)
  {
    if (!active.count(issue))
      out.push_back({where + "." + issue, "unknown issue"});
    if (!valid_option(index))
      out.push_back({where + "." + issue, "index out of range"});
  }
  for (const auto& issue : active)
  {
    if (!offer.selections.count(issue))
      out.push_back({where + "." + issue, "missing selection"});
  }
}

} // namespace detail

/// Checks every type invariant of a session log. Empty result means valid.
inline std::vector<Violation> validate_session(const SessionLog& log)
{
  std::vector<Violation> out;

  if (log.task.empty() ||
      log.task.size() > static_cast<std::size_t>(kMaxDimensionality))
    out.push_back({"task", "dimensionality out of range"});

  std::set<IssueId> active;
  for (const auto& issue : log.task)
  {
    const auto& spec = issue.spec;
    if (!active.insert(spec.id).second)
      out.push_back({"task." + spec.id, "duplicate issue"});
    if (issue.payoffs.issue_id != spec.id)
      out.push_back({"task." + spec.id, "payoff matrix issue mismatch"});
    if (!(spec.xi > 0.0))
      out.push_back({"task." + spec.id + ".xi", "xi must be positive"});
    if (spec.tau_min < 0.0 || spec.tau_min > spec.tau_max)
      out.push_back({"task." + spec.id + ".tau", "tau bounds out of order"});
    for (std::size_t j = 0; j < kOptionCount; ++j)
    {
      if (issue.payoffs.human[j] < 0.0 || issue.payoffs.agent[j] < 0.0)
      {
        out.push_back({"task." + spec.id + ".payoffs", "negative payoff"});
        break;
      }
    }
  }

  if (static_cast<int>(log.turns.size()) > log.round_cap)
    out.push_back({"turns", "round cap exceeded"});

  for (std::size_t k = 0; k < log.turns.size(); ++k)
  {
    const auto& turn = log.turns[k];
    const std::string where = "turns[" + std::to_string(k) + "]";
    if (turn.turn_number != static_cast<int>(k) + 1)
      out.push_back({where + ".turn_number", "turn numbers not consecutive"});
    if (!turn.timing.monotone())
      out.push_back({where + ".timing", "timestamps not monotone"});
    if (turn.human_offer.proposer != Role::human)
      out.push_back({where + ".human_offer", "wrong proposer"});
    detail::check_offer(turn.human_offer, active, where + ".human_offer", out);
    if (turn.agent_offer)
    {
      if (turn.agent_offer->proposer != Role::agent)
        out.push_back({where + ".agent_offer", "wrong proposer"});
      detail::check_offer(
        *turn.agent_offer, active, where + ".agent_offer", out);
    }
    else
    {
      const bool aborted = k + 1 == log.turns.size() && log.outcome &&
                           log.outcome->kind == OutcomeKind::aborted;
      if (!aborted)
        out.push_back({where + ".agent_offer", "missing counter-offer"});
    }
  }

  if (!log.outcome)
  {
    out.push_back({"outcome", "outcome missing"});
  }
  else if (log.outcome->kind == OutcomeKind::agreement)
  {
    Offer agreed{Role::human, log.outcome->selections, {}};
    detail::check_offer(agreed, active, "outcome", out);
  }

  return out;
}

//==============================================================================
// JSON. Wire formats carry 1-based option labels; conversion happens here.

inline json selections_to_json(const Selections& selections)
{
  json out = json::object();
  for (const auto& [issue, index] : selections)
    out[issue] = index + 1;
  return out;
}

inline Selections selections_from_json(const json& j)
{
  Selections out;
  for (const auto& [issue, label] : j.items())
  {
    const int value = label.get<int>();
    if (value < 1 || value > static_cast<int>(kOptionCount))
      throw std::invalid_argument("option " + std::to_string(value) +
                                  " for issue '" + issue + "' out of range 1..7");
    out[issue] = value - 1;
  }
  return out;
}

inline void to_json(json& j, const IssueSpec& s)
{
  j = json{{"id", s.id},
           {"name", s.name},
           {"option_labels", s.option_labels},
           {"xi", s.xi},
           {"tau_min", s.tau_min},
           {"tau_max", s.tau_max}};
}

inline void from_json(const json& j, IssueSpec& s)
{
  j.at("id").get_to(s.id);
  j.at("name").get_to(s.name);
  j.at("option_labels").get_to(s.option_labels);
  s.xi = j.value("xi", 1.0);
  j.at("tau_min").get_to(s.tau_min);
  j.at("tau_max").get_to(s.tau_max);
}

inline void to_json(json& j, const PayoffMatrix& m)
{
  j = json{{"issue_id", m.issue_id},
           {"human_payoffs", m.human},
           {"agent_payoffs", m.agent}};
}

inline void from_json(const json& j, PayoffMatrix& m)
{
  j.at("issue_id").get_to(m.issue_id);
  j.at("human_payoffs").get_to(m.human);
  j.at("agent_payoffs").get_to(m.agent);
}

inline void to_json(json& j, const Issue& i)
{
  j = json{{"spec", i.spec}, {"payoffs", i.payoffs}};
}

inline void from_json(const json& j, Issue& i)
{
  j.at("spec").get_to(i.spec);
  j.at("payoffs").get_to(i.payoffs);
}

inline void to_json(json& j, const HumanIssueView& v)
{
  j = json{{"spec", v.spec}, {"human_payoffs", v.human_payoffs}};
}

inline void from_json(const json& j, HumanIssueView& v)
{
  j.at("spec").get_to(v.spec);
  j.at("human_payoffs").get_to(v.human_payoffs);
}

inline void to_json(json& j, const Offer& o)
{
  j = json{{"proposer", to_string(o.proposer)},
           {"selections", selections_to_json(o.selections)}};
  if (!o.note.empty())
    j["note"] = o.note;
}

inline void from_json(const json& j, Offer& o)
{
  o.proposer = role_from_string(j.at("proposer").get<std::string>());
  o.selections = selections_from_json(j.at("selections"));
  o.note = j.value("note", std::string{});
}

inline void to_json(json& j, const TurnTiming& t)
{
  j = json{{"received_at", t.received_at},
           {"first_keystroke_at", t.first_keystroke_at},
           {"submitted_at", t.submitted_at}};
}

inline void from_json(const json& j, TurnTiming& t)
{
  j.at("received_at").get_to(t.received_at);
  j.at("first_keystroke_at").get_to(t.first_keystroke_at);
  j.at("submitted_at").get_to(t.submitted_at);
}

inline void to_json(json& j, const Turn& t)
{
  j = json{{"turn_number", t.turn_number},
           {"human_offer", t.human_offer},
           {"timing", t.timing}};
  j["agent_offer"] = t.agent_offer ? json(*t.agent_offer) : json(nullptr);
}

inline void from_json(const json& j, Turn& t)
{
  j.at("turn_number").get_to(t.turn_number);
  j.at("human_offer").get_to(t.human_offer);
  j.at("timing").get_to(t.timing);
  if (j.contains("agent_offer") && !j.at("agent_offer").is_null())
    t.agent_offer = j.at("agent_offer").get<Offer>();
  else
    t.agent_offer.reset();
}

inline void to_json(json& j, const Outcome& o)
{
  j = json{{"kind", to_string(o.kind)}, {"decided_at", o.decided_at}};
  if (o.kind == OutcomeKind::agreement)
    j["selections"] = selections_to_json(o.selections);
  if (!o.diagnostic.empty())
    j["diagnostic"] = o.diagnostic;
}

inline void from_json(const json& j, Outcome& o)
{
  o.kind = outcome_kind_from_string(j.at("kind").get<std::string>());
  o.decided_at = j.value("decided_at", Millis{0});
  o.selections = j.contains("selections")
                   ? selections_from_json(j.at("selections"))
                   : Selections{};
  o.diagnostic = j.value("diagnostic", std::string{});
}

inline void to_json(json& j, const SessionLog& l)
{
  j = json{{"session_id", l.session_id},
           {"task", l.task},
           {"turns", l.turns},
           {"round_cap", l.round_cap},
           {"time_cap_ms", l.time_cap_ms}};
  j["outcome"] = l.outcome ? json(*l.outcome) : json(nullptr);
}

inline void from_json(const json& j, SessionLog& l)
{
  j.at("session_id").get_to(l.session_id);
  j.at("task").get_to(l.task);
  j.at("turns").get_to(l.turns);
  l.round_cap = j.value("round_cap", kDefaultRoundCap);
  l.time_cap_ms = j.value("time_cap_ms", kDefaultTimeCapMs);
  if (j.contains("outcome") && !j.at("outcome").is_null())
    l.outcome = j.at("outcome").get<Outcome>();
  else
    l.outcome.reset();
}

} // namespace horizon
