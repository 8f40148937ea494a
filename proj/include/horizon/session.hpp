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

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "horizon/agents.hpp"
#include "horizon/belief.hpp"
#include "horizon/catalog.hpp"
#include "horizon/convergence.hpp"
#include "horizon/domain.hpp"
#include "horizon/metrics.hpp"

namespace horizon {

enum class Phase
{
  awaiting_human,
  awaiting_agent,
  agreed,
  timed_out,
  aborted
};

enum class Condition
{
  baseline,
  decision_support
};

inline const char* to_string(Phase phase)
{
  switch (phase)
  {
    case Phase::awaiting_human: return "awaiting_human";
    case Phase::awaiting_agent: return "awaiting_agent";
    case Phase::agreed: return "agreed";
    case Phase::timed_out: return "timed_out";
    case Phase::aborted: return "aborted";
  }
  return "aborted";
}

inline const char* to_string(Condition condition)
{
  return condition == Condition::baseline ? "baseline" : "decision_support";
}

inline Condition condition_from_string(const std::string& text)
{
  if (text == "baseline")
    return Condition::baseline;
  if (text == "decision_support")
    return Condition::decision_support;
  throw std::invalid_argument("unknown condition '" + text + "'");
}

inline bool terminal(Phase phase)
{
  return phase == Phase::agreed || phase == Phase::timed_out ||
         phase == Phase::aborted;
}

/// Action attempted in a phase that does not allow it.
class PhaseError : public std::logic_error
{
public:
  using std::logic_error::logic_error;
};

/// Offer or timing record that fails validation.
class InvalidOffer : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

/// Widget state after one turn.
struct TurnSnapshot
{
  int turn_number = 0;
  BeliefState beliefs;
  IntensityGrid grid;
  ConvergenceSnapshot convergence;

  bool operator==(const TurnSnapshot&) const = default;
};

inline void to_json(json& j, const TurnSnapshot& s)
{
  j = json{{"turn_number", s.turn_number},
           {"beliefs", s.beliefs},
           {"grid", s.grid},
           {"convergence", s.convergence}};
}

inline void from_json(const json& j, TurnSnapshot& s)
{
  j.at("turn_number").get_to(s.turn_number);
  j.at("beliefs").get_to(s.beliefs);
  j.at("grid").get_to(s.grid);
  j.at("convergence").get_to(s.convergence);
}

/// Everything an opponent may see when producing its counter.
struct CounterRequest
{
  std::span<const Issue> task;
  std::span<const Turn> turns;  // completed turns
  const Offer& human_offer;
  int turn_number;
};

using Opponent = std::function<Offer(const CounterRequest&)>;

inline Opponent scripted_opponent(ScriptedPolicy policy)
{
  validate_policy(policy);
  return [policy = std::move(policy)](const CounterRequest& req) {
    return scripted_counter_offer(policy, req.task, req.turn_number, req.human_offer);
  };
}

inline Opponent llm_opponent(std::shared_ptr<const LlmAgent> agent)
{
  return [agent = std::move(agent)](const CounterRequest& req) {
    return agent->counter_offer(req.task, req.turns, req.human_offer);
  };
}

//==============================================================================
struct SessionState
{
  Phase phase = Phase::awaiting_human;
  Condition condition = Condition::decision_support;
  int round = 0;  // completed turns
  Millis elapsed_ms = 0;
  SessionLog log;
  std::vector<HumanIssueView> views;
  BeliefState beliefs;
  std::vector<TurnSnapshot> snapshots;

  std::optional<Offer> pending_offer;
  TurnTiming pending_timing;

  const std::optional<Offer>& last_counter() const { return _last_counter; }

  /// Snapshots are computed in both conditions; only decision_support shows them.
  bool exposes_snapshots() const
  {
    return condition == Condition::decision_support;
  }

  bool operator==(const SessionState&) const = default;

private:
  friend SessionState advance_agent(SessionState, const Opponent&);
  friend SessionState submit_human_offer(SessionState, Offer, TurnTiming);
  std::optional<Offer> _last_counter;
};

inline SessionState start_session(
  std::string session_id,
  std::vector<Issue> task,
  Condition condition,
  int round_cap = kDefaultRoundCap,
  Millis time_cap_ms = kDefaultTimeCapMs)
{
  if (task.empty() || task.size() > static_cast<std::size_t>(kMaxDimensionality))
    throw std::invalid_argument("session task must have 1..16 issues");
  SessionState s;
  s.condition = condition;
  s.log.session_id = std::move(session_id);
  s.log.round_cap = round_cap;
  s.log.time_cap_ms = time_cap_ms;
  s.log.task = std::move(task);
  s.views = human_views(s.log.task);
  std::vector<IssueId> ids;
  for (const auto& issue : s.log.task)
    ids.push_back(issue.spec.id);
  s.beliefs = init_beliefs(ids);
  return s;
}

namespace detail {

inline void validate_offer(const SessionState& s, const Offer& offer, Role role)
{
  if (offer.proposer != role)
    throw InvalidOffer(std::string("offer proposer must be ") + to_string(role));
  if (offer.selections.size() != s.log.task.size())
    throw InvalidOffer("offer must select exactly one option per issue");
  for (const auto& issue : s.log.task)
  {
    const auto it = offer.selections.find(issue.spec.id);
    if (it == offer.selections.end())
      throw InvalidOffer("offer has no selection for issue '" + issue.spec.id + "'");
    if (!valid_option(it->second))
      throw InvalidOffer("index out of range for issue '" + issue.spec.id + "'");
  }
}

/// Mean human concession on one issue over the last three turns, as a share
/// of that issue's human payoff range.
inline double recent_concession(
  const SessionLog& log, const Issue& issue, int current_option)
{
  std::vector<int> options;
  for (const auto& turn : log.turns)
    options.push_back(turn.human_offer.selections.at(issue.spec.id));
  options.push_back(current_option);

  const auto& u = issue.payoffs.human;
  const double range =
    *std::max_element(u.begin(), u.end()) - *std::min_element(u.begin(), u.end());
  if (range <= 0.0 || options.size() < 2)
    return 0.0;

  constexpr std::size_t window = 3;
  const std::size_t steps = std::min(window, options.size() - 1);
  double sum = 0.0;
  for (std::size_t k = options.size() - steps; k < options.size(); ++k)
    sum += std::max(0.0, u[options[k - 1]] - u[options[k]]);
  return std::clamp(sum / static_cast<double>(steps) / range, 0.0, 1.0);
}

inline void end_session(SessionState& s, Phase phase, Outcome outcome)
{
  s.phase = phase;
  s.log.outcome = std::move(outcome);
  s.pending_offer.reset();
}

} // namespace detail

/// Applies the human's offer. Mirroring the standing counter on every issue
/// closes the session in agreement. Invalid offers or timings throw and
/// leave the caller's state untouched.
inline SessionState submit_human_offer(
  SessionState s, Offer offer, TurnTiming timing)
{
  if (s.phase != Phase::awaiting_human)
    throw PhaseError(
      std::string("cannot submit an offer while ") + to_string(s.phase));
  detail::validate_offer(s, offer, Role::human);
  if (!timing.monotone())
    throw InvalidOffer("timestamps must satisfy received <= first keystroke <= submitted");
  if (timing.received_at < s.elapsed_ms)
    throw InvalidOffer("timestamps run backwards across turns");

  if (timing.submitted_at > s.log.time_cap_ms)
  {
    s.elapsed_ms = timing.submitted_at;
    detail::end_session(s, Phase::timed_out,
      Outcome{OutcomeKind::timeout, {}, timing.submitted_at, {}});
    return s;
  }

  if (s._last_counter && offer.selections == s._last_counter->selections)
  {
    s.elapsed_ms = timing.submitted_at;
    detail::end_session(s, Phase::agreed,
      Outcome{OutcomeKind::agreement, offer.selections, timing.submitted_at, {}});
    return s;
  }

  if (s.round >= s.log.round_cap)
  {
    s.elapsed_ms = timing.submitted_at;
    detail::end_session(s, Phase::timed_out,
      Outcome{OutcomeKind::timeout, {}, timing.submitted_at, {}});
    return s;
  }

  s.elapsed_ms = timing.submitted_at;
  s.pending_offer = std::move(offer);
  s.pending_timing = timing;
  s.phase = Phase::awaiting_agent;
  return s;
}

/// Recomputes grid and panel from the current beliefs.
inline TurnSnapshot make_snapshot(const SessionState& s, int turn_number)
{
  TurnSnapshot snap;
  snap.turn_number = turn_number;
  snap.beliefs = s.beliefs;
  snap.grid = intensity_grid(s.beliefs, s.views);
  snap.convergence = convergence_snapshot(snap.grid, s.views);
  return snap;
}

/// Runs the opponent on the pending human offer, updates beliefs with both
/// offers, and records the turn with a fresh snapshot. Opponent failures end
/// the session as aborted.
inline SessionState advance_agent(SessionState s, const Opponent& opponent)
{
  if (s.phase != Phase::awaiting_agent || !s.pending_offer)
    throw PhaseError(
      std::string("cannot advance the agent while ") + to_string(s.phase));

  const int t = s.round + 1;
  const Offer human = *s.pending_offer;

  Offer counter;
  try
  {
    counter = opponent(CounterRequest{s.log.task, s.log.turns, human, t});
    counter.proposer = Role::agent;
    detail::validate_offer(s, counter, Role::agent);
  }
  catch (const std::exception& e)
  {
    s.log.turns.push_back(Turn{t, human, std::nullopt, s.pending_timing});
    detail::end_session(s, Phase::aborted,
      Outcome{OutcomeKind::aborted, {}, s.pending_timing.submitted_at,
              std::string("agent failure: ") + e.what()});
    return s;
  }

  for (const auto& issue : s.log.task)
  {
    const int h = human.selections.at(issue.spec.id);
    EvidenceEvent from_human{issue.spec.id, Role::human, h, t,
      detail::recent_concession(s.log, issue, h)};
    s.beliefs = bayesian_update(std::move(s.beliefs), from_human);
    EvidenceEvent from_agent{
      issue.spec.id, Role::agent, counter.selections.at(issue.spec.id), t, 0.0};
    s.beliefs = bayesian_update(std::move(s.beliefs), from_agent);
  }

  s.log.turns.push_back(Turn{t, human, counter, s.pending_timing});
  s.round = t;
  s.snapshots.push_back(make_snapshot(s, t));
  s.pending_offer.reset();

  if (counter.selections == human.selections)
  {
    detail::end_session(s, Phase::agreed,
      Outcome{OutcomeKind::agreement, counter.selections,
              s.pending_timing.submitted_at, {}});
    s._last_counter = std::move(counter);
    return s;
  }
  s._last_counter = std::move(counter);
  s.phase = Phase::awaiting_human;
  return s;
}

//==============================================================================
// Persistence

struct SessionHeader
{
  std::string session_id;
  Condition condition = Condition::decision_support;
  std::string agent = "scripted";
  std::uint64_t seed = 0;
  ScriptedPolicy policy;
};

inline void to_json(json& j, const ScriptedPolicy& p)
{
  j = json{{"reservation", p.reservation},
           {"reservation_share", p.reservation_share},
           {"beta", p.beta},
           {"horizon", p.horizon},
           {"seed", p.seed}};
}

inline void from_json(const json& j, ScriptedPolicy& p)
{
  p.reservation = j.value("reservation", std::map<IssueId, double>{});
  p.reservation_share = j.value("reservation_share", 0.35);
  p.beta = j.value("beta", 2.0);
  p.horizon = j.value("horizon", kDefaultRoundCap);
  p.seed = j.value("seed", std::uint64_t{0});
}

inline constexpr int kLogFormatVersion = 1;

/// Line-delimited records: header, one per turn, footer.
inline std::vector<std::string> session_records(
  const SessionState& s, const SessionHeader& header, const MetricsReport& metrics)
{
  std::vector<std::string> lines;
  lines.push_back(json{{"record", "header"},
                       {"version", kLogFormatVersion},
                       {"session_id", s.log.session_id},
                       {"condition", to_string(s.condition)},
                       {"agent", header.agent},
                       {"seed", header.seed},
                       {"policy", header.policy},
                       {"dimensionality", s.log.dimensionality()},
                       {"round_cap", s.log.round_cap},
                       {"time_cap_ms", s.log.time_cap_ms},
                       {"task", s.log.task}}
                    .dump());
  for (std::size_t k = 0; k < s.log.turns.size(); ++k)
  {
    json rec{{"record", "turn"}, {"turn", s.log.turns[k]}};
    rec["snapshot"] = k < s.snapshots.size() ? json(s.snapshots[k]) : json(nullptr);
    lines.push_back(rec.dump());
  }
  json footer{{"record", "footer"}, {"metrics", metrics}};
  footer["outcome"] = s.log.outcome ? json(*s.log.outcome) : json(nullptr);
  lines.push_back(footer.dump());
  return lines;
}

class StorageError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Append-only store: <root>/<session_id>/session.jsonl
class LogStore
{
public:
  explicit LogStore(std::filesystem::path root, int attempts = 3)
    : _root(std::move(root)), _attempts(attempts)
  {}

  std::filesystem::path path_for(const std::string& session_id) const
  {
    return _root / session_id / "session.jsonl";
  }

  /// Writes the records once. Returns false if an identical copy already
  /// exists; throws StorageError if a different copy exists or all attempts
  /// fail.
  bool persist(const std::string& session_id, const std::vector<std::string>& records) const
  {
    std::string body;
    for (const auto& r : records)
      body += r + "\n";

    const auto path = path_for(session_id);
    std::string last_error;
    for (int attempt = 0; attempt < _attempts; ++attempt)
    {
      try
      {
        std::error_code ec;
        if (std::filesystem::exists(path, ec))
        {
          if (read_all(path) == body)
            return false;
          throw StorageError("session '" + session_id + "' already stored with different content");
        }
        std::filesystem::create_directories(path.parent_path());
        const auto tmp = path.string() + ".tmp";
        {
          std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
          if (!out)
            throw std::runtime_error("cannot open '" + tmp + "' for writing");
          out << body;
          out.flush();
          if (!out)
            throw std::runtime_error("write to '" + tmp + "' failed");
        }
        std::filesystem::rename(tmp, path);
        return true;
      }
      catch (const StorageError&)
      {
        throw;
      }
      catch (const std::exception& e)
      {
        last_error = e.what();
      }
    }
    throw StorageError("storing session '" + session_id + "' failed after " +
                       std::to_string(_attempts) + " attempts: " + last_error);
  }

  static std::string read_all(const std::filesystem::path& path)
  {
    std::ifstream in(path, std::ios::binary);
    if (!in)
      throw StorageError("cannot read '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
  }

private:
  std::filesystem::path _root;
  int _attempts;
};

/// Computes the report and, when a store is given, persists the log.
/// Safe to call repeatedly; the stored copy is written once.
inline MetricsReport finalize(
  const SessionState& s, const SessionHeader& header, const LogStore* store = nullptr)
{
  if (!terminal(s.phase))
    throw PhaseError(std::string("cannot finalize while ") + to_string(s.phase));
  MetricsReport report = compute_metrics(s.log);
  if (store)
    store->persist(s.log.session_id, session_records(s, header, report));
  return report;
}

//==============================================================================
// Reading and replaying stored sessions

struct StoredSession
{
  SessionHeader header;
  SessionLog log;
  std::vector<std::optional<TurnSnapshot>> snapshots;
  MetricsReport metrics;
};

inline StoredSession parse_session_records(const std::string& text)
{
  StoredSession out;
  bool have_header = false, have_footer = false;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line))
  {
    ++line_no;
    if (line.empty())
      continue;
    const json rec = json::parse(line);
    const auto kind = rec.at("record").get<std::string>();
    if (kind == "header")
    {
      if (rec.at("version").get<int>() != kLogFormatVersion)
        throw std::runtime_error("unsupported session log version");
      out.header.session_id = rec.at("session_id").get<std::string>();
      out.header.condition = condition_from_string(rec.at("condition").get<std::string>());
      out.header.agent = rec.at("agent").get<std::string>();
      out.header.seed = rec.at("seed").get<std::uint64_t>();
      out.header.policy = rec.at("policy").get<ScriptedPolicy>();
      out.log.session_id = out.header.session_id;
      out.log.round_cap = rec.at("round_cap").get<int>();
      out.log.time_cap_ms = rec.at("time_cap_ms").get<Millis>();
      out.log.task = rec.at("task").get<std::vector<Issue>>();
      have_header = true;
    }
    else if (kind == "turn")
    {
      out.log.turns.push_back(rec.at("turn").get<Turn>());
      if (rec.at("snapshot").is_null())
        out.snapshots.push_back(std::nullopt);
      else
        out.snapshots.push_back(rec.at("snapshot").get<TurnSnapshot>());
    }
    else if (kind == "footer")
    {
      if (!rec.at("outcome").is_null())
        out.log.outcome = rec.at("outcome").get<Outcome>();
      out.metrics = rec.at("metrics").get<MetricsReport>();
      have_footer = true;
    }
    else
    {
      throw std::runtime_error(
        "line " + std::to_string(line_no) + ": unknown record '" + kind + "'");
    }
  }
  if (!have_header || !have_footer)
    throw std::runtime_error("session log lacks a header or footer record");
  return out;
}

inline StoredSession load_session(const std::filesystem::path& path)
{
  return parse_session_records(LogStore::read_all(path));
}

/// Re-runs a stored scripted session from its human offers and timings.
inline SessionState replay_session(const StoredSession& stored)
{
  SessionState s = start_session(stored.log.session_id, stored.log.task,
    stored.header.condition, stored.log.round_cap, stored.log.time_cap_ms);
  const Opponent opponent = scripted_opponent(stored.header.policy);
  for (const auto& turn : stored.log.turns)
  {
    s = submit_human_offer(std::move(s), turn.human_offer, turn.timing);
    if (s.phase == Phase::awaiting_agent)
      s = advance_agent(std::move(s), opponent);
  }
  // Closing message that did not produce a turn: acceptance or a late offer.
  if (!terminal(s.phase) && stored.log.outcome)
  {
    const auto& outcome = *stored.log.outcome;
    if (outcome.kind == OutcomeKind::agreement)
    {
      Offer accept{Role::human, outcome.selections, {}};
      s = submit_human_offer(std::move(s), accept,
        TurnTiming{s.elapsed_ms, outcome.decided_at, outcome.decided_at});
    }
    else if (outcome.kind == OutcomeKind::timeout)
    {
      Offer late{Role::human, s.log.turns.back().human_offer.selections, {}};
      s = submit_human_offer(std::move(s), late,
        TurnTiming{s.elapsed_ms, outcome.decided_at, outcome.decided_at});
    }
  }
  return s;
}

} // namespace horizon
