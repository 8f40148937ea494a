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
#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <string>
#include <vector>

#include "horizon/catalog.hpp"
#include "horizon/session.hpp"

/// \file
/// Transport-neutral service used by the HTTP layer and by tests.
///
/// Commands mutate one session under that session's mutex. Every accepted
/// command appends envelopes to the session's event stream; subscribers read
/// the stream by sequence number. Nothing in the stream or in the session
/// descriptor carries agent payoffs.

namespace horizon {

inline constexpr int kProtocolVersion = 1;

enum class EnvelopeKind
{
  session_created,
  turn_result,
  belief_snapshot,
  convergence_snapshot,
  session_ended,
  error
};

inline const char* to_string(EnvelopeKind kind)
{
  switch (kind)
  {
    case EnvelopeKind::session_created: return "session_created";
    case EnvelopeKind::turn_result: return "turn_result";
    case EnvelopeKind::belief_snapshot: return "belief_snapshot";
    case EnvelopeKind::convergence_snapshot: return "convergence_snapshot";
    case EnvelopeKind::session_ended: return "session_ended";
    case EnvelopeKind::error: return "error";
  }
  return "?";
}

struct Envelope
{
  EnvelopeKind kind = EnvelopeKind::error;
  std::string session_id;
  std::uint64_t sequence = 0;  // 1-based, per session
  json payload;
};

inline void to_json(json& j, const Envelope& e)
{
  j = json{{"v", kProtocolVersion},
           {"kind", to_string(e.kind)},
           {"session_id", e.session_id},
           {"seq", e.sequence},
           {"payload", e.payload}};
}

/// Typed failure with an HTTP-like status.
class ApiError : public std::runtime_error
{
public:
  ApiError(int status, std::string code, const std::string& message)
    : std::runtime_error(message), _status(status), _code(std::move(code))
  {}

  int status() const { return _status; }
  const std::string& code() const { return _code; }

  json to_json() const
  {
    return json{{"v", kProtocolVersion},
                {"error", {{"code", _code}, {"message", what()}}}};
  }

private:
  int _status;
  std::string _code;
};

//==============================================================================
struct CreateSessionRequest
{
  int dimensionality = 3;
  Condition condition = Condition::decision_support;
  std::string agent = "scripted";
  std::uint64_t seed = 0;
};

struct SessionDescriptor
{
  std::string session_id;
  std::string token;
  int dimensionality = 0;
  bool non_canonical = false;
  Condition condition = Condition::decision_support;
  std::string agent;
  int round_cap = kDefaultRoundCap;
  Millis time_cap_ms = kDefaultTimeCapMs;
  std::vector<HumanIssueView> issues;
};

inline void to_json(json& j, const SessionDescriptor& d)
{
  j = json{{"v", kProtocolVersion},
           {"session_id", d.session_id},
           {"token", d.token},
           {"dimensionality", d.dimensionality},
           {"non_canonical", d.non_canonical},
           {"condition", to_string(d.condition)},
           {"agent", d.agent},
           {"round_cap", d.round_cap},
           {"time_cap_ms", d.time_cap_ms},
           {"issues", d.issues}};
}

/// Produces an opponent for a new session; used for agent kinds other than
/// the built-in scripted landlord.
using OpponentFactory =
  std::function<Opponent(const std::vector<Issue>& task, std::uint64_t seed)>;

struct ServiceOptions
{
  ScriptedPolicy policy;
  std::map<std::string, OpponentFactory> agents;  // e.g. "llm"
  std::optional<std::filesystem::path> log_root;
  int round_cap = kDefaultRoundCap;
  Millis time_cap_ms = kDefaultTimeCapMs;
};

/// Human-side view of a finished session. Joint payoff and Pareto proximity
/// depend on agent payoffs and are left to the research export.
inline json human_side_metrics(const MetricsReport& r)
{
  json j = r;
  j.erase("joint_payoff");
  j.erase("pareto_proximity");
  return j;
}

//==============================================================================
class SessionService
{
public:
  explicit SessionService(TaskCatalog catalog, ServiceOptions options = {})
    : _catalog(std::move(catalog)), _options(std::move(options))
  {
    if (_options.log_root)
      _store.emplace(*_options.log_root);
  }

  SessionDescriptor create_session(const CreateSessionRequest& req)
  {
    if (req.dimensionality < kMinDimensionality ||
        req.dimensionality > static_cast<int>(_catalog.issues.size()))
      throw ApiError(400, "invalid_dimensionality",
        "dimensionality must be between 1 and " +
          std::to_string(_catalog.issues.size()));

    Opponent opponent;
    if (req.agent == "scripted")
    {
      ScriptedPolicy policy = _options.policy;
      policy.seed = req.seed;
      opponent = scripted_opponent(policy);
    }
    else
    {
      const auto it = _options.agents.find(req.agent);
      if (it == _options.agents.end())
        throw ApiError(400, "unknown_agent", "agent '" + req.agent + "' is not configured");
      opponent = it->second(sample_task(_catalog, req.dimensionality, req.seed), req.seed);
    }

    auto entry = std::make_shared<Entry>();
    entry->token = random_hex();
    entry->opponent = std::move(opponent);
    entry->header.condition = req.condition;
    entry->header.agent = req.agent;
    entry->header.seed = req.seed;
    entry->header.policy = _options.policy;
    entry->header.policy.seed = req.seed;

    std::string id;
    {
      std::unique_lock lock(_sessions_mutex);
      id = "s" + std::to_string(++_counter) + "-" + random_hex().substr(0, 8);
      entry->header.session_id = id;
      entry->state = start_session(id,
        sample_task(_catalog, req.dimensionality, req.seed), req.condition,
        _options.round_cap, _options.time_cap_ms);
      _sessions.emplace(id, entry);
    }

    SessionDescriptor d = describe(*entry);
    std::lock_guard guard(entry->mutex);
    json payload = d;
    payload.erase("token");
    emit(*entry, EnvelopeKind::session_created, std::move(payload));
    return d;
  }

  /// Applies a human offer and, when the session continues, the agent's
  /// counter. Returns the envelopes appended by this command.
  std::vector<Envelope> post_offer(
    const std::string& session_id,
    const std::string& token,
    Offer offer,
    const TurnTiming& timing)
  {
    auto entry = find(session_id);
    std::lock_guard guard(entry->mutex);
    authorize(*entry, token);
    offer.proposer = Role::human;

    const std::size_t first = entry->events.size();
    try
    {
      entry->state = submit_human_offer(entry->state, std::move(offer), timing);
    }
    catch (const PhaseError& e)
    {
      throw ApiError(409, "phase_violation", e.what());
    }
    catch (const std::invalid_argument& e)
    {
      throw ApiError(400, "invalid_offer", e.what());
    }

    if (entry->state.phase == Phase::awaiting_agent)
      entry->state = advance_agent(std::move(entry->state), entry->opponent);

    publish_step(*entry);
    return {entry->events.begin() + static_cast<std::ptrdiff_t>(first),
            entry->events.end()};
  }

  /// Parses an offer message (a fenced offer block plus optional prose).
  std::vector<Envelope> post_message(
    const std::string& session_id,
    const std::string& token,
    const std::string& text,
    const TurnTiming& timing)
  {
    std::set<IssueId> active;
    {
      auto entry = find(session_id);
      std::lock_guard guard(entry->mutex);
      authorize(*entry, token);
      for (const auto& issue : entry->state.log.task)
        active.insert(issue.spec.id);
    }
    Offer offer;
    try
    {
      offer = parse_offer(text, Role::human, active);
    }
    catch (const OfferParseError& e)
    {
      throw ApiError(400, "malformed_offer", e.what());
    }
    return post_offer(session_id, token, std::move(offer), timing);
  }

  /// Envelopes with sequence > after.
  std::vector<Envelope> events(const std::string& session_id, std::uint64_t after) const
  {
    auto entry = find(session_id);
    std::lock_guard guard(entry->mutex);
    return slice(*entry, after);
  }

  /// Blocks until an envelope with sequence > after exists, the session has
  /// ended, or the timeout passes.
  std::vector<Envelope> wait_events(
    const std::string& session_id,
    std::uint64_t after,
    std::chrono::milliseconds timeout) const
  {
    auto entry = find(session_id);
    std::unique_lock lock(entry->mutex);
    entry->changed.wait_for(lock, timeout, [&] {
      return entry->events.size() > after || terminal(entry->state.phase);
    });
    return slice(*entry, after);
  }

  bool ended(const std::string& session_id) const
  {
    auto entry = find(session_id);
    std::lock_guard guard(entry->mutex);
    return terminal(entry->state.phase);
  }

  /// Computes metrics and persists the log once. Repeated calls return the
  /// same report and leave stored files untouched.
  MetricsReport finalize(const std::string& session_id, const std::string& token)
  {
    auto entry = find(session_id);
    std::lock_guard guard(entry->mutex);
    authorize(*entry, token);
    if (!terminal(entry->state.phase))
      throw ApiError(409, "phase_violation",
        std::string("cannot finalize while ") + to_string(entry->state.phase));
    if (!entry->report)
    {
      try
      {
        entry->report = horizon::finalize(
          entry->state, entry->header, _store ? &*_store : nullptr);
      }
      catch (const StorageError& e)
      {
        throw ApiError(500, "storage_failure", e.what());
      }
    }
    return *entry->report;
  }

  /// Test hook: copy of the engine state.
  SessionState state(const std::string& session_id) const
  {
    auto entry = find(session_id);
    std::lock_guard guard(entry->mutex);
    return entry->state;
  }

  const TaskCatalog& catalog() const { return _catalog; }

private:
  struct Entry
  {
    mutable std::mutex mutex;
    mutable std::condition_variable changed;
    std::string token;
    SessionHeader header;
    SessionState state;
    Opponent opponent;
    std::vector<Envelope> events;
    std::size_t published_turns = 0;
    bool ended_published = false;
    std::optional<MetricsReport> report;
  };

  std::shared_ptr<Entry> find(const std::string& id) const
  {
    std::shared_lock lock(_sessions_mutex);
    const auto it = _sessions.find(id);
    if (it == _sessions.end())
      throw ApiError(404, "unknown_session", "no session '" + id + "'");
    return it->second;
  }

  static void authorize(const Entry& e, const std::string& token)
  {
    if (token != e.token)
      throw ApiError(403, "bad_token", "session token does not match");
  }

  SessionDescriptor describe(const Entry& e) const
  {
    SessionDescriptor d;
    d.session_id = e.header.session_id;
    d.token = e.token;
    d.dimensionality = static_cast<int>(e.state.log.task.size());
    d.non_canonical = !canonical_dimensionality(d.dimensionality);
    d.condition = e.state.condition;
    d.agent = e.header.agent;
    d.round_cap = e.state.log.round_cap;
    d.time_cap_ms = e.state.log.time_cap_ms;
    d.issues = e.state.views;
    return d;
  }

  static void emit(Entry& e, EnvelopeKind kind, json payload)
  {
    e.events.push_back(Envelope{kind, e.header.session_id,
      static_cast<std::uint64_t>(e.events.size() + 1), std::move(payload)});
    e.changed.notify_all();
  }

  static std::vector<Envelope> slice(const Entry& e, std::uint64_t after)
  {
    if (after >= e.events.size())
      return {};
    return {e.events.begin() + static_cast<std::ptrdiff_t>(after), e.events.end()};
  }

  /// Emits the turn result and, in decision_support, exactly one belief and
  /// one convergence snapshot per completed turn; then the end marker.
  void publish_step(Entry& e)
  {
    const SessionState& s = e.state;
    if (s.log.turns.size() > e.published_turns)
    {
      const Turn& turn = s.log.turns.back();
      json result{{"turn_number", turn.turn_number},
                  {"human_offer", turn.human_offer},
                  {"phase", to_string(s.phase)},
                  {"round", s.round}};
      result["agent_offer"] =
        turn.agent_offer ? json(*turn.agent_offer) : json(nullptr);
      if (turn.agent_offer)
        result["agent_message"] = format_offer(*turn.agent_offer);
      emit(e, EnvelopeKind::turn_result, std::move(result));
      e.published_turns = s.log.turns.size();

      if (s.exposes_snapshots() && turn.agent_offer && !s.snapshots.empty())
      {
        const TurnSnapshot& snap = s.snapshots.back();
        emit(e, EnvelopeKind::belief_snapshot,
          json{{"turn_number", snap.turn_number},
               {"beliefs", snap.beliefs},
               {"grid", snap.grid}});
        emit(e, EnvelopeKind::convergence_snapshot,
          json{{"turn_number", snap.turn_number},
               {"convergence", snap.convergence}});
      }
    }
    else
    {
      // Closing message without a new turn: acceptance or a late offer.
      emit(e, EnvelopeKind::turn_result,
        json{{"turn_number", nullptr},
             {"human_offer", nullptr},
             {"agent_offer", nullptr},
             {"phase", to_string(s.phase)},
             {"round", s.round}});
    }

    if (terminal(s.phase) && !e.ended_published)
    {
      if (s.phase == Phase::aborted)
        emit(e, EnvelopeKind::error,
          json{{"code", "agent_failure"},
               {"message", s.log.outcome ? s.log.outcome->diagnostic : ""}});
      const MetricsReport report = compute_metrics(s.log);
      emit(e, EnvelopeKind::session_ended,
        json{{"phase", to_string(s.phase)},
             {"outcome", s.log.outcome ? json(*s.log.outcome) : json(nullptr)},
             {"metrics", human_side_metrics(report)}});
      e.ended_published = true;
    }
  }

  std::string random_hex()
  {
    std::lock_guard guard(_rng_mutex);
    std::uniform_int_distribution<std::uint64_t> dist;
    std::string out;
    for (int k = 0; k < 2; ++k)
    {
      char buf[17];
      std::snprintf(buf, sizeof buf, "%016llx",
        static_cast<unsigned long long>(dist(_rng)));
      out += buf;
    }
    return out;
  }

  TaskCatalog _catalog;
  ServiceOptions _options;
  std::optional<LogStore> _store;

  mutable std::shared_mutex _sessions_mutex;
  std::map<std::string, std::shared_ptr<Entry>> _sessions;
  std::uint64_t _counter = 0;

  std::mutex _rng_mutex;
  std::mt19937_64 _rng{std::random_device{}()};
};

} // namespace horizon
