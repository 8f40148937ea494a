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

#include <thread>

#include <catch_amalgamated.hpp>

#include "horizon/service.hpp"
#include "support/properties.hpp"

using namespace horizon;

namespace {

int status_of(const std::function<void()>& f)
{
  try
  {
    f();
  }
  catch (const ApiError& e)
  {
    return e.status();
  }
  return 0;
}

std::string code_of(const std::function<void()>& f)
{
  try
  {
    f();
  }
  catch (const ApiError& e)
  {
    return e.code();
  }
  return {};
}

Offer all_at(const SessionDescriptor& d, int option)
{
  Offer o{Role::human, {}, {}};
  for (const auto& v : d.issues)
    o.selections[v.spec.id] = option;
  return o;
}

TurnTiming at(Millis t) { return TurnTiming{t, t + 100, t + 200}; }

std::size_t count_kind(const std::vector<Envelope>& events, EnvelopeKind kind)
{
  return static_cast<std::size_t>(std::count_if(events.begin(), events.end(),
    [&](const Envelope& e) { return e.kind == kind; }));
}

} // namespace

TEST_CASE("session descriptor carries only the human side")
{
  SessionService service(default_catalog());
  const auto d = service.create_session({7, Condition::decision_support, "scripted", 5});
  CHECK(d.issues.size() == 7);
  CHECK_FALSE(d.non_canonical);
  CHECK(d.token.size() >= 32);
  CHECK(d.round_cap == 15);
  CHECK(d.time_cap_ms == 900000);
  const json j = d;
  CHECK(j.at("v") == kProtocolVersion);
  for (const auto& issue : j.at("issues"))
  {
    CHECK(issue.contains("human_payoffs"));
    CHECK_FALSE(issue.contains("agent"));
    CHECK_FALSE(issue.contains("payoffs"));
  }

  const auto two = service.create_session({2, Condition::baseline, "scripted", 1});
  CHECK(two.non_canonical);

  const auto again = service.create_session({7, Condition::baseline, "scripted", 5});
  CHECK(again.issues == d.issues);
  CHECK(again.session_id != d.session_id);
  CHECK(again.token != d.token);

  CHECK(code_of([&] { service.create_session({0, Condition::baseline, "scripted", 1}); }) ==
        "invalid_dimensionality");
  CHECK(status_of([&] { service.create_session({17, Condition::baseline, "scripted", 1}); }) == 400);
  CHECK(code_of([&] { service.create_session({3, Condition::baseline, "llm", 1}); }) ==
        "unknown_agent");

  const auto created = service.events(d.session_id, 0);
  REQUIRE(created.size() == 1);
  CHECK(created[0].kind == EnvelopeKind::session_created);
  CHECK_FALSE(created[0].payload.contains("token"));
}

TEST_CASE("snapshot envelopes follow the condition")
{
  SessionService service(default_catalog());
  for (Condition c : {Condition::baseline, Condition::decision_support})
  {
    const auto d = service.create_session({3, c, "scripted", 2});
    std::vector<Envelope> all;
    int turns = 0;
    for (int t = 0; t < 4; ++t)
    {
      const auto events = service.post_offer(d.session_id, d.token, all_at(d, 6), at(t * 1000));
      all.insert(all.end(), events.begin(), events.end());
      ++turns;
      REQUIRE(events.front().kind == EnvelopeKind::turn_result);
      if (c == Condition::decision_support)
      {
        REQUIRE(events.size() == 3);
        CHECK(events[1].kind == EnvelopeKind::belief_snapshot);
        CHECK(events[2].kind == EnvelopeKind::convergence_snapshot);
        CHECK(events[1].payload.at("turn_number") == t + 1);
        CHECK(events[2].payload.at("convergence").contains("width_percentage"));
      }
    }
    const std::size_t expected = c == Condition::decision_support ? 4u : 0u;
    CHECK(count_kind(all, EnvelopeKind::belief_snapshot) == expected);
    CHECK(count_kind(all, EnvelopeKind::convergence_snapshot) == expected);
    CHECK(count_kind(all, EnvelopeKind::turn_result) == 4);
  }
}

TEST_CASE("agreement, errors and sequencing")
{
  SessionService service(default_catalog());
  const auto d = service.create_session({3, Condition::decision_support, "scripted", 9});
  auto events = service.post_offer(d.session_id, d.token, all_at(d, 6), at(0));
  const Offer counter = events.front().payload.at("agent_offer").get<Offer>();
  CHECK(events.front().payload.at("agent_message").get<std::string>().find("```offer") == 0);

  CHECK(code_of([&] { service.finalize(d.session_id, d.token); }) == "phase_violation");

  Offer accept = counter;
  accept.proposer = Role::human;
  events = service.post_offer(d.session_id, d.token, accept, at(1000));
  REQUIRE(events.size() == 2);
  CHECK(events[0].kind == EnvelopeKind::turn_result);
  CHECK(events[0].payload.at("agent_offer").is_null());
  CHECK(events[1].kind == EnvelopeKind::session_ended);
  CHECK(events[1].payload.at("phase") == "agreed");
  CHECK_FALSE(events[1].payload.at("metrics").contains("joint_payoff"));
  CHECK(service.ended(d.session_id));

  CHECK(status_of([&] { service.post_offer(d.session_id, d.token, all_at(d, 1), at(2000)); }) == 409);
  CHECK(status_of([&] { service.post_offer("nope", d.token, all_at(d, 1), at(0)); }) == 404);
  CHECK(status_of([&] { service.events("nope", 0); }) == 404);

  const auto e = service.create_session({3, Condition::baseline, "scripted", 9});
  CHECK(status_of([&] { service.post_offer(e.session_id, "wrong", all_at(e, 1), at(0)); }) == 403);
  CHECK(code_of([&] { service.post_message(e.session_id, e.token, "hello", at(0)); }) ==
        "malformed_offer");
  CHECK(code_of([&] { service.post_offer(e.session_id, e.token, all_at(e, 7), at(0)); }) ==
        "invalid_offer");
  CHECK(code_of([&] { service.post_offer(e.session_id, e.token, all_at(e, 1), TurnTiming{5, 1, 9}); }) ==
        "invalid_offer");

  std::string text = "Here is my offer\n```offer\n";
  for (const auto& v : e.issues)
    text += v.spec.id + " = 7\n";
  text += "```";
  events = service.post_message(e.session_id, e.token, text, at(0));
  CHECK(events.front().payload.at("human_offer").at("note") == "Here is my offer");

  const auto all = service.events(d.session_id, 0);
  for (std::size_t k = 0; k < all.size(); ++k)
    CHECK(all[k].sequence == k + 1);
  CHECK(service.events(d.session_id, 2).front().sequence == 3);
  CHECK(service.events(d.session_id, 1000).empty());
}

TEST_CASE("no agent payoff reaches the client")
{
  const auto v = props::leak_scan(20);
  INFO(v.detail);
  CHECK(v.pass);
  CHECK(v.cases > 1000);
}

TEST_CASE("concurrent sessions keep their own ordering")
{
  SessionService service(default_catalog());
  std::vector<std::thread> workers;
  std::vector<std::string> ids(8);
  for (int w = 0; w < 8; ++w)
    workers.emplace_back([&, w] {
      const auto traffic = props::drive_via_service(service, 1 + w % 7,
        Condition::decision_support, static_cast<std::uint64_t>(w + 1), "entropy-seeking");
      ids[static_cast<std::size_t>(w)] = traffic.session_id;
    });
  for (auto& t : workers)
    t.join();
  for (const auto& id : ids)
  {
    const auto events = service.events(id, 0);
    for (std::size_t k = 0; k < events.size(); ++k)
    {
      CHECK(events[k].sequence == k + 1);
      CHECK(events[k].session_id == id);
    }
    CHECK(events.back().kind == EnvelopeKind::session_ended);
  }
}

TEST_CASE("service finalize is idempotent and persists once")
{
  const auto dir = props::temp_dir("service");
  ServiceOptions options;
  options.log_root = dir;
  SessionService service(default_catalog(), options);
  const auto traffic = props::drive_via_service(service, 3, Condition::baseline, 4, "greedy-own-max");
  const auto& id = traffic.session_id;
  const auto d = service.state(id);

  // drive_via_service already finalized once.
  const std::string path = (dir / id / "session.jsonl").string();
  const std::string bytes = LogStore::read_all(path);
  CHECK(status_of([&] { service.finalize(id, "wrong"); }) == 403);
  const StoredSession stored = load_session(path);
  CHECK(stored.log == d.log);
  CHECK(stored.header.condition == Condition::baseline);
  CHECK(LogStore::read_all(path) == bytes);
  std::filesystem::remove_all(dir);
}

TEST_CASE("pluggable agents through a factory")
{
  ServiceOptions options;
  options.agents["echo"] = [](const std::vector<Issue>&, std::uint64_t) -> Opponent {
    return [](const CounterRequest& req) { return req.human_offer; };
  };
  options.agents["broken"] = [](const std::vector<Issue>&, std::uint64_t) -> Opponent {
    return [](const CounterRequest&) -> Offer { throw AgentError("model unavailable"); };
  };
  SessionService service(default_catalog(), options);

  const auto d = service.create_session({3, Condition::decision_support, "echo", 1});
  auto events = service.post_offer(d.session_id, d.token, all_at(d, 4), at(0));
  CHECK(events.back().kind == EnvelopeKind::session_ended);
  CHECK(events.back().payload.at("phase") == "agreed");
  CHECK(service.finalize(d.session_id, d.token).outcome == OutcomeKind::agreement);

  const auto b = service.create_session({3, Condition::decision_support, "broken", 1});
  events = service.post_offer(b.session_id, b.token, all_at(b, 4), at(0));
  CHECK(count_kind(events, EnvelopeKind::error) == 1);
  CHECK(count_kind(events, EnvelopeKind::belief_snapshot) == 0);
  CHECK(events.back().payload.at("phase") == "aborted");
  CHECK(service.finalize(b.session_id, b.token).outcome == OutcomeKind::aborted);
}
