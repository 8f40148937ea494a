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

#include "horizon/http_api.hpp"

using namespace horizon;

namespace {

struct Fixture
{
  SessionService service{default_catalog()};
  httplib::Server server;
  std::thread thread;
  int port = 0;

  Fixture()
  {
    mount_routes(server, service, std::chrono::milliseconds(50));
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }

  ~Fixture()
  {
    server.stop();
    thread.join();
  }

  httplib::Client client() const
  {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(10, 0);
    return c;
  }
};

json body_of(const httplib::Result& r)
{
  REQUIRE(r);
  return json::parse(r->body);
}

json timing(Millis t) { return json{{"received_at", t}, {"first_keystroke_at", t + 100}, {"submitted_at", t + 200}}; }

} // namespace

TEST_CASE("HTTP session round trip with a server-sent event stream")
{
  Fixture f;
  auto c = f.client();

  auto health = c.Get("/v1/health");
  REQUIRE(health);
  CHECK(health->status == 200);
  CHECK(health->get_header_value(kProtocolHeader) == "1");

  auto created = c.Post("/v1/sessions",
    json{{"dimensionality", 1}, {"condition", "decision_support"}, {"seed", 3}}.dump(),
    "application/json");
  REQUIRE(created);
  CHECK(created->status == 201);
  const json d = json::parse(created->body);
  const std::string id = d.at("session_id");
  const httplib::Headers auth{{kTokenHeader, d.at("token").get<std::string>()}};
  const std::string issue = d.at("issues").at(0).at("spec").at("id");

  // Collect the stream on another connection while offers are posted.
  std::string stream;
  std::thread reader([&] {
    auto sc = f.client();
    sc.Get("/v1/sessions/" + id + "/stream", [&](const char* data, std::size_t n) {
      stream.append(data, n);
      return true;
    });
  });

  json last;
  Millis clock = 0;
  for (int t = 0; t < 16; ++t)
  {
    const json offer_body{
      {"message", "```offer\n" + issue + " = 7\n```"}, {"timing", timing(clock)}};
    auto r = c.Post("/v1/sessions/" + id + "/offers", auth, offer_body.dump(), "application/json");
    REQUIRE(r);
    REQUIRE(r->status == 200);
    last = json::parse(r->body);
    clock += 1000;
    if (last.at("envelopes").back().at("kind") == "session_ended")
      break;
  }
  CHECK(last.at("envelopes").back().at("kind") == "session_ended");
  reader.join();

  CHECK(stream.find("event: session_created") != std::string::npos);
  CHECK(stream.find("event: belief_snapshot") != std::string::npos);
  CHECK(stream.find("event: convergence_snapshot") != std::string::npos);
  CHECK(stream.find("event: session_ended") != std::string::npos);
  CHECK(stream.find("\"agent\":[") == std::string::npos);

  const json polled = body_of(c.Get("/v1/sessions/" + id + "/events?after=1"));
  CHECK(polled.at("envelopes").at(0).at("seq") == 2);

  // Reconnecting after the end returns promptly with nothing new.
  const auto all = body_of(c.Get("/v1/sessions/" + id + "/events")).at("envelopes");
  auto late = c.Get("/v1/sessions/" + id + "/stream?after=" + std::to_string(all.size()));
  REQUIRE(late);
  CHECK(late->body.find("event:") == std::string::npos);

  auto fin = c.Post("/v1/sessions/" + id + "/finalize", auth, "", "application/json");
  REQUIRE(fin);
  CHECK(fin->status == 200);
  const json metrics = json::parse(fin->body).at("metrics");
  CHECK(metrics.contains("total_turns"));
  CHECK_FALSE(metrics.contains("joint_payoff"));
  CHECK_FALSE(metrics.contains("pareto_proximity"));
  auto again = c.Post("/v1/sessions/" + id + "/finalize", auth, "", "application/json");
  REQUIRE(again);
  CHECK(json::parse(again->body) == json::parse(fin->body));
}

TEST_CASE("HTTP error mapping")
{
  Fixture f;
  auto c = f.client();
  auto error_code = [](const httplib::Result& r) {
    return json::parse(r->body).at("error").at("code").get<std::string>();
  };

  auto bad_n = c.Post("/v1/sessions", R"({"dimensionality": 0})", "application/json");
  REQUIRE(bad_n);
  CHECK(bad_n->status == 400);
  CHECK(error_code(bad_n) == "invalid_dimensionality");

  auto bad_cond = c.Post("/v1/sessions", R"({"condition": "other"})", "application/json");
  CHECK(bad_cond->status == 400);
  CHECK(error_code(bad_cond) == "invalid_condition");

  auto garbage = c.Post("/v1/sessions", "not json", "application/json");
  CHECK(garbage->status == 400);

  const json d = json::parse(c.Post("/v1/sessions", "{}", "application/json")->body);
  const std::string id = d.at("session_id");
  const httplib::Headers auth{{kTokenHeader, d.at("token").get<std::string>()}};
  const std::string path = "/v1/sessions/" + id + "/offers";

  auto missing = c.Get("/v1/sessions/s999-deadbeef/events");
  CHECK(missing->status == 404);
  CHECK(error_code(missing) == "unknown_session");

  const json body{{"message", "no block"}, {"timing", timing(0)}};
  auto no_token = c.Post(path, body.dump(), "application/json");
  CHECK(no_token->status == 403);

  auto malformed = c.Post(path, auth, body.dump(), "application/json");
  CHECK(malformed->status == 400);
  CHECK(error_code(malformed) == "malformed_offer");

  json selections;
  for (const auto& issue : d.at("issues"))
    selections[issue.at("spec").at("id").get<std::string>()] = 9;
  auto out_of_range = c.Post(path, auth,
    json{{"offer", {{"selections", selections}}}, {"timing", timing(0)}}.dump(), "application/json");
  CHECK(out_of_range->status == 400);
  CHECK(error_code(out_of_range) == "invalid_offer");

  auto no_timing = c.Post(path, auth, R"({"message": "x"})", "application/json");
  CHECK(no_timing->status == 400);

  auto early = c.Post("/v1/sessions/" + id + "/finalize", auth, "", "application/json");
  CHECK(early->status == 409);
  CHECK(error_code(early) == "phase_violation");

  auto bad_after = c.Get("/v1/sessions/" + id + "/events?after=x");
  CHECK(bad_after->status == 400);
}
