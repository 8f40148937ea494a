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
#include <string>

#include <httplib.h>

#include "horizon/service.hpp"

/// \file
/// JSON-over-HTTP binding of SessionService.
///
///   GET  /v1/health
///   POST /v1/sessions                      create
///   POST /v1/sessions/{id}/offers          submit an offer
///   GET  /v1/sessions/{id}/events?after=N  poll envelopes
///   GET  /v1/sessions/{id}/stream?after=N  server-sent events
///   POST /v1/sessions/{id}/finalize        metrics + persistence
///
/// Session commands carry the token from the create response in the
/// X-Session-Token header.

namespace horizon {

inline constexpr const char* kTokenHeader = "X-Session-Token";
inline constexpr const char* kProtocolHeader = "X-Horizon-Protocol";

namespace detail {

inline void reply_json(httplib::Response& res, int status, const json& body)
{
  res.status = status;
  res.set_header(kProtocolHeader, std::to_string(kProtocolVersion));
  res.set_content(body.dump(), "application/json");
}

inline json parse_body(const httplib::Request& req)
{
  if (req.body.empty())
    return json::object();
  json body = json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object())
    throw ApiError(400, "bad_request", "request body is not a JSON object");
  return body;
}

inline std::uint64_t after_param(const httplib::Request& req)
{
  if (!req.has_param("after"))
    return 0;
  try
  {
    return std::stoull(req.get_param_value("after"));
  }
  catch (const std::exception&)
  {
    throw ApiError(400, "bad_request", "'after' must be a non-negative integer");
  }
}

/// Runs a handler, mapping typed errors to status codes.
template <typename F>
httplib::Server::Handler guarded(F f)
{
  return [f](const httplib::Request& req, httplib::Response& res) {
    try
    {
      f(req, res);
    }
    catch (const ApiError& e)
    {
      reply_json(res, e.status(), e.to_json());
    }
    catch (const json::exception& e)
    {
      reply_json(res, 400, ApiError(400, "bad_request", e.what()).to_json());
    }
    catch (const std::invalid_argument& e)
    {
      reply_json(res, 400, ApiError(400, "invalid_offer", e.what()).to_json());
    }
    catch (const std::exception& e)
    {
      reply_json(res, 500, ApiError(500, "internal", e.what()).to_json());
    }
  };
}

inline json envelopes_json(const std::vector<Envelope>& events)
{
  json list = json::array();
  for (const auto& e : events)
    list.push_back(e);
  return json{{"v", kProtocolVersion}, {"envelopes", list}};
}

inline std::string sse_frame(const Envelope& e)
{
  return "id: " + std::to_string(e.sequence) + "\nevent: " + to_string(e.kind) +
         "\ndata: " + json(e).dump() + "\n\n";
}

} // namespace detail

/// Request body: {"dimensionality", "condition", "agent", "seed"}.
inline CreateSessionRequest create_request_from_json(const json& body)
{
  CreateSessionRequest req;
  req.dimensionality = body.value("dimensionality", req.dimensionality);
  try
  {
    req.condition = condition_from_string(
      body.value("condition", std::string(to_string(req.condition))));
  }
  catch (const std::invalid_argument& e)
  {
    throw ApiError(400, "invalid_condition", e.what());
  }
  req.agent = body.value("agent", req.agent);
  req.seed = body.value("seed", req.seed);
  return req;
}

/// Registers all routes. `poll_interval` bounds how long one SSE wait blocks.
inline void mount_routes(
  httplib::Server& server,
  SessionService& service,
  std::chrono::milliseconds poll_interval = std::chrono::milliseconds(250))
{
  using detail::guarded;
  using detail::reply_json;

  server.Get("/v1/health", guarded([](const httplib::Request&, httplib::Response& res) {
    reply_json(res, 200, json{{"v", kProtocolVersion}, {"status", "ok"}});
  }));

  server.Post("/v1/sessions",
    guarded([&service](const httplib::Request& req, httplib::Response& res) {
      const auto d = service.create_session(
        create_request_from_json(detail::parse_body(req)));
      reply_json(res, 201, d);
    }));

  server.Post(R"(/v1/sessions/([A-Za-z0-9-]+)/offers)",
    guarded([&service](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1];
      const std::string token = req.get_header_value(kTokenHeader);
      const json body = detail::parse_body(req);
      const TurnTiming timing = body.at("timing").get<TurnTiming>();
      std::vector<Envelope> events;
      if (body.contains("message"))
        events = service.post_message(
          id, token, body.at("message").get<std::string>(), timing);
      else if (body.contains("offer"))
      {
        Offer offer;
        offer.proposer = Role::human;
        offer.selections = selections_from_json(body.at("offer").at("selections"));
        offer.note = body.at("offer").value("note", std::string{});
        events = service.post_offer(id, token, std::move(offer), timing);
      }
      else
        throw ApiError(400, "bad_request", "body needs 'message' or 'offer'");
      reply_json(res, 200, detail::envelopes_json(events));
    }));

  server.Get(R"(/v1/sessions/([A-Za-z0-9-]+)/events)",
    guarded([&service](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1];
      reply_json(res, 200,
        detail::envelopes_json(service.events(id, detail::after_param(req))));
    }));

  server.Get(R"(/v1/sessions/([A-Za-z0-9-]+)/stream)",
    guarded([&service, poll_interval](
              const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1];
      auto cursor = std::make_shared<std::uint64_t>(detail::after_param(req));
      service.events(id, 0);  // 404 before the stream starts
      res.set_header(kProtocolHeader, std::to_string(kProtocolVersion));
      res.set_header("Cache-Control", "no-cache");
      res.set_chunked_content_provider("text/event-stream",
        [&service, id, cursor, poll_interval](std::size_t, httplib::DataSink& sink) {
          const auto events = service.wait_events(id, *cursor, poll_interval);
          bool closing = false;
          for (const auto& e : events)
          {
            const std::string frame = detail::sse_frame(e);
            if (!sink.write(frame.data(), frame.size()))
              return false;
            *cursor = e.sequence;
            closing = closing || e.kind == EnvelopeKind::session_ended;
          }
          if (closing || (events.empty() && service.ended(id)))
            sink.done();
          else if (events.empty())
          {
            static constexpr char keepalive[] = ": keepalive\n\n";
            if (!sink.write(keepalive, sizeof keepalive - 1))
              return false;
          }
          return true;
        });
    }));

  server.Post(R"(/v1/sessions/([A-Za-z0-9-]+)/finalize)",
    guarded([&service](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1];
      const auto report =
        service.finalize(id, req.get_header_value(kTokenHeader));
      reply_json(res, 200,
        json{{"v", kProtocolVersion}, {"metrics", human_side_metrics(report)}});
    }));
}

} // namespace horizon
