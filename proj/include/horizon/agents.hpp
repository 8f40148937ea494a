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
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "horizon/domain.hpp"

namespace horizon {

//==============================================================================
// Offer blocks
//
// Every offer in a chat message travels as exactly one fenced block:
//
//   ```offer
//   utilities_included = 6
//   monthly_rent = 3
//   ```
//
// Option numbers are 1-based labels. Text outside the block is kept as the
// offer's note.

class OfferParseError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string trim(const std::string& s)
{
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos)
    return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split_lines(const std::string& text)
{
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    lines.push_back(line);
  return lines;
}

} // namespace detail

inline std::string format_offer(const Offer& offer)
{
  std::string out;
  if (!offer.note.empty())
    out += offer.note + "\n";
  out += "```offer\n";
  for (const auto& [issue, index] : offer.selections)
    out += issue + " = " + std::to_string(index + 1) + "\n";
  out += "```";
  return out;
}

/// Extracts the single offer block of a message. When `active` is non-empty
/// every selection must name an active issue and every active issue must be
/// selected.
inline Offer parse_offer(
  const std::string& text,
  Role proposer,
  const std::set<IssueId>& active = {})
{
  const auto lines = detail::split_lines(text);

  std::optional<std::size_t> open;
  std::optional<std::size_t> close;
  for (std::size_t k = 0; k < lines.size(); ++k)
  {
    const auto line = detail::trim(lines[k]);
    if (line == "```offer")
    {
      if (open)
        throw OfferParseError("ambiguous offer: more than one offer block");
      open = k;
    }
    else if (line.rfind("```", 0) == 0 && open && !close)
    {
      close = k;
    }
  }
  if (!open)
    throw OfferParseError("missing offer block");
  if (!close)
    throw OfferParseError(
      "line " + std::to_string(*open + 1) + ": offer block is not closed");

  Offer offer;
  offer.proposer = proposer;
  for (std::size_t k = *open + 1; k < *close; ++k)
  {
    const auto line = detail::trim(lines[k]);
    if (line.empty())
      continue;
    const std::string where = "line " + std::to_string(k + 1) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw OfferParseError(where + "expected 'issue = option', got '" + line + "'");
    const auto issue = detail::trim(line.substr(0, eq));
    const auto value = detail::trim(line.substr(eq + 1));
    if (issue.empty())
      throw OfferParseError(where + "missing issue id");
    if (!active.empty() && !active.count(issue))
      throw OfferParseError(where + "unknown issue '" + issue + "'");

    int label = 0;
    std::size_t used = 0;
    try
    {
      label = std::stoi(value, &used);
    }
    catch (const std::exception&)
    {
      throw OfferParseError(where + "option '" + value + "' is not a number");
    }
    if (used != value.size())
      throw OfferParseError(where + "option '" + value + "' is not a number");
    if (label < 1 || label > static_cast<int>(kOptionCount))
      throw OfferParseError(
        where + "option " + std::to_string(label) + " out of range 1..7");
    if (!offer.selections.emplace(issue, label - 1).second)
      throw OfferParseError(where + "issue '" + issue + "' selected twice");
  }

  for (const auto& issue : active)
  {
    if (!offer.selections.count(issue))
      throw OfferParseError("missing selection for issue '" + issue + "'");
  }
  if (offer.selections.empty())
    throw OfferParseError("offer block is empty");

  std::string note;
  for (std::size_t k = 0; k < lines.size(); ++k)
  {
    if (k >= *open && k <= *close)
      continue;
    if (!note.empty())
      note += '\n';
    note += lines[k];
  }
  offer.note = detail::trim(note);
  return offer;
}

//==============================================================================
// Scripted landlord

struct ScriptedPolicy
{
  /// Per-issue reservation payoffs; issues not listed use reservation_share.
  std::map<IssueId, double> reservation;
  /// Reservation as a share of the agent's own payoff range above its minimum.
  double reservation_share = 0.35;
  double beta = 2.0;
  int horizon = kDefaultRoundCap;
  /// Rotates the choice among options with tied payoffs.
  std::uint64_t seed = 0;
};

inline double reservation_for(const ScriptedPolicy& policy, const Issue& issue)
{
  const auto& own = issue.payoffs.agent;
  const double hi = *std::max_element(own.begin(), own.end());
  const auto it = policy.reservation.find(issue.spec.id);
  if (it != policy.reservation.end())
    return std::min(it->second, hi);
  const double lo = *std::min_element(own.begin(), own.end());
  return lo + policy.reservation_share * (hi - lo);
}

/// Boulware target: u_max - (u_max - u_res) * (t / T)^beta.
inline double boulware_target(double u_max, double u_res, int t, int horizon, double beta)
{
  const double progress =
    std::clamp(static_cast<double>(t) / std::max(1, horizon), 0.0, 1.0);
  return u_max - (u_max - u_res) * std::pow(progress, beta);
}

/// Own option with the smallest payoff that still meets `target`.
inline int closest_not_below(const OptionRow& own, double target, std::uint64_t seed)
{
  std::optional<double> best;
  for (double u : own)
  {
    if (u + 1e-9 >= target && (!best || u < *best))
      best = u;
  }
  if (!best)
    best = *std::max_element(own.begin(), own.end());

  std::vector<int> tied;
  for (int j = 0; j <= kMaxOptionIndex; ++j)
    if (own[j] == *best)
      tied.push_back(j);
  return tied[seed % tied.size()];
}

inline void validate_policy(const ScriptedPolicy& policy)
{
  if (!(policy.beta > 0.0))
    throw std::invalid_argument("scripted policy beta must be positive");
  if (policy.horizon < 1)
    throw std::invalid_argument("scripted policy horizon must be positive");
  if (policy.reservation_share < 0.0 || policy.reservation_share > 1.0)
    throw std::invalid_argument("reservation share must lie in [0, 1]");
}

/// Counter-offer at turn t. On each issue the agent accepts the human's
/// selection (mirrors it) when that is worth at least the current target;
/// otherwise it proposes its cheapest option that still meets the target.
inline Offer scripted_counter_offer(
  const ScriptedPolicy& policy,
  std::span<const Issue> task,
  int t,
  const std::optional<Offer>& last_human_offer)
{
  validate_policy(policy);
  Offer counter;
  counter.proposer = Role::agent;
  for (const auto& issue : task)
  {
    const auto& own = issue.payoffs.agent;
    const double u_max = *std::max_element(own.begin(), own.end());
    const double u_res = reservation_for(policy, issue);
    const double target = boulware_target(u_max, u_res, t, policy.horizon, policy.beta);

    int choice = closest_not_below(own, target, policy.seed);
    if (last_human_offer)
    {
      const auto it = last_human_offer->selections.find(issue.spec.id);
      if (it != last_human_offer->selections.end() && valid_option(it->second) &&
          own[it->second] + 1e-9 >= target)
        choice = it->second;
    }
    counter.selections[issue.spec.id] = choice;
  }
  return counter;
}

//==============================================================================
// External LLM landlord

inline constexpr const char* kLandlordSystemPrompt =
  "You are an AI negotiator in a property rental scenario. "
  "Your primary objective is to maximize your own utility score based on the "
  "provided payoff matrix. Avoid defaulting to compromise or fairness-based "
  "solutions unless they demonstrably increase your score. Do not anchor on "
  "middle options without strategic justification. Evaluate each proposal "
  "based solely on its impact on your utility and respond with clear "
  "strategic reasoning.";

inline constexpr const char* kLandlordUserPrompt =
  "Based on your payoff matrix for the current negotiation issues, propose "
  "options that maximize your total utility score and provide explicit "
  "justification for your choices. Consider potential trade-offs across all "
  "issues when making your proposal.";

struct LlmClientConfig
{
  std::string base_url = "http://localhost:8080";
  std::string path = "/v1/chat/completions";
  std::string model = "gpt-4";
  double temperature = 0.2;
  int max_tokens = 128;
  std::string system_prompt = kLandlordSystemPrompt;
  std::string user_prompt = kLandlordUserPrompt;
  int timeout_s = 30;
  /// Name of the environment variable holding the API key.
  std::string api_key_env = "HORIZON_LLM_API_KEY";
  int max_retries = 2;
};

class AgentError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Network failure while talking to the model endpoint.
class TransportError : public AgentError
{
public:
  using AgentError::AgentError;
};

/// Sends one chat-completions request body, returns the raw response body.
/// Throws TransportError on network failure.
using ChatTransport = std::function<std::string(const json& request)>;

inline std::string private_payoff_table(std::span<const Issue> task)
{
  std::ostringstream out;
  out << "Your private payoff table (option number: label = your points):\n";
  for (const auto& issue : task)
  {
    out << "- " << issue.spec.id << " (" << issue.spec.name << "):";
    for (std::size_t j = 0; j < kOptionCount; ++j)
    {
      out << (j ? "; " : " ") << j + 1 << ": " << issue.spec.option_labels[j]
          << " = " << issue.payoffs.agent[j];
    }
    out << "\n";
  }
  return out.str();
}

inline std::string transcript_text(
  std::span<const Turn> turns, const Offer& pending_human_offer)
{
  std::ostringstream out;
  out << "Negotiation so far:\n";
  for (const auto& turn : turns)
  {
    out << "Tenant (turn " << turn.turn_number << "):\n"
        << format_offer(turn.human_offer) << "\n";
    if (turn.agent_offer)
      out << "You:\n" << format_offer(*turn.agent_offer) << "\n";
  }
  out << "Tenant (current):\n" << format_offer(pending_human_offer) << "\n";
  return out.str();
}

inline json chat_request(
  const LlmClientConfig& config,
  std::span<const Issue> task,
  std::span<const Turn> turns,
  const Offer& pending_human_offer)
{
  std::string user = private_payoff_table(task) + "\n" +
                     transcript_text(turns, pending_human_offer) + "\n" +
                     config.user_prompt +
                     "\nEnd your reply with exactly one block:\n```offer\n"
                     "<issue id> = <option number 1-7>\n```\n"
                     "with one line per issue. Repeating the tenant's offer "
                     "accepts it.";
  return json{
    {"model", config.model},
    {"temperature", config.temperature},
    {"max_tokens", config.max_tokens},
    {"messages",
     json::array({json{{"role", "system"}, {"content", config.system_prompt}},
                  json{{"role", "user"}, {"content", user}}})}};
}

/// Pulls the assistant text from a chat-completions response body.
inline std::optional<std::string> reply_content(const std::string& body)
{
  const json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded())
    return std::nullopt;
  try
  {
    return doc.at("choices").at(0).at("message").at("content").get<std::string>();
  }
  catch (const json::exception&)
  {
    return std::nullopt;
  }
}

/// Landlord backed by an external chat model. Sees only its own payoff
/// column and the transcript.
class LlmAgent
{
public:
  LlmAgent(LlmClientConfig config, ChatTransport transport)
    : _config(std::move(config)), _transport(std::move(transport))
  {
    if (!_transport)
      throw std::invalid_argument("LLM agent needs a transport");
  }

  const LlmClientConfig& config() const { return _config; }

  /// Throws TransportError on network failure and AgentError once the
  /// model has produced max_retries + 1 replies without a valid offer.
  Offer counter_offer(
    std::span<const Issue> task,
    std::span<const Turn> turns,
    const Offer& pending_human_offer) const
  {
    std::set<IssueId> active;
    for (const auto& issue : task)
      active.insert(issue.spec.id);

    const json request = chat_request(_config, task, turns, pending_human_offer);
    std::string last_error;
    for (int attempt = 0; attempt <= _config.max_retries; ++attempt)
    {
      const std::string body = _transport(request);
      const auto content = reply_content(body);
      if (!content)
      {
        last_error = "response is not a chat completion";
        continue;
      }
      try
      {
        return parse_offer(*content, Role::agent, active);
      }
      catch (const OfferParseError& e)
      {
        last_error = e.what();
      }
    }
    throw AgentError(
      "no valid offer after " + std::to_string(_config.max_retries + 1) +
      " replies: " + last_error);
  }

private:
  LlmClientConfig _config;
  ChatTransport _transport;
};

} // namespace horizon
