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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "horizon/domain.hpp"

/// \file
/// Bayesian opponent model behind the Negotiation Horizon Grid.
///
/// For every issue the engine keeps a probability mass function over the
/// seven options describing where the agent is willing to settle. Each
/// proposal multiplies the prior by four factors and renormalizes:
///
///   posterior(j) ~ likelihood(j) * zopa_filter(j) * prior(j) * weight
///
/// The likelihood rewards the options the agent has just been proposing and
/// their neighbours, the ZOPA filter damps options outside the band the agent
/// has stayed within so far, and the weight expresses how much the proposer's
/// behaviour is trusted. The posterior is then mapped to green intensities
/// for display.

namespace horizon {

// Published model constants.
inline constexpr double kDirectLikelihood = 0.8;
inline constexpr double kAdjacentLikelihood = 0.4;
inline constexpr double kDistantLikelihood = 0.1;

/// Variance that maps to zero confidence: (6 - 0)^2 / 12.
inline constexpr double kVarianceReference = 3.0;

/// Slope (option indices per turn) that maps to zero temporal consistency.
inline constexpr double kSlopeReference = 1.0;

/// Agent proposals from this many most recent turns count as "direct".
inline constexpr std::size_t kRecentProposalWindow = 3;

inline constexpr double kProposalShare = 0.6;
inline constexpr double kTemporalShare = 0.4;

inline constexpr double kAgentBaseWeight = 0.7;
inline constexpr double kHumanBaseWeight = 0.3;

inline constexpr double kHighIntensityCap = 0.6;
inline constexpr double kHighIntensityGain = 2.0;
inline constexpr double kLowIntensityCap = 0.25;
inline constexpr double kLowIntensityGain = 0.4;

/// Tunable copy of the constants above. Defaults reproduce the published
/// model; tests perturb single fields.
struct ModelParameters
{
  double direct_likelihood = kDirectLikelihood;
  double adjacent_likelihood = kAdjacentLikelihood;
  double distant_likelihood = kDistantLikelihood;
  double variance_reference = kVarianceReference;
  double slope_reference = kSlopeReference;
  std::size_t recent_window = kRecentProposalWindow;
  double proposal_share = kProposalShare;
  double temporal_share = kTemporalShare;
  double agent_base_weight = kAgentBaseWeight;
  double human_base_weight = kHumanBaseWeight;
  double high_intensity_cap = kHighIntensityCap;
  double high_intensity_gain = kHighIntensityGain;
  double low_intensity_cap = kLowIntensityCap;
  double low_intensity_gain = kLowIntensityGain;
};

//==============================================================================
/// Closed interval of 0-based option indices.
struct ZopaRange
{
  int lower = 0;
  int upper = kMaxOptionIndex;

  bool contains(int j) const { return j >= lower && j <= upper; }
  int width() const { return upper - lower + 1; }

  bool operator==(const ZopaRange&) const = default;
};

struct ConsistencyScores
{
  double c_proposal = 1.0;
  double c_temporal = 1.0;
  double s_consistency = 1.0;
};

struct IssueBelief
{
  IssueId issue_id;
  OptionRow pmf{};
  std::vector<int> agent_history;
  std::optional<ZopaRange> zopa;
  double boundary_confidence = 0.0;
  double c_proposal = 0.0;
  double c_temporal = 0.0;
  double s_consistency = 0.0;
  int degenerate_updates = 0;

  bool operator==(const IssueBelief&) const = default;
};

struct BeliefState
{
  std::vector<IssueBelief> issues;

  const IssueBelief& at(const IssueId& id) const
  {
    for (const auto& b : issues)
      if (b.issue_id == id)
        return b;
    throw std::out_of_range("no belief for issue '" + id + "'");
  }

  IssueBelief& at(const IssueId& id)
  {
    return const_cast<IssueBelief&>(std::as_const(*this).at(id));
  }

  bool operator==(const BeliefState&) const = default;
};

struct EvidenceEvent
{
  IssueId issue_id;
  Role proposer = Role::agent;
  int proposed = 0;  // 0-based
  int turn_number = 1;
  double r_concession = 0.0;  // human events only
};

//==============================================================================
inline OptionRow uniform_pmf()
{
  OptionRow p;
  p.fill(1.0 / static_cast<double>(kOptionCount));
  return p;
}

inline BeliefState init_beliefs(std::span<const IssueId> issue_ids)
{
  if (issue_ids.empty())
    throw std::invalid_argument("beliefs need at least one issue");
  BeliefState state;
  state.issues.reserve(issue_ids.size());
  for (const auto& id : issue_ids)
  {
    IssueBelief b;
    b.issue_id = id;
    b.pmf = uniform_pmf();
    state.issues.push_back(std::move(b));
  }
  return state;
}

/// Convenience overload: issues named "0".."n-1".
inline BeliefState init_beliefs(int n)
{
  if (n < 1)
    throw std::invalid_argument("beliefs need at least one issue");
  std::vector<IssueId> ids;
  for (int i = 0; i < n; ++i)
    ids.push_back(std::to_string(i));
  return init_beliefs(ids);
}

//==============================================================================
inline double likelihood(
  int proposed, int j, double consistency, const ModelParameters& params = {})
{
  if (j == proposed)
    return params.direct_likelihood * consistency;
  if (std::abs(j - proposed) <= 1)
    return params.adjacent_likelihood;
  return params.distant_likelihood;
}

/// Likelihood against a set of recent proposals: direct if j is any of them,
/// adjacent if j neighbours any of them.
inline double likelihood(
  std::span<const int> recent,
  int j,
  double consistency,
  const ModelParameters& params = {})
{
  bool adjacent = false;
  for (int k : recent)
  {
    if (k == j)
      return params.direct_likelihood * consistency;
    adjacent = adjacent || std::abs(j - k) <= 1;
  }
  return adjacent ? params.adjacent_likelihood : params.distant_likelihood;
}

inline std::optional<ZopaRange> zopa_bounds(std::span<const int> history)
{
  if (history.empty())
    return std::nullopt;
  const auto [lo, hi] = std::minmax_element(history.begin(), history.end());
  return ZopaRange{std::max(0, *lo), std::min(kMaxOptionIndex, *hi)};
}

inline double population_variance(std::span<const int> values)
{
  if (values.empty())
    return 0.0;
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (int v : values)
    mean += v;
  mean /= n;
  double ss = 0.0;
  for (int v : values)
    ss += (v - mean) * (v - mean);
  return ss / n;
}

/// Least-squares slope of value against position (1, 2, ...).
inline double temporal_slope(std::span<const int> values)
{
  const std::size_t n = values.size();
  if (n < 2)
    return 0.0;
  const double mean_x = (static_cast<double>(n) + 1.0) / 2.0;
  double mean_y = 0.0;
  for (int v : values)
    mean_y += v;
  mean_y /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < n; ++k)
  {
    const double dx = static_cast<double>(k + 1) - mean_x;
    sxy += dx * (values[k] - mean_y);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

/// 1 - normalized proposal variance. Empty history carries no confidence.
inline double boundary_confidence(
  std::span<const int> history, const ModelParameters& params = {})
{
  if (history.empty())
    return 0.0;
  return 1.0 -
         std::min(1.0, population_variance(history) / params.variance_reference);
}

inline ConsistencyScores consistency_score(
  std::span<const int> history, const ModelParameters& params = {})
{
  if (history.size() < 2)
    return {};
  ConsistencyScores s;
  s.c_proposal = 1.0 - std::min(1.0,
    population_variance(history) / params.variance_reference);
  s.c_temporal = std::clamp(
    1.0 - std::abs(temporal_slope(history)) / params.slope_reference, 0.0, 1.0);
  s.s_consistency =
    params.proposal_share * s.c_proposal + params.temporal_share * s.c_temporal;
  return s;
}

inline double adaptive_weight(
  Role proposer,
  double s_consistency,
  double r_concession,
  const ModelParameters& params = {})
{
  if (proposer == Role::agent)
    return std::min(1.0, params.agent_base_weight * (1.0 + s_consistency));
  return std::min(
    1.0, params.human_base_weight * (1.0 + std::abs(r_concession)));
}

inline double zopa_filter(
  const std::optional<ZopaRange>& zopa, double confidence, int j)
{
  if (!zopa || zopa->contains(j))
    return 1.0;
  return 1.0 - confidence;
}

/// Distinct options among the last `window` entries.
inline std::vector<int> recent_proposals(
  std::span<const int> history, std::size_t window = kRecentProposalWindow)
{
  const std::size_t first =
    history.size() > window ? history.size() - window : 0;
  std::vector<int> out(history.begin() + static_cast<std::ptrdiff_t>(first),
    history.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

//==============================================================================
struct UpdateDiagnostics
{
  double unnormalized_sum = 0.0;
  double eta = 0.0;
  double weight = 0.0;
  bool degenerate = false;
};

/// Applies one piece of evidence to its issue; other issues are untouched.
///
/// The ZOPA filter uses the limits and boundary confidence established by the
/// agent's earlier proposals, so a proposal is judged against what was known
/// before it. Consistency, and with it the weight, includes the proposal.
/// The weight doubles as the likelihood's C factor. Stored limits and scores
/// are refreshed from the extended history afterwards.
///
/// If every option ends with zero mass the pmf falls back to uniform and
/// the degenerate flag is raised.
inline BeliefState bayesian_update(
  BeliefState state,
  const EvidenceEvent& ev,
  UpdateDiagnostics* diagnostics = nullptr,
  const ModelParameters& params = {})
{
  if (!valid_option(ev.proposed))
    throw std::invalid_argument(
      "proposed option " + std::to_string(ev.proposed) + " out of range");
  if (!std::isfinite(ev.r_concession))
    throw std::invalid_argument("r_concession must be finite");

  IssueBelief& b = state.at(ev.issue_id);

  const std::optional<ZopaRange> zopa = zopa_bounds(b.agent_history);
  const double confidence = boundary_confidence(b.agent_history, params);

  double weight = 0.0;
  std::vector<int> recent;
  if (ev.proposer == Role::agent)
  {
    b.agent_history.push_back(ev.proposed);
    const auto scores = consistency_score(b.agent_history, params);
    weight = adaptive_weight(Role::agent, scores.s_consistency, 0.0, params);
    recent = recent_proposals(b.agent_history, params.recent_window);
  }
  else
  {
    weight = adaptive_weight(Role::human, 0.0, ev.r_concession, params);
    recent = {ev.proposed};
  }

  OptionRow next{};
  double sum = 0.0;
  for (int j = 0; j <= kMaxOptionIndex; ++j)
  {
    next[j] = likelihood(recent, j, weight, params) *
              zopa_filter(zopa, confidence, j) * b.pmf[j] * weight;
    sum += next[j];
  }

  const bool degenerate = !(sum > 0.0) || !std::isfinite(sum);
  if (degenerate)
  {
    b.pmf = uniform_pmf();
    ++b.degenerate_updates;
  }
  else
  {
    for (auto& p : next)
      p /= sum;
    b.pmf = next;
  }

  if (ev.proposer == Role::agent)
  {
    b.zopa = zopa_bounds(b.agent_history);
    b.boundary_confidence = boundary_confidence(b.agent_history, params);
    const auto scores = consistency_score(b.agent_history, params);
    b.c_proposal = scores.c_proposal;
    b.c_temporal = scores.c_temporal;
    b.s_consistency = scores.s_consistency;
  }

  if (diagnostics)
  {
    diagnostics->unnormalized_sum = sum;
    diagnostics->eta = degenerate ? 0.0 : 1.0 / sum;
    diagnostics->weight = weight;
    diagnostics->degenerate = degenerate;
  }
  return state;
}

//==============================================================================
enum class CellTier
{
  none,
  acceptable,  // low-intensity green
  promising    // high-intensity green, inside the ZOPA
};

struct IntensityGrid
{
  std::vector<IssueId> issue_ids;
  std::vector<OptionRow> intensity;
  std::vector<std::array<CellTier, kOptionCount>> tiers;
  std::vector<std::optional<ZopaRange>> zopa_ranges;

  std::size_t rows() const { return issue_ids.size(); }

  bool operator==(const IntensityGrid&) const = default;
};

inline double high_intensity(
  double p,
  double boundary_confidence,
  double s_consistency,
  double xi,
  const ModelParameters& params = {})
{
  return std::min(params.high_intensity_cap,
    p * params.high_intensity_gain * std::sqrt(boundary_confidence) *
      (1.0 + s_consistency) * xi);
}

inline double low_intensity(double p, const ModelParameters& params = {})
{
  return std::min(params.low_intensity_cap, p * params.low_intensity_gain);
}

/// Maps beliefs to per-cell green intensities. `views` gives, per issue, the
/// human's thresholds and payoffs; rows follow the order of `views`.
inline IntensityGrid intensity_grid(
  const BeliefState& state,
  std::span<const HumanIssueView> views,
  const ModelParameters& params = {})
{
  IntensityGrid grid;
  grid.issue_ids.reserve(views.size());
  for (const auto& view : views)
  {
    const IssueBelief& b = state.at(view.spec.id);
    OptionRow row{};
    std::array<CellTier, kOptionCount> tiers{};
    for (int j = 0; j <= kMaxOptionIndex; ++j)
    {
      const double u = view.human_payoffs[j];
      const bool in_zopa = b.zopa && b.zopa->contains(j);
      if (in_zopa && u >= view.spec.tau_min)
      {
        tiers[j] = CellTier::promising;
        row[j] = high_intensity(b.pmf[j], b.boundary_confidence,
          b.s_consistency, view.spec.xi, params);
      }
      else if (u >= view.spec.tau_min && u <= view.spec.tau_max)
      {
        tiers[j] = CellTier::acceptable;
        row[j] = low_intensity(b.pmf[j], params);
      }
    }
    grid.issue_ids.push_back(view.spec.id);
    grid.intensity.push_back(row);
    grid.tiers.push_back(tiers);
    grid.zopa_ranges.push_back(b.zopa);
  }
  return grid;
}

//==============================================================================
inline void to_json(json& j, const ZopaRange& z)
{
  // 1-based on the wire
  j = json::array({z.lower + 1, z.upper + 1});
}

inline void from_json(const json& j, ZopaRange& z)
{
  z.lower = j.at(0).get<int>() - 1;
  z.upper = j.at(1).get<int>() - 1;
}

inline void to_json(json& j, const IssueBelief& b)
{
  std::vector<int> history;
  for (int h : b.agent_history)
    history.push_back(h + 1);
  j = json{{"issue_id", b.issue_id},
           {"pmf", b.pmf},
           {"agent_history", history},
           {"boundary_confidence", b.boundary_confidence},
           {"c_proposal", b.c_proposal},
           {"c_temporal", b.c_temporal},
           {"s_consistency", b.s_consistency},
           {"degenerate_updates", b.degenerate_updates}};
  j["zopa"] = b.zopa ? json(*b.zopa) : json(nullptr);
}

inline void from_json(const json& j, IssueBelief& b)
{
  j.at("issue_id").get_to(b.issue_id);
  j.at("pmf").get_to(b.pmf);
  b.agent_history.clear();
  for (int h : j.at("agent_history").get<std::vector<int>>())
    b.agent_history.push_back(h - 1);
  j.at("boundary_confidence").get_to(b.boundary_confidence);
  j.at("c_proposal").get_to(b.c_proposal);
  j.at("c_temporal").get_to(b.c_temporal);
  j.at("s_consistency").get_to(b.s_consistency);
  b.degenerate_updates = j.value("degenerate_updates", 0);
  if (j.contains("zopa") && !j.at("zopa").is_null())
    b.zopa = j.at("zopa").get<ZopaRange>();
  else
    b.zopa.reset();
}

inline void to_json(json& j, const BeliefState& s)
{
  j = json{{"issues", s.issues}};
}

inline void from_json(const json& j, BeliefState& s)
{
  j.at("issues").get_to(s.issues);
}

inline const char* to_string(CellTier tier)
{
  switch (tier)
  {
    case CellTier::none: return "none";
    case CellTier::acceptable: return "acceptable";
    case CellTier::promising: return "promising";
  }
  return "none";
}

inline CellTier cell_tier_from_string(const std::string& text)
{
  if (text == "promising")
    return CellTier::promising;
  if (text == "acceptable")
    return CellTier::acceptable;
  if (text == "none")
    return CellTier::none;
  throw std::invalid_argument("unknown cell tier '" + text + "'");
}

inline void to_json(json& j, const IntensityGrid& g)
{
  j = json::array();
  for (std::size_t i = 0; i < g.rows(); ++i)
  {
    std::vector<std::string> tiers;
    for (auto t : g.tiers[i])
      tiers.emplace_back(to_string(t));
    json row{{"issue_id", g.issue_ids[i]},
             {"intensity", g.intensity[i]},
             {"tiers", tiers}};
    row["zopa_range"] =
      g.zopa_ranges[i] ? json(*g.zopa_ranges[i]) : json(nullptr);
    j.push_back(std::move(row));
  }
}

inline void from_json(const json& j, IntensityGrid& g)
{
  g = IntensityGrid{};
  for (const auto& row : j)
  {
    g.issue_ids.push_back(row.at("issue_id").get<std::string>());
    g.intensity.push_back(row.at("intensity").get<OptionRow>());
    std::array<CellTier, kOptionCount> tiers{};
    const auto names = row.at("tiers").get<std::vector<std::string>>();
    for (std::size_t k = 0; k < kOptionCount && k < names.size(); ++k)
      tiers[k] = cell_tier_from_string(names[k]);
    g.tiers.push_back(tiers);
    if (row.contains("zopa_range") && !row.at("zopa_range").is_null())
      g.zopa_ranges.push_back(row.at("zopa_range").get<ZopaRange>());
    else
      g.zopa_ranges.push_back(std::nullopt);
  }
}

} // namespace horizon
