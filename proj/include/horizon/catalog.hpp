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
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "horizon/domain.hpp"

namespace horizon {

inline constexpr const char* kUtilitiesFixtureId = "utilities_included";

/// Pairwise human-progression rank correlation above this is a violation.
inline constexpr double kProgressionCorrelationLimit = 0.9;

/// At most this many issues may place their joint optimum on the middle option.
inline constexpr int kMiddleOptimumQuota = 4;

struct TaskCatalog
{
  std::vector<Issue> issues;

  const Issue& find(const IssueId& id) const
  {
    for (const auto& issue : issues)
      if (issue.spec.id == id)
        return issue;
    throw std::out_of_range("no issue '" + id + "' in catalog");
  }

  bool operator==(const TaskCatalog&) const = default;
};

/// Builds an issue with thresholds defaulted from the human column: tau_min is
/// the middle option's payoff and tau_max the column maximum.
inline Issue make_issue(
  IssueId id,
  std::string name,
  std::array<std::string, kOptionCount> labels,
  const OptionRow& human,
  const OptionRow& agent)
{
  Issue issue;
  issue.spec.id = id;
  issue.spec.name = std::move(name);
  issue.spec.option_labels = std::move(labels);
  issue.spec.xi = 1.0;
  issue.spec.tau_min = human[kMiddleOption];
  issue.spec.tau_max = *std::max_element(human.begin(), human.end());
  issue.payoffs.issue_id = std::move(id);
  issue.payoffs.human = human;
  issue.payoffs.agent = agent;
  return issue;
}

/// The "Utilities Included" payoff table.
inline Issue utilities_fixture()
{
  return make_issue(
    kUtilitiesFixtureId, "Utilities Included",
    {"None", "Internet only", "Internet + Water", "All except electric",
     "All utilities", "All utilities + cleaning", "All inclusive"},
    {5, 15, 30, 55, 80, 100, 110},
    {95, 85, 80, 65, 50, 35, 20});
}

/// Shipped 16-issue rental catalog. Everything except the utilities fixture
/// is authored data checked by validate_anti_triviality().
inline TaskCatalog default_catalog()
{
  TaskCatalog c;
  c.issues.push_back(utilities_fixture());
  c.issues.push_back(make_issue(
    "monthly_rent", "Monthly Rent",
    {"$2400", "$2350", "$2300", "$2250", "$2200", "$2150", "$2100"},
    {20, 10, 45, 70, 60, 100, 90}, {100, 95, 75, 65, 60, 30, 40}));
  c.issues.push_back(make_issue(
    "security_deposit", "Security Deposit",
    {"Half month", "One month", "One month, refundable early",
     "1.5 months", "Two months", "Two months + pet deposit",
     "Three months"},
    {95, 100, 60, 75, 40, 10, 25}, {20, 15, 75, 55, 75, 95, 85}));
  c.issues.push_back(make_issue(
    "lease_length", "Lease Length",
    {"3 months", "6 months", "9 months", "12 months", "18 months",
     "24 months", "36 months"},
    {40, 75, 90, 85, 60, 35, 20}, {85, 70, 50, 40, 65, 80, 95}));
  c.issues.push_back(make_issue(
    "pet_policy", "Pet Policy",
    {"No pets", "Fish only", "Cats only", "Small dogs", "Cats and dogs",
     "Any pet with fee", "Any pet, no fee"},
    {30, 15, 50, 45, 90, 85, 60}, {90, 95, 70, 65, 35, 55, 50}));
  c.issues.push_back(make_issue(
    "parking", "Parking",
    {"None", "Street permit", "Shared lot", "Assigned outdoor",
     "Covered spot", "Garage spot", "Two garage spots"},
    {60, 30, 15, 45, 70, 100, 85}, {25, 65, 90, 55, 55, 15, 30}));
  c.issues.push_back(make_issue(
    "maintenance_response", "Maintenance Response",
    {"Best effort", "Two weeks", "One week", "72 hours", "48 hours",
     "24 hours", "Same day"},
    {10, 45, 35, 80, 65, 95, 75}, {100, 70, 85, 40, 65, 15, 35}));
  c.issues.push_back(make_issue(
    "furnishing", "Furnishing",
    {"Unfurnished", "Appliances only", "Kitchen furnished",
     "Bedroom furnished", "Partially furnished", "Fully furnished",
     "Fully furnished + decor"},
    {85, 65, 95, 40, 55, 15, 30}, {30, 55, 20, 80, 70, 95, 85}));
  c.issues.push_back(make_issue(
    "move_in_date", "Move-in Date",
    {"Immediate", "1 week", "2 weeks", "1 month", "6 weeks", "2 months",
     "3 months"},
    {35, 85, 65, 50, 20, 10, 5}, {75, 40, 75, 70, 85, 90, 95}));
  c.issues.push_back(make_issue(
    "early_termination", "Early Termination",
    {"Not allowed", "Full remaining rent", "Three months rent",
     "Two months rent", "One month rent", "Find replacement tenant",
     "30 days notice"},
    {15, 5, 40, 65, 100, 25, 80}, {95, 100, 80, 85, 30, 50, 35}));
  c.issues.push_back(make_issue(
    "rent_increase_cap", "Rent Increase Cap",
    {"Frozen", "1% per year", "2% per year", "3% per year", "5% per year",
     "CPI-linked", "Uncapped"},
    {70, 100, 45, 55, 20, 35, 10}, {40, 15, 80, 60, 95, 75, 100}));
  c.issues.push_back(make_issue(
    "subletting", "Subletting",
    {"Forbidden", "Family only", "With approval", "Summer only",
     "Anytime with notice", "Partial rooms only", "Unrestricted"},
    {50, 55, 85, 20, 95, 65, 40}, {60, 65, 40, 90, 10, 55, 70}));
  c.issues.push_back(make_issue(
    "renovations", "Renovations",
    {"None", "Paint touch-up", "New flooring", "Kitchen refresh",
     "Bathroom refresh", "Kitchen + bathroom", "Full renovation"},
    {25, 40, 55, 100, 85, 65, 75}, {100, 85, 75, 35, 60, 70, 55}));
  c.issues.push_back(make_issue(
    "laundry", "Laundry",
    {"None", "Shared coin-op", "Shared free", "Hookups only",
     "In-unit washer", "In-unit washer + dryer", "Laundry service"},
    {75, 95, 85, 30, 40, 10, 20}, {15, 20, 40, 75, 80, 85, 90}));
  c.issues.push_back(make_issue(
    "payment_schedule", "Payment Schedule",
    {"Annual upfront", "Semi-annual", "Quarterly", "Monthly, 1st",
     "Monthly, flexible day", "Bi-weekly", "Monthly with grace period"},
    {10, 25, 20, 40, 95, 75, 60}, {95, 85, 90, 75, 20, 50, 60}));
  c.issues.push_back(make_issue(
    "renters_insurance", "Renter's Insurance",
    {"Tenant pays, high cover", "Tenant pays, basic", "Split 75/25",
     "Split 50/50", "Split 25/75", "Landlord basic", "Landlord full"},
    {80, 65, 45, 30, 40, 60, 100}, {20, 40, 70, 85, 80, 55, 10}));
  return c;
}

//==============================================================================
struct ParetoReport
{
  IssueId issue_id;
  OptionRow joint_payoffs{};
  int joint_optimum_index = 0;  // 0-based
  double joint_optimum_value = 0.0;
  std::vector<int> frontier_indices;  // sorted, 0-based
};

inline ParetoReport pareto_report(const PayoffMatrix& m)
{
  ParetoReport r;
  r.issue_id = m.issue_id;
  for (std::size_t j = 0; j < kOptionCount; ++j)
    r.joint_payoffs[j] = m.human[j] + m.agent[j];

  const auto best =
    std::max_element(r.joint_payoffs.begin(), r.joint_payoffs.end());
  r.joint_optimum_index = static_cast<int>(best - r.joint_payoffs.begin());
  r.joint_optimum_value = *best;

  for (std::size_t j = 0; j < kOptionCount; ++j)
  {
    bool dominated = false;
    for (std::size_t k = 0; k < kOptionCount && !dominated; ++k)
    {
      dominated = m.human[k] >= m.human[j] && m.agent[k] >= m.agent[j] &&
                  (m.human[k] > m.human[j] || m.agent[k] > m.agent[j]);
    }
    if (!dominated)
      r.frontier_indices.push_back(static_cast<int>(j));
  }
  return r;
}

//==============================================================================
enum class TrivialityRule
{
  optimum_at_party_max,
  correlated_progressions,
  middle_optimum_quota,
  catalog_size
};

struct TrivialityViolation
{
  TrivialityRule rule;
  std::string detail;
};

namespace detail {

/// Fractional (average) ranks, 1-based.
inline std::array<double, kOptionCount> average_ranks(const OptionRow& v)
{
  std::array<std::size_t, kOptionCount> order{};
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
    [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });

  std::array<double, kOptionCount> ranks{};
  std::size_t i = 0;
  while (i < kOptionCount)
  {
    std::size_t k = i;
    while (k + 1 < kOptionCount && v[order[k + 1]] == v[order[i]])
      ++k;
    const double rank = (static_cast<double>(i + k) / 2.0) + 1.0;
    for (std::size_t m = i; m <= k; ++m)
      ranks[order[m]] = rank;
    i = k + 1;
  }
  return ranks;
}

} // namespace detail

/// Spearman rank correlation (Pearson over average ranks).
inline double rank_correlation(const OptionRow& a, const OptionRow& b)
{
  const auto ra = detail::average_ranks(a);
  const auto rb = detail::average_ranks(b);
  const double n = static_cast<double>(kOptionCount);
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t j = 0; j < kOptionCount; ++j)
  {
    cov += (ra[j] - ma) * (rb[j] - mb);
    va += (ra[j] - ma) * (ra[j] - ma);
    vb += (rb[j] - mb) * (rb[j] - mb);
  }
  if (va == 0.0 || vb == 0.0)
    return va == vb ? 1.0 : 0.0;
  return cov / std::sqrt(va * vb);
}

inline std::vector<TrivialityViolation> validate_anti_triviality(
  const TaskCatalog& catalog)
{
  std::vector<TrivialityViolation> out;
  if (catalog.issues.size() != static_cast<std::size_t>(kMaxDimensionality))
  {
    out.push_back({TrivialityRule::catalog_size,
      "catalog has " + std::to_string(catalog.issues.size()) +
        " issues, expected 16"});
  }

  int middle = 0;
  for (const auto& issue : catalog.issues)
  {
    const auto& m = issue.payoffs;
    const auto report = pareto_report(m);
    const double human_max = *std::max_element(m.human.begin(), m.human.end());
    const double agent_max = *std::max_element(m.agent.begin(), m.agent.end());
    for (std::size_t j = 0; j < kOptionCount; ++j)
    {
      if (report.joint_payoffs[j] != report.joint_optimum_value)
        continue;
      if (m.human[j] == human_max || m.agent[j] == agent_max)
      {
        out.push_back({TrivialityRule::optimum_at_party_max,
          issue.spec.id + ": joint optimum at option " +
            std::to_string(j + 1) + " is a party's individual maximum"});
        break;
      }
    }
    if (report.joint_optimum_index == kMiddleOption)
      ++middle;
  }

  for (std::size_t a = 0; a < catalog.issues.size(); ++a)
  {
    for (std::size_t b = a + 1; b < catalog.issues.size(); ++b)
    {
      const double rho = rank_correlation(
        catalog.issues[a].payoffs.human, catalog.issues[b].payoffs.human);
      if (rho > kProgressionCorrelationLimit)
      {
        std::ostringstream msg;
        msg << catalog.issues[a].spec.id << " vs "
            << catalog.issues[b].spec.id << ": rank correlation " << rho;
        out.push_back({TrivialityRule::correlated_progressions, msg.str()});
      }
    }
  }

  if (middle > kMiddleOptimumQuota)
  {
    out.push_back({TrivialityRule::middle_optimum_quota,
      std::to_string(middle) + " issues have the joint optimum at the middle "
                               "option (quota " +
        std::to_string(kMiddleOptimumQuota) + ")"});
  }
  return out;
}

/// Throws std::invalid_argument listing every violation.
inline void require_nontrivial(const TaskCatalog& catalog)
{
  const auto violations = validate_anti_triviality(catalog);
  if (violations.empty())
    return;
  std::string msg = "catalog violates anti-triviality rules:";
  for (const auto& v : violations)
    msg += "\n  " + v.detail;
  throw std::invalid_argument(msg);
}

//==============================================================================
/// Picks n distinct issues. The order is a seeded permutation of the catalog,
/// so for a fixed seed the sample for n is a prefix of the sample for n + 1.
inline std::vector<Issue> sample_task(
  const TaskCatalog& catalog, int n, std::uint64_t seed)
{
  if (n < kMinDimensionality || n > kMaxDimensionality ||
      n > static_cast<int>(catalog.issues.size()))
  {
    throw std::out_of_range(
      "dimensionality " + std::to_string(n) + " outside 1.." +
      std::to_string(std::min<std::size_t>(
        kMaxDimensionality, catalog.issues.size())));
  }

  std::vector<std::size_t> order(catalog.issues.size());
  std::iota(order.begin(), order.end(), 0);
  // Fisher-Yates over raw engine output; std::shuffle is not portable.
  std::mt19937_64 rng(seed);
  for (std::size_t i = order.size() - 1; i > 0; --i)
    std::swap(order[i], order[rng() % (i + 1)]);

  std::vector<Issue> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k)
    out.push_back(catalog.issues[order[static_cast<std::size_t>(k)]]);
  return out;
}

inline bool canonical_dimensionality(int n)
{
  return n == 1 || n == 3 || n == 5 || n == 7;
}

//==============================================================================
inline void to_json(json& j, const TaskCatalog& c)
{
  j = json{{"format", "horizon-catalog"}, {"version", 1}, {"issues", c.issues}};
}

inline void from_json(const json& j, TaskCatalog& c)
{
  if (j.value("format", std::string{}) != "horizon-catalog")
    throw std::runtime_error("not a horizon catalog document");
  j.at("issues").get_to(c.issues);
}

inline TaskCatalog load_catalog(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open catalog '" + path + "'");
  TaskCatalog c = json::parse(in).get<TaskCatalog>();
  if (c.issues.empty())
    throw std::runtime_error("catalog '" + path + "' has no issues");
  return c;
}

inline void save_catalog(const TaskCatalog& catalog, const std::string& path)
{
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("cannot write catalog '" + path + "'");
  out << json(catalog).dump(2) << '\n';
}

} // namespace horizon
