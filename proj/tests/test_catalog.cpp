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

#include <set>

#include <catch_amalgamated.hpp>

#include "horizon/catalog.hpp"
#include "support/properties.hpp"

using namespace horizon;

TEST_CASE("utilities fixture joint payoffs and optimum")
{
  const Issue issue = utilities_fixture();
  const auto r = pareto_report(issue.payoffs);
  const OptionRow expected{100, 100, 110, 120, 130, 135, 130};
  CHECK(r.joint_payoffs == expected);
  CHECK(r.joint_optimum_index + 1 == 6);
  CHECK(r.joint_optimum_value == 135);
  CHECK(r.joint_payoffs[kMiddleOption] == 120);
  CHECK(r.joint_optimum_value - r.joint_payoffs[kMiddleOption] == 15);
  CHECK(r.joint_optimum_index != 0);
  CHECK(r.joint_optimum_index != kMaxOptionIndex);
  CHECK(issue.spec.tau_min == 55);
  CHECK(issue.spec.tau_max == 110);
}

TEST_CASE("frontier of a matrix with identical payoff pairs is every option")
{
  PayoffMatrix m{"flat", {}, {}};
  m.human.fill(10);
  m.agent.fill(20);
  CHECK(pareto_report(m).frontier_indices == std::vector<int>{0, 1, 2, 3, 4, 5, 6});
}

TEST_CASE("frontier excludes dominated options")
{
  PayoffMatrix m{"x", {10, 20, 20, 5, 0, 0, 0}, {10, 20, 10, 5, 0, 30, 0}};
  const auto r = pareto_report(m);
  CHECK(r.frontier_indices == std::vector<int>{1, 5});
  CHECK_FALSE(r.frontier_indices.empty());
}

TEST_CASE("shipped catalog passes anti-triviality validation")
{
  const TaskCatalog c = default_catalog();
  REQUIRE(c.issues.size() == 16);
  CHECK(validate_anti_triviality(c).empty());
  CHECK(c.find(kUtilitiesFixtureId) == utilities_fixture());
  std::set<IssueId> ids;
  for (const auto& issue : c.issues)
  {
    ids.insert(issue.spec.id);
    CHECK(issue.payoffs.issue_id == issue.spec.id);
    CHECK(pareto_report(issue.payoffs).frontier_indices.size() >= 1);
  }
  CHECK(ids.size() == 16);
}

TEST_CASE("sixteen copies of the utilities fixture violate the correlation rule")
{
  TaskCatalog c;
  for (int k = 0; k < 16; ++k)
  {
    Issue issue = utilities_fixture();
    issue.spec.id = issue.payoffs.issue_id = "copy" + std::to_string(k);
    c.issues.push_back(issue);
  }
  const auto v = validate_anti_triviality(c);
  CHECK(std::any_of(v.begin(), v.end(), [](const TrivialityViolation& x) {
    return x.rule == TrivialityRule::correlated_progressions;
  }));
  CHECK_THROWS_AS(require_nontrivial(c), std::invalid_argument);
}

TEST_CASE("joint optimum at the agent's maximum is flagged")
{
  TaskCatalog c = default_catalog();
  Issue& issue = c.issues.back();
  issue.payoffs.human = {60, 10, 12, 14, 16, 18, 20};
  issue.payoffs.agent = {90, 40, 35, 30, 25, 20, 15};
  const auto v = validate_anti_triviality(c);
  CHECK(std::any_of(v.begin(), v.end(), [](const TrivialityViolation& x) {
    return x.rule == TrivialityRule::optimum_at_party_max;
  }));
}

TEST_CASE("middle-option quota")
{
  TaskCatalog c = default_catalog();
  int middle = 0;
  for (const auto& issue : c.issues)
    middle += pareto_report(issue.payoffs).joint_optimum_index == kMiddleOption;
  CHECK(middle <= kMiddleOptimumQuota);

  // Force five middle optima with distinct progressions.
  for (int k = 0; k < 5; ++k)
  {
    Issue& issue = c.issues[static_cast<std::size_t>(k + 1)];
    issue.payoffs.human = {0, 10, 20, 50, 40, 30, 20};
    issue.payoffs.human[static_cast<std::size_t>(k % 3)] += 1 + k;
    issue.payoffs.agent = {10, 20, 30, 50, 40, 30, 60};
  }
  const auto v = validate_anti_triviality(c);
  CHECK(std::any_of(v.begin(), v.end(), [](const TrivialityViolation& x) {
    return x.rule == TrivialityRule::middle_optimum_quota;
  }));
}

TEST_CASE("rank correlation")
{
  CHECK(rank_correlation({1, 2, 3, 4, 5, 6, 7}, {10, 20, 30, 40, 50, 60, 70}) ==
        Catch::Approx(1.0));
  CHECK(rank_correlation({1, 2, 3, 4, 5, 6, 7}, {7, 6, 5, 4, 3, 2, 1}) ==
        Catch::Approx(-1.0));
}

TEST_CASE("sample_task")
{
  const TaskCatalog c = default_catalog();

  auto all = sample_task(c, 16, 99);
  std::set<IssueId> ids;
  for (const auto& issue : all)
    ids.insert(issue.spec.id);
  CHECK(ids.size() == 16);

  CHECK(sample_task(c, 7, 42) == sample_task(c, 7, 42));

  bool differ = false;
  for (std::uint64_t seed = 1; seed < 20 && !differ; ++seed)
    differ = sample_task(c, 3, seed) != sample_task(c, 3, seed + 1);
  CHECK(differ);

  for (int n = 1; n < 16; ++n)
  {
    const auto small = sample_task(c, n, 5);
    const auto large = sample_task(c, n + 1, 5);
    CHECK(std::equal(small.begin(), small.end(), large.begin()));
  }

  CHECK_THROWS_AS(sample_task(c, 0, 1), std::out_of_range);
  CHECK_THROWS_AS(sample_task(c, 17, 1), std::out_of_range);
  CHECK(canonical_dimensionality(7));
  CHECK_FALSE(canonical_dimensionality(2));
}

TEST_CASE("catalog file round-trip and shipped data file")
{
  const auto dir = props::temp_dir("catalog");
  const auto path = (dir / "c.json").string();
  save_catalog(default_catalog(), path);
  CHECK(load_catalog(path).issues == default_catalog().issues);

  const TaskCatalog shipped = load_catalog(std::string(HORIZON_SOURCE_DIR) + "/data/catalog.json");
  CHECK(shipped.issues == default_catalog().issues);
  std::filesystem::remove_all(dir);

  CHECK_THROWS(load_catalog((dir / "missing.json").string()));
}
