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

#include <cmath>
#include <sstream>

#include <catch_amalgamated.hpp>

#include "horizon/catalog.hpp"
#include "horizon/metrics.hpp"
#include "support/properties.hpp"

using namespace horizon;
using Catch::Approx;

namespace {

Issue fixture_copy(const std::string& id)
{
  Issue issue = utilities_fixture();
  issue.spec.id = issue.payoffs.issue_id = id;
  return issue;
}

/// Log over the given issues where the human proposes `human[k]` on every
/// issue at turn k and the agent always counters with option 0.
SessionLog log_with(const std::vector<Issue>& task, const std::vector<int>& human)
{
  SessionLog log;
  log.session_id = "m";
  log.task = task;
  Millis t = 0;
  for (std::size_t k = 0; k < human.size(); ++k)
  {
    Turn turn;
    turn.turn_number = static_cast<int>(k + 1);
    turn.human_offer.proposer = Role::human;
    Offer counter{Role::agent, {}, {}};
    for (const auto& issue : task)
    {
      turn.human_offer.selections[issue.spec.id] = human[k];
      counter.selections[issue.spec.id] = 0;
    }
    turn.agent_offer = counter;
    turn.timing = {t, t + 500, t + 1000};
    t += 2000;
    log.turns.push_back(turn);
  }
  log.outcome = Outcome{OutcomeKind::timeout, {}, t, {}};
  return log;
}

std::vector<int> ints(std::initializer_list<int> v) { return v; }

} // namespace

TEST_CASE("shannon entropy")
{
  CHECK(shannon_entropy(ints({3, 3, 3, 3})) == 0.0);
  CHECK(shannon_entropy(ints({0, 1, 2, 3, 4, 5, 6})) == Approx(std::log2(7.0)));
  CHECK(shannon_entropy(ints({3, 4, 3, 4, 4})) == Approx(0.971).margin(1e-3));
  CHECK(shannon_entropy(std::vector<int>{}) == 0.0);
}

TEST_CASE("sequence entropy averages over issues")
{
  const auto log = log_with({fixture_copy("a"), fixture_copy("b")}, {3, 4, 3, 4, 4});
  CHECK(sequence_entropy(log) == Approx(0.971).margin(1e-3));
}

TEST_CASE("concessions")
{
  const auto log = log_with({utilities_fixture()}, {6, 5});
  const auto c = concession_stats(log, Role::human);
  CHECK(c.count == 1);
  CHECK(c.avg_magnitude == Approx(10.0));
  CHECK_FALSE(c.empty);

  const auto none = concession_stats(log_with({utilities_fixture()}, {3}), Role::human);
  CHECK(none.empty);
  CHECK(none.avg_magnitude == 0.0);

  const auto raise = concession_stats(log_with({utilities_fixture()}, {2, 6}), Role::human);
  CHECK(raise.empty);
  CHECK(raise.per_turn == std::vector<double>{0.0});
}

TEST_CASE("backtracking")
{
  CHECK(backtracking_count(log_with({utilities_fixture()}, {1, 2, 1})) == 1);
  CHECK(backtracking_count(log_with({utilities_fixture()}, {1, 2, 3})) == 0);
  CHECK(backtracking_count(log_with({utilities_fixture()}, {1, 1, 1})) == 0);
  CHECK(backtracking_count(log_with({utilities_fixture()}, {1, 2, 1, 2, 1})) == 3);
}

TEST_CASE("pareto proximity")
{
  auto log = log_with({utilities_fixture()}, {5});
  log.outcome = Outcome{OutcomeKind::agreement, {{kUtilitiesFixtureId, 5}}, 1000, {}};
  CHECK(compute_metrics(log).pareto_proximity == Approx(0.0));

  log.outcome->selections[kUtilitiesFixtureId] = 3;
  CHECK(compute_metrics(log).pareto_proximity == Approx(15.0));

  auto two = log_with({fixture_copy("a"), fixture_copy("b")}, {3});
  two.outcome = Outcome{OutcomeKind::agreement, {{"a", 3}, {"b", 4}}, 1000, {}};
  CHECK(compute_metrics(two).pareto_proximity == Approx(10.0));
  CHECK(compute_metrics(two).joint_payoff == Approx(120.0 + 130.0));

  auto timeout = log_with({utilities_fixture()}, {3});
  CHECK_FALSE(compute_metrics(timeout).pareto_proximity.has_value());
  CHECK(compute_metrics(timeout).total_human_payoff_pct == 0.0);
}

TEST_CASE("payoff percentage")
{
  auto log = log_with({utilities_fixture()}, {6});
  log.outcome = Outcome{OutcomeKind::agreement, {{kUtilitiesFixtureId, 6}}, 1000, {}};
  CHECK(compute_metrics(log).total_human_payoff_pct == Approx(100.0));
  log.outcome->selections[kUtilitiesFixtureId] = 4;
  CHECK(compute_metrics(log).total_human_payoff_pct == Approx(80.0 / 110.0 * 100.0));
}

TEST_CASE("timing")
{
  auto log = log_with({utilities_fixture()}, {1, 2});
  log.turns[0].timing = {0, 0, 0};
  log.turns[1].timing = {1000, 4000, 5000};
  log.outcome->decided_at = 5000;
  auto t = timing_stats(log);
  CHECK(t.avg_first_keystroke_s == Approx(3.0));
  CHECK(t.chat_duration_s == Approx(5.0));

  log.outcome->decided_at = 600000;
  CHECK(timing_stats(log).chat_duration_s == Approx(600.0));

  auto three = log_with({utilities_fixture()}, {1, 2, 3, 4});
  three.turns[1].timing = {2000, 4000, 4500};
  three.turns[2].timing = {5000, 9000, 9500};
  three.turns[3].timing = {10000, 16000, 16500};
  CHECK(timing_stats(three).avg_first_keystroke_s == Approx(4.0));

  CHECK_FALSE(timing_stats(log_with({utilities_fixture()}, {1})).avg_first_keystroke_s);
}

TEST_CASE("entropy invariants over generated logs")
{
  const auto v = props::entropy_properties(1000);
  INFO(v.detail);
  CHECK(v.pass);
}

TEST_CASE("metrics export schema")
{
  auto log = log_with({fixture_copy("a"), fixture_copy("b")}, {6, 5, 4});
  log.outcome = Outcome{OutcomeKind::agreement, {{"a", 4}, {"b", 4}}, 6000, {}};
  const auto report = compute_metrics(log);
  const std::string header = metrics_header();
  const std::string row = metrics_row(report, SessionMetadata{7, "baseline", "scripted", "p"});
  auto count = [](const std::string& s) { return std::count(s.begin(), s.end(), ','); };
  CHECK(count(header) == static_cast<long>(metrics_columns().size()) - 1);
  CHECK(count(row) == count(header));
  CHECK(row.rfind("m,7,2,baseline,scripted,p,agreement,", 0) == 0);

  const json j = report;
  CHECK(j.get<MetricsReport>() == report);
  CHECK(metrics_header('\t').find('\t') != std::string::npos);
}
