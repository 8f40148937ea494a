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

#include <catch_amalgamated.hpp>

#include "support/oracle.hpp"
#include "support/properties.hpp"

using namespace horizon;

TEST_CASE("oracle agrees on a hand-written sequence")
{
  const std::vector<oracle::Event> events{
    {0, true, 3, 0.0}, {1, true, 2, 0.0}, {0, false, 6, 0.4}, {0, true, 4, 0.0}};
  BeliefState s = init_beliefs(2);
  int turn = 1;
  for (const auto& e : events)
    s = bayesian_update(std::move(s),
      EvidenceEvent{std::to_string(e.issue), e.agent ? Role::agent : Role::human,
                    e.option, turn++, e.r});
  for (int issue = 0; issue < 2; ++issue)
  {
    const auto expected = oracle::evaluate(events, issue);
    for (int j = 0; j < 7; ++j)
      CHECK(s.issues[issue].pmf[j] == Catch::Approx(expected.pmf[j]).epsilon(1e-12));
    CHECK(s.issues[issue].agent_history == expected.history);
  }
}

TEST_CASE("oracle reproduces the first-proposal posterior")
{
  const auto r = oracle::evaluate({{0, true, 3, 0.0}}, 0);
  CHECK(r.pmf[3] == Catch::Approx(0.4));
  CHECK(r.pmf[0] == Catch::Approx(0.05));
  CHECK(r.has_zopa);
  CHECK(r.lo == 3);
  CHECK(r.hi == 3);
}

TEST_CASE("engine matches the oracle over every short history")
{
  const auto v = props::oracle_equivalence();
  INFO(v.detail);
  CHECK(v.pass);
  CHECK(v.cases > 1000);
}
