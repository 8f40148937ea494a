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

// Straight-line reference for the belief model. Recomputes a posterior from
// the full event list every time, shares no code with the engine, and keeps
// its own copy of every constant.

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <vector>

namespace oracle {

struct Event
{
  int issue = 0;
  bool agent = true;
  int option = 0;  // 0-based
  double r = 0.0;  // human events
};

struct IssueResult
{
  std::array<double, 7> pmf{};
  std::vector<int> history;
  bool has_zopa = false;
  int lo = 0, hi = 6;
  double confidence = 0.0;
  int degenerate = 0;
};

inline double pop_var(const std::vector<int>& h)
{
  if (h.empty())
    return 0.0;
  double m = 0.0;
  for (int v : h)
    m += v;
  m /= static_cast<double>(h.size());
  double s = 0.0;
  for (int v : h)
    s += (v - m) * (v - m);
  return s / static_cast<double>(h.size());
}

inline double slope(const std::vector<int>& h)
{
  const double n = static_cast<double>(h.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < h.size(); ++k)
  {
    const double x = static_cast<double>(k + 1);
    sx += x;
    sy += h[k];
    sxx += x * x;
    sxy += x * h[k];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline double confidence(const std::vector<int>& h)
{
  if (h.empty())
    return 0.0;
  return 1.0 - std::min(1.0, pop_var(h) / 3.0);
}

inline double consistency(const std::vector<int>& h)
{
  if (h.size() < 2)
    return 1.0;
  const double cp = 1.0 - std::min(1.0, pop_var(h) / 3.0);
  const double ct = std::clamp(1.0 - std::abs(slope(h)) / 1.0, 0.0, 1.0);
  return 0.6 * cp + 0.4 * ct;
}

/// Posterior of one issue after every event in `events` that touches it.
inline IssueResult evaluate(const std::vector<Event>& events, int issue)
{
  IssueResult out;
  out.pmf.fill(1.0 / 7.0);
  std::vector<int> hist;
  for (const Event& e : events)
  {
    if (e.issue != issue)
      continue;

    // Boundary filter from the agent history before this event.
    std::array<double, 7> filter;
    filter.fill(1.0);
    if (!hist.empty())
    {
      const int lo = *std::min_element(hist.begin(), hist.end());
      const int hi = *std::max_element(hist.begin(), hist.end());
      const double outside = 1.0 - confidence(hist);
      for (int j = 0; j < 7; ++j)
        if (j < lo || j > hi)
          filter[j] = outside;
    }

    double w;
    std::set<int> direct;
    if (e.agent)
    {
      hist.push_back(e.option);
      w = std::min(1.0, 0.7 * (1.0 + consistency(hist)));
      for (std::size_t k = hist.size() >= 3 ? hist.size() - 3 : 0; k < hist.size(); ++k)
        direct.insert(hist[k]);
    }
    else
    {
      w = std::min(1.0, 0.3 * (1.0 + std::abs(e.r)));
      direct.insert(e.option);
    }

    std::array<double, 7> raw;
    double total = 0.0;
    for (int j = 0; j < 7; ++j)
    {
      double lik = 0.1;
      if (direct.count(j))
        lik = 0.8 * w;
      else if (direct.count(j - 1) || direct.count(j + 1))
        lik = 0.4;
      raw[j] = lik * filter[j] * out.pmf[j] * w;
      total += raw[j];
    }
    if (total > 0.0)
      for (int j = 0; j < 7; ++j)
        out.pmf[j] = raw[j] / total;
    else
    {
      out.pmf.fill(1.0 / 7.0);
      ++out.degenerate;
    }
  }
  out.history = hist;
  if (!hist.empty())
  {
    out.has_zopa = true;
    out.lo = *std::min_element(hist.begin(), hist.end());
    out.hi = *std::max_element(hist.begin(), hist.end());
    out.confidence = confidence(hist);
  }
  return out;
}

} // namespace oracle
