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
#include <optional>
#include <span>

#include "horizon/belief.hpp"

namespace horizon {

inline constexpr double kMinWidthPercentage =
  100.0 / static_cast<double>(kOptionCount);
inline constexpr double kNeutralPosition = 50.0;

struct ConvergenceSnapshot
{
  double convergence_ratio = 1.0;
  double width_percentage = kMinWidthPercentage;
  double weighted_position = kNeutralPosition;
  double color_stop = 0.5;
  int green_cells = 0;
  int total_cells = 0;

  bool operator==(const ConvergenceSnapshot&) const = default;
};

/// Cells counted as effectively green: the high-intensity (in-ZOPA) tier.
inline int effective_green_cells(const IntensityGrid& grid)
{
  int green = 0;
  for (const auto& row : grid.tiers)
    green += static_cast<int>(
      std::count(row.begin(), row.end(), CellTier::promising));
  return green;
}

inline double convergence_ratio(const IntensityGrid& grid)
{
  if (grid.rows() == 0)
    throw std::invalid_argument("convergence ratio of an empty grid");
  const double total = static_cast<double>(grid.rows() * kOptionCount);
  return 1.0 - static_cast<double>(effective_green_cells(grid)) / total;
}

inline double width_percentage(double ratio)
{
  return std::max(kMinWidthPercentage, (1.0 - ratio) * 100.0);
}

/// ZOPA-averaged human payoff relative to the best attainable, in percent.
/// Issues are weighted equally, so the weights cancel. Neutral (50) until
/// every issue has a ZOPA.
inline double weighted_position(
  std::span<const std::optional<ZopaRange>> zopa_ranges,
  std::span<const OptionRow> human_payoffs)
{
  if (zopa_ranges.size() != human_payoffs.size())
    throw std::invalid_argument("zopa ranges and payoff rows differ in count");
  if (zopa_ranges.empty())
    return kNeutralPosition;

  double numerator = 0.0;
  double denominator = 0.0;
  for (std::size_t i = 0; i < zopa_ranges.size(); ++i)
  {
    if (!zopa_ranges[i])
      return kNeutralPosition;
    const auto& z = *zopa_ranges[i];
    const auto& u = human_payoffs[i];
    double sum = 0.0;
    for (int j = z.lower; j <= z.upper; ++j)
      sum += u[j];
    numerator += sum / z.width();
    denominator += *std::max_element(u.begin(), u.end());
  }
  if (denominator <= 0.0)
    return kNeutralPosition;
  return std::clamp(numerator / denominator * 100.0, 0.0, 100.0);
}

/// 0 = red, 0.5 = amber, 1 = green.
inline double color_stop(double position)
{
  return std::clamp(position / 100.0, 0.0, 1.0);
}

inline ConvergenceSnapshot convergence_snapshot(
  const IntensityGrid& grid, std::span<const HumanIssueView> views)
{
  std::vector<OptionRow> payoffs;
  payoffs.reserve(views.size());
  for (const auto& v : views)
    payoffs.push_back(v.human_payoffs);

  ConvergenceSnapshot s;
  s.green_cells = effective_green_cells(grid);
  s.total_cells = static_cast<int>(grid.rows() * kOptionCount);
  s.convergence_ratio = convergence_ratio(grid);
  s.width_percentage = width_percentage(s.convergence_ratio);
  s.weighted_position = weighted_position(grid.zopa_ranges, payoffs);
  s.color_stop = color_stop(s.weighted_position);
  return s;
}

inline void to_json(json& j, const ConvergenceSnapshot& s)
{
  j = json{{"convergence_ratio", s.convergence_ratio},
           {"width_percentage", s.width_percentage},
           {"weighted_position", s.weighted_position},
           {"color_stop", s.color_stop},
           {"green_cells", s.green_cells},
           {"total_cells", s.total_cells}};
}

inline void from_json(const json& j, ConvergenceSnapshot& s)
{
  j.at("convergence_ratio").get_to(s.convergence_ratio);
  j.at("width_percentage").get_to(s.width_percentage);
  j.at("weighted_position").get_to(s.weighted_position);
  j.at("color_stop").get_to(s.color_stop);
  j.at("green_cells").get_to(s.green_cells);
  j.at("total_cells").get_to(s.total_cells);
}

} // namespace horizon
