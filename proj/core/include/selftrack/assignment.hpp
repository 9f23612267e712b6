#pragma once

#include <span>
#include <vector>

namespace selftrack {

/// Minimum-cost assignment (Hungarian method) on a row-major rows x cols
/// matrix. Returns, per row, the assigned column or -1 when rows > cols and
/// the row is left over. Every row (or every column, if fewer) is assigned.
std::vector<int> min_cost_assignment(std::span<const double> cost, int rows, int cols);

/// Maximum-weight matching where only pairs with weight > 0 may be matched;
/// returns per row the column or -1.
std::vector<int> max_weight_matching(std::span<const double> weight, int rows, int cols);

}  // namespace selftrack
