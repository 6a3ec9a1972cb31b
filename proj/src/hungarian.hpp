#pragma once

#include <vector>

#include "tensor.hpp"

namespace gatc {

/// Minimum-cost perfect matching on a square cost matrix (Jonker-Volgenant
/// style potentials, O(n^3)). Costs may be negative. Returns the matched
/// column for every row.
std::vector<int> hungarian(const Matrix& cost);

}  // namespace gatc
