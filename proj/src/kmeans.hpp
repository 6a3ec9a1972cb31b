#pragma once

#include <cstdint>
#include <vector>

#include "tensor.hpp"

namespace gatc {

struct KMeansResult {
    Matrix centers;                ///< k x d
    std::vector<int> assignments;  ///< one cluster index per input row
    double inertia = 0.0;          ///< sum of squared distances to assigned centers
    int iterations = 0;
    bool converged = false;
};

/// Lloyd's algorithm with k-means++ seeding. Fully deterministic for a given
/// seed: ties in assignment go to the lowest center index, and an emptied
/// cluster is re-seeded at the point farthest from its current center. When
/// the data has fewer distinct points than k, surplus clusters stay empty and
/// the duplicates share one label, so a fully collapsed feature set yields a
/// single cluster rather than an error.
KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, int max_iters = 100,
                    double tol = 1e-6);

}  // namespace gatc
