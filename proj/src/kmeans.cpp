#include "kmeans.hpp"

#include <cmath>
#include <limits>

#include "error.hpp"
#include "rng.hpp"

namespace gatc {

namespace {

double sq_dist(const Matrix& points, Eigen::Index i, const Matrix& centers, Eigen::Index c) {
    return (points.row(i) - centers.row(c)).squaredNorm();
}

/// Nearest center for every point; returns total inertia.
double assign_all(const Matrix& points, const Matrix& centers, std::vector<int>& out) {
    double inertia = 0.0;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        int best = 0;
        double best_d = sq_dist(points, i, centers, 0);
        for (Eigen::Index c = 1; c < centers.rows(); ++c) {
            const double d = sq_dist(points, i, centers, c);
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(c);
            }
        }
        out[static_cast<std::size_t>(i)] = best;
        inertia += best_d;
    }
    return inertia;
}

Matrix plus_plus_init(const Matrix& points, int k, Rng& rng) {
    const Eigen::Index n = points.rows();
    Matrix centers(k, points.cols());
    centers.row(0) = points.row(static_cast<Eigen::Index>(rng.uniform_int(static_cast<std::uint64_t>(n))));

    Vector d2(n);
    for (Eigen::Index i = 0; i < n; ++i) d2[i] = (points.row(i) - centers.row(0)).squaredNorm();

    for (int c = 1; c < k; ++c) {
        const double total = d2.sum();
        Eigen::Index pick;
        if (total > 0.0) {
            // Sample proportionally to squared distance from the chosen set.
            double target = rng.uniform() * total;
            pick = n - 1;
            double acc = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                acc += d2[i];
                if (target < acc) {
                    pick = i;
                    break;
                }
            }
        } else {
            // Every point coincides with an existing center.
            pick = static_cast<Eigen::Index>(rng.uniform_int(static_cast<std::uint64_t>(n)));
        }
        centers.row(c) = points.row(pick);
        for (Eigen::Index i = 0; i < n; ++i)
            d2[i] = std::min(d2[i], (points.row(i) - centers.row(c)).squaredNorm());
    }
    return centers;
}

}  // namespace

KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, int max_iters, double tol) {
    const Eigen::Index n = points.rows();
    if (k < 1) throw InvalidArgument("kmeans: k must be at least 1");
    if (n < k) throw InvalidArgument("kmeans: fewer points than clusters");
    if (max_iters < 1) throw InvalidArgument("kmeans: max_iters must be at least 1");

    Rng rng(seed);
    KMeansResult res;
    res.centers = plus_plus_init(points, k, rng);
    res.assignments.assign(static_cast<std::size_t>(n), 0);

    std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);
    for (int iter = 0; iter < max_iters; ++iter) {
        res.iterations = iter + 1;
        assign_all(points, res.centers, res.assignments);

        // Re-seed emptied clusters at the points that fit worst, one point per
        // cluster. With duplicated data this may be a no-op, which is fine.
        counts.assign(counts.size(), 0);
        for (int a : res.assignments) ++counts[static_cast<std::size_t>(a)];
        Vector worst(n);
        bool repaired = false;
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) continue;
            if (!repaired) {
                for (Eigen::Index i = 0; i < n; ++i)
                    worst[i] = sq_dist(points, i, res.centers, res.assignments[static_cast<std::size_t>(i)]);
                repaired = true;
            }
            Eigen::Index far = 0;
            worst.maxCoeff(&far);
            res.centers.row(c) = points.row(far);
            worst[far] = -1.0;
        }
        if (repaired) assign_all(points, res.centers, res.assignments);

        // Means of the (possibly repaired) assignment.
        Matrix next = Matrix::Zero(k, points.cols());
        counts.assign(counts.size(), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            const int a = res.assignments[static_cast<std::size_t>(i)];
            next.row(a) += points.row(i);
            ++counts[static_cast<std::size_t>(a)];
        }
        double shift = 0.0;
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] == 0) {
                next.row(c) = res.centers.row(c);
            } else {
                next.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
            }
            shift = std::max(shift, (next.row(c) - res.centers.row(c)).norm());
        }
        res.centers = next;
        if (shift < tol) {
            res.converged = true;
            break;
        }
    }

    res.inertia = assign_all(points, res.centers, res.assignments);
    return res;
}

}  // namespace gatc
