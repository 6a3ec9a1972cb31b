#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "tensor.hpp"

namespace gatc::testing {

/// Central-difference gradient check. Returns the worst discrepancy between
/// the analytic partials and numeric ones, each entry normalized by
/// max(1, |numeric|) so large and small gradients are judged alike.
inline double gradcheck(const std::function<double(const Vector&)>& f, const Vector& x,
                        const Vector& analytic, double eps = 1e-6) {
    double worst = 0.0;
    Vector probe = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double orig = probe[i];
        probe[i] = orig + eps;
        const double fp = f(probe);
        probe[i] = orig - eps;
        const double fm = f(probe);
        probe[i] = orig;
        const double numeric = (fp - fm) / (2.0 * eps);
        worst = std::max(worst, std::abs(numeric - analytic[i]) / std::max(1.0, std::abs(numeric)));
    }
    return worst;
}

inline double gradcheck_matrix(const std::function<double(const Matrix&)>& f, const Matrix& x,
                               const Matrix& analytic, double eps = 1e-6) {
    double worst = 0.0;
    Matrix probe = x;
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        for (Eigen::Index c = 0; c < x.cols(); ++c) {
            const double orig = probe(r, c);
            probe(r, c) = orig + eps;
            const double fp = f(probe);
            probe(r, c) = orig - eps;
            const double fm = f(probe);
            probe(r, c) = orig;
            const double numeric = (fp - fm) / (2.0 * eps);
            worst = std::max(worst, std::abs(numeric - analytic(r, c)) / std::max(1.0, std::abs(numeric)));
        }
    }
    return worst;
}

}  // namespace gatc::testing
