#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "tensor.hpp"

namespace gatc {

/// Clamp floor applied inside every logarithm of the pairwise and attention
/// losses; keeps log arguments in [kLogEps, 1] so perfectly matched pairs
/// score an exact zero while degenerate ones stay finite.
inline constexpr double kLogEps = 1e-7;

inline double clamped_log(double x) { return std::log(std::min(std::max(x, kLogEps), 1.0)); }

/// Derivative of clamped_log w.r.t. x (zero in the clamped regions).
inline double clamped_log_grad(double x) {
    if (x <= kLogEps || x >= 1.0) return 0.0;
    return 1.0 / x;
}

struct LossWeights {
    double alpha1 = 5.0;  // transformation invariance
    double alpha2 = 5.0;  // attention mapping
    double alpha3 = 3.0;  // entropy analysis

    bool operator==(const LossWeights&) const = default;
};

struct LossBreakdown {
    double l_r = 0.0;
    double l_t = 0.0;
    double l_a = 0.0;
    double l_e = 0.0;
    double total = 0.0;
};

/// Negative inner product between a prediction and its fixed target.
/// Range [-1, 0] for probability vectors.
double transformation_loss(const Vector& l_t, const Vector& target);
/// d(transformation_loss)/d(l_t); the target carries no gradient.
Vector transformation_loss_grad(const Vector& l_t, const Vector& target);

/// Binary cross entropy between the relation r and the cosine similarity of
/// the two label features.
double separability_loss(int r, const Vector& l_i, const Vector& l_j);
void separability_loss_grad(int r, const Vector& l_i, const Vector& l_j, Vector& grad_i, Vector& grad_j);

/// Negative entropy of the empirical cluster-assignment distribution
/// p_h = mean_i rows(i, h). Range [-log k, 0]; minimized by a uniform p.
double entropy_loss(const Matrix& rows);
Matrix entropy_loss_grad(const Matrix& rows);

/// Mean per-class binary cross entropy against a fixed confident target.
double attention_loss(const Vector& l_a, const Vector& target);
Vector attention_loss_grad(const Vector& l_a, const Vector& target);

/// Combined objective over a mini-batch. Rows of `l` / `l_a` are the
/// predictions for the transformed samples; `target_l` / `target_la` the
/// frozen pseudo-targets aligned row-by-row; `relations` the m*m row-major
/// binary relation slice for the batch.
///
/// Reductions: the pairwise term averages over all m*m ordered pairs
/// (including i = j), the transformation and attention terms average over
/// samples, and the entropy term is evaluated on the batch statistics of
/// both heads and summed. total = l_r + alpha1*l_t + alpha2*l_a + alpha3*l_e.
///
/// When `dl` / `dla` are given they receive d(total)/d(predictions).
LossBreakdown total_loss(const Matrix& l, const Matrix& la, const Matrix& target_l, const Matrix& target_la,
                         const std::vector<std::uint8_t>& relations, const LossWeights& weights,
                         Matrix* dl = nullptr, Matrix* dla = nullptr);

}  // namespace gatc
