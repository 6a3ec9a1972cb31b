#include "pseudo_targets.hpp"

#include <algorithm>
#include <cstring>

#include "error.hpp"
#include "kmeans.hpp"

namespace gatc {

namespace {

constexpr double kEmptyClusterEps = 1e-8;

void check_features(const Matrix& l) {
    if (l.rows() == 0 || l.cols() == 0) throw InvalidArgument("pseudo_targets: empty feature matrix");
    for (Eigen::Index i = 0; i < l.rows(); ++i) {
        double row_sum = 0.0;
        for (Eigen::Index h = 0; h < l.cols(); ++h) {
            if (l(i, h) < 0.0) throw InvalidArgument("pseudo_targets: negative label feature");
            row_sum += l(i, h);
        }
        if (row_sum <= 0.0) throw InvalidArgument("pseudo_targets: all-zero label feature row");
    }
}

/// Shared core of the two target ops: divide (optionally squared) entries by
/// z and renormalize each row.
Matrix reweighted_rows(const Matrix& l, bool square) {
    const Vector z = assignment_frequency(l);
    Matrix out(l.rows(), l.cols());
    for (Eigen::Index i = 0; i < l.rows(); ++i) {
        for (Eigen::Index h = 0; h < l.cols(); ++h) {
            const double v = square ? l(i, h) * l(i, h) : l(i, h);
            out(i, h) = v / z[h];
        }
        const double denom = out.row(i).sum();
        if (denom <= 0.0) throw NumericError("pseudo_targets: reweighted row vanished");
        out.row(i) /= denom;
    }
    return out;
}

}  // namespace

Vector assignment_frequency(const Matrix& l) {
    check_features(l);
    Vector z = l.colwise().sum();
    for (Eigen::Index h = 0; h < z.size(); ++h) {
        if (z[h] <= 0.0) z[h] = kEmptyClusterEps;
    }
    return z;
}

Matrix balanced_target(const Matrix& l) { return reweighted_rows(l, false); }

Matrix confident_attention_target(const Matrix& l) { return reweighted_rows(l, true); }

RelationMatrix relations_by_kmeans(const Matrix& l, int k, std::uint64_t seed) {
    check_features(l);
    const int m = static_cast<int>(l.rows());
    const KMeansResult clusters = kmeans(l, k, seed);

    RelationMatrix r;
    r.m = m;
    r.entries.assign(static_cast<std::size_t>(m) * m, 0);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            const bool same = clusters.assignments[static_cast<std::size_t>(i)] ==
                              clusters.assignments[static_cast<std::size_t>(j)];
            r.entries[static_cast<std::size_t>(i) * m + j] = (same || i == j) ? 1 : 0;
        }
    }
    return r;
}

Matrix batched_label_features(const LabelFeatureFn& infer, const Tensor& macro_batch, int m1) {
    if (m1 < 1) throw InvalidArgument("batched_label_features: m1 must be at least 1");
    if (macro_batch.n < 1) throw InvalidArgument("batched_label_features: empty macro-batch");

    Matrix all;
    for (int start = 0; start < macro_batch.n; start += m1) {
        const int count = std::min(m1, macro_batch.n - start);
        Tensor sub;
        sub.n = count;
        sub.c = macro_batch.c;
        sub.h = macro_batch.h;
        sub.w = macro_batch.w;
        const std::size_t plane = static_cast<std::size_t>(macro_batch.c) * macro_batch.h * macro_batch.w;
        sub.data.assign(macro_batch.data.begin() + static_cast<std::ptrdiff_t>(start * plane),
                        macro_batch.data.begin() + static_cast<std::ptrdiff_t>((start + count) * plane));

        const Matrix part = infer(sub);
        if (part.rows() != count) throw NumericError("batched_label_features: inference row count mismatch");
        if (all.size() == 0) {
            all.resize(macro_batch.n, part.cols());
        } else if (part.cols() != all.cols()) {
            throw NumericError("batched_label_features: inference column count changed between sub-batches");
        }
        all.middleRows(start, count) = part;
    }
    return all;
}

PseudoTargetSet compute_pseudo_targets(const LabelFeatureFn& infer, const Tensor& macro_batch,
                                       std::vector<int> sample_indices, int m1, int k,
                                       std::uint64_t seed) {
    if (static_cast<int>(sample_indices.size()) != macro_batch.n)
        throw InvalidArgument("compute_pseudo_targets: sample index count mismatch");

    const Matrix l = batched_label_features(infer, macro_batch, m1);
    PseudoTargetSet set;
    set.balanced = balanced_target(l);
    set.relations = relations_by_kmeans(l, k, seed);
    set.confident = confident_attention_target(l);
    set.sample_indices = std::move(sample_indices);
    return set;
}

}  // namespace gatc
