#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "tensor.hpp"

namespace gatc {

/// Pairwise same-cluster indicator over a macro-batch. Induced by a partition,
/// so it is always reflexive, symmetric and transitive.
struct RelationMatrix {
    int m = 0;
    std::vector<std::uint8_t> entries;  ///< row-major m*m

    std::uint8_t at(int i, int j) const { return entries[static_cast<std::size_t>(i) * m + j]; }
};

/// The supervision signals derived from one macro-batch of label features:
/// balanced transformation targets, same-cluster relations, and confident
/// attention targets. Row i everywhere describes sample sample_indices[i].
struct PseudoTargetSet {
    Matrix balanced;
    RelationMatrix relations;
    Matrix confident;
    std::vector<int> sample_indices;
};

/// Per-cluster assignment frequency z_h, the column sums of the label
/// features. Zero entries (an empty cluster) are replaced by 1e-8 so the
/// balancing divisions stay finite.
Vector assignment_frequency(const Matrix& l);

/// Reweights each row by the inverse cluster frequency and renormalizes, so
/// under-populated clusters attract their borderline samples.
Matrix balanced_target(const Matrix& l);

/// Same-cluster relations from k-means on the label feature rows.
RelationMatrix relations_by_kmeans(const Matrix& l, int k, std::uint64_t seed);

/// Squares each row before the inverse-frequency reweighting, pushing
/// confident scores up and uncertain ones down. The frequency z is computed
/// from the raw features, matching the balancing step.
Matrix confident_attention_target(const Matrix& l);

/// Evaluation-mode inference over a sub-batch, supplied by the model owner.
using LabelFeatureFn = std::function<Matrix(const Tensor&)>;

/// Runs inference over the macro-batch in sub-batches of at most m1 samples
/// and concatenates the rows. The split size only bounds memory; results are
/// identical for any m1.
Matrix batched_label_features(const LabelFeatureFn& infer, const Tensor& macro_batch, int m1);

PseudoTargetSet compute_pseudo_targets(const LabelFeatureFn& infer, const Tensor& macro_batch,
                                       std::vector<int> sample_indices, int m1, int k,
                                       std::uint64_t seed);

}  // namespace gatc
