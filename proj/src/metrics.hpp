#pragma once

#include <vector>

#include "tensor.hpp"

namespace gatc {

/// Cross-tabulation of two label lists: counts(i,j) is the number of samples
/// assigned to predicted cluster i and true class j.
struct ContingencyTable {
    Eigen::MatrixXi counts;      ///< R x C
    std::vector<int> row_sums;   ///< per predicted cluster
    std::vector<int> col_sums;   ///< per true class
    int n = 0;
};

struct ClusteringReport {
    double acc = 0.0;
    double nmi = 0.0;
    double ari = 0.0;
    /// Optimal predicted-to-true relabeling found for ACC; -1 where a
    /// predicted cluster was matched to a padding column.
    std::vector<int> mapping;
    ContingencyTable table;
    /// Set when either partition has a single cluster, which zeroes an NMI
    /// denominator factor; nmi is reported as 0 in that case.
    bool degenerate_nmi = false;
};

ContingencyTable contingency_table(const std::vector<int>& pred, const std::vector<int>& truth);

/// Clustering accuracy under the best one-to-one relabeling (Hungarian on
/// negated match counts, padded square when cluster counts differ).
double accuracy(const std::vector<int>& pred, const std::vector<int>& truth,
                std::vector<int>* mapping = nullptr);

/// Normalized mutual information with geometric-mean normalization. A
/// single-cluster partition on either side yields 0 and sets *degenerate.
double nmi(const std::vector<int>& pred, const std::vector<int>& truth, bool* degenerate = nullptr);

/// Adjusted Rand index over the contingency table; 0 when the correction
/// leaves nothing to normalize (both partitions trivial).
double ari(const std::vector<int>& pred, const std::vector<int>& truth);

ClusteringReport report(const std::vector<int>& pred, const std::vector<int>& truth);

}  // namespace gatc
