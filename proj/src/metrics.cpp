#include "metrics.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"
#include "hungarian.hpp"

namespace gatc {

namespace {

void check_labels(const std::vector<int>& pred, const std::vector<int>& truth) {
    if (pred.empty()) throw InvalidArgument("metrics: empty label lists");
    if (pred.size() != truth.size()) throw InvalidArgument("metrics: label list length mismatch");
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] < 0 || truth[i] < 0) throw InvalidArgument("metrics: negative cluster id");
    }
}

double comb2(double x) { return x * (x - 1.0) / 2.0; }

}  // namespace

ContingencyTable contingency_table(const std::vector<int>& pred, const std::vector<int>& truth) {
    check_labels(pred, truth);
    const int r = *std::max_element(pred.begin(), pred.end()) + 1;
    const int c = *std::max_element(truth.begin(), truth.end()) + 1;

    ContingencyTable t;
    t.counts = Eigen::MatrixXi::Zero(r, c);
    t.row_sums.assign(static_cast<std::size_t>(r), 0);
    t.col_sums.assign(static_cast<std::size_t>(c), 0);
    t.n = static_cast<int>(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        t.counts(pred[i], truth[i]) += 1;
        ++t.row_sums[static_cast<std::size_t>(pred[i])];
        ++t.col_sums[static_cast<std::size_t>(truth[i])];
    }
    return t;
}

double accuracy(const std::vector<int>& pred, const std::vector<int>& truth, std::vector<int>* mapping) {
    const ContingencyTable t = contingency_table(pred, truth);
    const int r = static_cast<int>(t.counts.rows());
    const int c = static_cast<int>(t.counts.cols());
    const int side = std::max(r, c);

    // Maximize matched counts by minimizing their negation; padding rows and
    // columns cost nothing and absorb the size mismatch.
    Matrix cost = Matrix::Zero(side, side);
    cost.topLeftCorner(r, c) = -t.counts.cast<double>();
    const std::vector<int> assignment = hungarian(cost);

    int matched = 0;
    for (int i = 0; i < r; ++i) {
        if (assignment[static_cast<std::size_t>(i)] < c)
            matched += t.counts(i, assignment[static_cast<std::size_t>(i)]);
    }
    if (mapping) {
        mapping->assign(static_cast<std::size_t>(r), -1);
        for (int i = 0; i < r; ++i) {
            const int j = assignment[static_cast<std::size_t>(i)];
            (*mapping)[static_cast<std::size_t>(i)] = j < c ? j : -1;
        }
    }
    return static_cast<double>(matched) / static_cast<double>(t.n);
}

double nmi(const std::vector<int>& pred, const std::vector<int>& truth, bool* degenerate) {
    const ContingencyTable t = contingency_table(pred, truth);
    if (degenerate) *degenerate = false;

    const double n = static_cast<double>(t.n);
    double h_pred = 0.0, h_truth = 0.0;
    for (int a : t.row_sums)
        if (a > 0) h_pred += a * std::log(a / n);
    for (int b : t.col_sums)
        if (b > 0) h_truth += b * std::log(b / n);

    if (h_pred == 0.0 || h_truth == 0.0) {
        if (degenerate) *degenerate = true;
        return 0.0;
    }

    double mi = 0.0;
    for (Eigen::Index i = 0; i < t.counts.rows(); ++i) {
        for (Eigen::Index j = 0; j < t.counts.cols(); ++j) {
            const int nij = t.counts(i, j);
            if (nij == 0) continue;
            mi += nij * std::log(n * nij /
                                 (static_cast<double>(t.row_sums[static_cast<std::size_t>(i)]) *
                                  static_cast<double>(t.col_sums[static_cast<std::size_t>(j)])));
        }
    }
    const double value = mi / std::sqrt(h_pred * h_truth);
    return std::clamp(value, 0.0, 1.0);
}

double ari(const std::vector<int>& pred, const std::vector<int>& truth) {
    const ContingencyTable t = contingency_table(pred, truth);
    if (t.n < 2) throw InvalidArgument("ari: need at least two samples");

    double sum_cells = 0.0;
    for (Eigen::Index i = 0; i < t.counts.rows(); ++i)
        for (Eigen::Index j = 0; j < t.counts.cols(); ++j) sum_cells += comb2(t.counts(i, j));
    double sum_rows = 0.0, sum_cols = 0.0;
    for (int a : t.row_sums) sum_rows += comb2(a);
    for (int b : t.col_sums) sum_cols += comb2(b);

    const double expected = sum_rows * sum_cols / comb2(static_cast<double>(t.n));
    const double maximum = 0.5 * (sum_rows + sum_cols);
    if (maximum == expected) return 0.0;
    return (sum_cells - expected) / (maximum - expected);
}

ClusteringReport report(const std::vector<int>& pred, const std::vector<int>& truth) {
    ClusteringReport rep;
    rep.table = contingency_table(pred, truth);
    rep.acc = accuracy(pred, truth, &rep.mapping);
    rep.nmi = nmi(pred, truth, &rep.degenerate_nmi);
    rep.ari = ari(pred, truth);
    return rep;
}

}  // namespace gatc
