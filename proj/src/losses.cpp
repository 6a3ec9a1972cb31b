#include "losses.hpp"

#include <cmath>

namespace gatc {

namespace {

void check_same_dim(const Vector& a, const Vector& b, const char* what) {
    if (a.size() != b.size()) throw InvalidArgument(std::string(what) + ": dimension mismatch");
}

}  // namespace

double transformation_loss(const Vector& l_t, const Vector& target) {
    check_same_dim(l_t, target, "transformation_loss");
    return -l_t.dot(target);
}

Vector transformation_loss_grad(const Vector& l_t, const Vector& target) {
    check_same_dim(l_t, target, "transformation_loss_grad");
    return -target;
}

double separability_loss(int r, const Vector& l_i, const Vector& l_j) {
    check_same_dim(l_i, l_j, "separability_loss");
    const double ni = l_i.norm();
    const double nj = l_j.norm();
    if (ni == 0.0 || nj == 0.0) throw InvalidArgument("separability_loss: zero-norm label feature");
    const double d = l_i.dot(l_j) / (ni * nj);
    return -r * clamped_log(d) - (1 - r) * clamped_log(1.0 - d);
}

void separability_loss_grad(int r, const Vector& l_i, const Vector& l_j, Vector& grad_i, Vector& grad_j) {
    check_same_dim(l_i, l_j, "separability_loss_grad");
    const double ni = l_i.norm();
    const double nj = l_j.norm();
    if (ni == 0.0 || nj == 0.0) throw InvalidArgument("separability_loss_grad: zero-norm label feature");
    const Vector yi = l_i / ni;
    const Vector yj = l_j / nj;
    const double d = yi.dot(yj);
    const double dloss_dd = -r * clamped_log_grad(d) + (1 - r) * clamped_log_grad(1.0 - d);
    grad_i = dloss_dd * (yj - d * yi) / ni;
    grad_j = dloss_dd * (yi - d * yj) / nj;
}

double entropy_loss(const Matrix& rows) {
    if (rows.rows() == 0) throw InvalidArgument("entropy_loss: empty feature list");
    const Vector p = rows.colwise().mean();
    double value = 0.0;
    for (Eigen::Index h = 0; h < p.size(); ++h) {
        if (p[h] > 0.0) value += p[h] * std::log(p[h]);
    }
    return value;
}

Matrix entropy_loss_grad(const Matrix& rows) {
    if (rows.rows() == 0) throw InvalidArgument("entropy_loss_grad: empty feature list");
    const Vector p = rows.colwise().mean();
    const double inv_m = 1.0 / static_cast<double>(rows.rows());
    Matrix grad(rows.rows(), rows.cols());
    for (Eigen::Index h = 0; h < p.size(); ++h) {
        const double g = p[h] > 0.0 ? (1.0 + std::log(p[h])) * inv_m : 0.0;
        grad.col(h).setConstant(g);
    }
    return grad;
}

double attention_loss(const Vector& l_a, const Vector& target) {
    check_same_dim(l_a, target, "attention_loss");
    const Eigen::Index k = l_a.size();
    double sum = 0.0;
    for (Eigen::Index h = 0; h < k; ++h) {
        sum += -target[h] * clamped_log(l_a[h]) - (1.0 - target[h]) * clamped_log(1.0 - l_a[h]);
    }
    return sum / static_cast<double>(k);
}

Vector attention_loss_grad(const Vector& l_a, const Vector& target) {
    check_same_dim(l_a, target, "attention_loss_grad");
    const Eigen::Index k = l_a.size();
    Vector grad(k);
    for (Eigen::Index h = 0; h < k; ++h) {
        grad[h] = (-target[h] * clamped_log_grad(l_a[h]) + (1.0 - target[h]) * clamped_log_grad(1.0 - l_a[h])) /
                  static_cast<double>(k);
    }
    return grad;
}

LossBreakdown total_loss(const Matrix& l, const Matrix& la, const Matrix& target_l, const Matrix& target_la,
                         const std::vector<std::uint8_t>& relations, const LossWeights& weights,
                         Matrix* dl, Matrix* dla) {
    const Eigen::Index m = l.rows();
    const Eigen::Index k = l.cols();
    if (m == 0) throw InvalidArgument("total_loss: empty batch");
    if (la.rows() != m || target_l.rows() != m || target_la.rows() != m)
        throw InvalidArgument("total_loss: misaligned batch rows");
    if (la.cols() != k || target_l.cols() != k || target_la.cols() != k)
        throw InvalidArgument("total_loss: feature dimension mismatch");
    if (relations.size() != static_cast<std::size_t>(m) * static_cast<std::size_t>(m))
        throw InvalidArgument("total_loss: relation slice size mismatch");

    if (dl) dl->setZero(m, k);
    if (dla) dla->setZero(m, k);

    LossBreakdown out;

    // Pairwise separability over all ordered pairs, mean-reduced.
    const double pair_scale = 1.0 / static_cast<double>(m * m);
    Vector gi(k), gj(k);
    for (Eigen::Index i = 0; i < m; ++i) {
        const Vector li = l.row(i);
        for (Eigen::Index j = 0; j < m; ++j) {
            const int r = relations[static_cast<std::size_t>(i) * m + j] ? 1 : 0;
            const Vector lj = l.row(j);
            out.l_r += separability_loss(r, li, lj) * pair_scale;
            if (dl) {
                separability_loss_grad(r, li, lj, gi, gj);
                dl->row(i) += pair_scale * gi.transpose();
                dl->row(j) += pair_scale * gj.transpose();
            }
        }
    }

    // Per-sample terms, mean-reduced.
    const double sample_scale = 1.0 / static_cast<double>(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const Vector li = l.row(i);
        const Vector lai = la.row(i);
        const Vector tl = target_l.row(i);
        const Vector tla = target_la.row(i);
        out.l_t += transformation_loss(li, tl) * sample_scale;
        out.l_a += attention_loss(lai, tla) * sample_scale;
        if (dl) dl->row(i) += weights.alpha1 * sample_scale * transformation_loss_grad(li, tl).transpose();
        if (dla) dla->row(i) += weights.alpha2 * sample_scale * attention_loss_grad(lai, tla).transpose();
    }

    // Entropy on both heads.
    out.l_e = entropy_loss(l) + entropy_loss(la);
    if (dl) *dl += weights.alpha3 * entropy_loss_grad(l);
    if (dla) *dla += weights.alpha3 * entropy_loss_grad(la);

    out.total = out.l_r + weights.alpha1 * out.l_t + weights.alpha2 * out.l_a + weights.alpha3 * out.l_e;
    return out;
}

}  // namespace gatc
