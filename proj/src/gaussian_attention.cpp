#include "gaussian_attention.hpp"

#include <cmath>

#include "error.hpp"

namespace gatc {

namespace {

void check_geometry(int h, int w, double delta, double alpha) {
    if (h < 1 || w < 1) throw InvalidArgument("gaussian_attention: map must be at least 1x1");
    if (!(delta > 0.0)) throw InvalidArgument("gaussian_attention: delta must be positive");
    if (!(alpha > 0.0)) throw InvalidArgument("gaussian_attention: alpha must be positive");
}

double axis_coord(int i, int n) { return n > 1 ? static_cast<double>(i) / (n - 1) : 0.5; }

}  // namespace

Matrix gaussian_attention_map(const AttentionParams& p, int h, int w, double alpha) {
    check_geometry(h, w, p.delta, alpha);
    Matrix map(h, w);
    const double scale = 1.0 / (alpha * p.delta);
    for (int r = 0; r < h; ++r) {
        const double dr = axis_coord(r, h) - p.mu_r;
        for (int c = 0; c < w; ++c) {
            const double dc = axis_coord(c, w) - p.mu_c;
            map(r, c) = std::exp(-scale * (dr * dr + dc * dc));
        }
    }
    return map;
}

AttentionParams gaussian_attention_map_grad(const AttentionParams& p, int h, int w, const Matrix& dmap,
                                            double alpha) {
    check_geometry(h, w, p.delta, alpha);
    if (dmap.rows() != h || dmap.cols() != w)
        throw InvalidArgument("gaussian_attention: upstream gradient shape mismatch");
    const double scale = 1.0 / (alpha * p.delta);
    AttentionParams grad{0.0, 0.0, 0.0};
    for (int r = 0; r < h; ++r) {
        const double dr = axis_coord(r, h) - p.mu_r;
        for (int c = 0; c < w; ++c) {
            const double dc = axis_coord(c, w) - p.mu_c;
            const double sq = dr * dr + dc * dc;
            const double a = std::exp(-scale * sq);
            const double g = dmap(r, c) * a;
            grad.mu_r += g * 2.0 * scale * dr;
            grad.mu_c += g * 2.0 * scale * dc;
            grad.delta += g * sq / (alpha * p.delta * p.delta);
        }
    }
    return grad;
}

}  // namespace gatc
