#include "synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"

namespace gatc {

namespace {

/// Membership test for shape `id` in unit coordinates: (dy, dx) is the offset
/// from the shape center in pixels, r the shape radius in pixels.
bool inside_shape(int id, double dy, double dx, double r) {
    const double dist = std::hypot(dx, dy);
    switch (id) {
        case 0:  // disk
            return dist <= r;
        case 1:  // square
            return std::max(std::abs(dx), std::abs(dy)) <= 0.85 * r;
        case 2:  // triangle, apex up
            return dy >= -r && dy <= r && std::abs(dx) <= 0.95 * (dy + r) / 2.0;
        case 3:  // cross
            return (std::abs(dx) <= 0.3 * r && std::abs(dy) <= r) ||
                   (std::abs(dy) <= 0.3 * r && std::abs(dx) <= r);
        case 4:  // ring
            return dist <= r && dist >= 0.55 * r;
        case 5:  // diamond
            return std::abs(dx) + std::abs(dy) <= 1.2 * r;
        case 6:  // saltire
            return std::max(std::abs(dx), std::abs(dy)) <= r &&
                   (std::abs(dx - dy) <= 0.42 * r || std::abs(dx + dy) <= 0.42 * r);
        case 7:  // double_bar
            return std::abs(dx) <= r &&
                   (std::abs(dy - 0.5 * r) <= 0.22 * r || std::abs(dy + 0.5 * r) <= 0.22 * r);
        default:
            throw InvalidArgument("synthetic: unknown shape id");
    }
}

}  // namespace

const char* synthetic_shape_name(int shape_id) {
    static const char* names[kSyntheticShapeCount] = {"disk",  "square",  "triangle", "cross",
                                                      "ring",  "diamond", "saltire",  "double_bar"};
    if (shape_id < 0 || shape_id >= kSyntheticShapeCount)
        throw InvalidArgument("synthetic: unknown shape id");
    return names[shape_id];
}

void render_synthetic_sample(Tensor& t, int i, int shape_id, Rng& rng) {
    if (t.c != 1) throw InvalidArgument("synthetic: dataset images are single-channel");
    if (shape_id < 0 || shape_id >= kSyntheticShapeCount)
        throw InvalidArgument("synthetic: unknown shape id");

    double* plane = t.plane(i, 0);
    const std::size_t pixels = t.plane_size();
    for (std::size_t p = 0; p < pixels; ++p) plane[p] = rng.uniform(0.0, 0.3);

    const double intensity = rng.uniform(0.7, 1.0);
    const double cy = rng.uniform(0.3, 0.7) * (t.h - 1);
    const double cx = rng.uniform(0.3, 0.7) * (t.w - 1);
    const double r = rng.uniform(0.18, 0.30) * std::min(t.h, t.w);

    for (int y = 0; y < t.h; ++y) {
        for (int x = 0; x < t.w; ++x) {
            if (inside_shape(shape_id, y - cy, x - cx, r))
                plane[static_cast<std::size_t>(y) * t.w + x] = intensity;
        }
    }
}

}  // namespace gatc
