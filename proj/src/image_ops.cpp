#include "image_ops.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"

namespace gatc::img {

namespace {

constexpr double kR601 = 0.299, kG601 = 0.587, kB601 = 0.114;

void check_sample(const Tensor& t, int i) {
    if (i < 0 || i >= t.n) throw InvalidArgument("image_ops: sample index out of range");
    if (t.c != 1 && t.c != 3) throw InvalidArgument("image_ops: images must have 1 or 3 channels");
}

double bilinear(const double* plane, int h, int w, double y, double x) {
    y = std::clamp(y, 0.0, static_cast<double>(h - 1));
    x = std::clamp(x, 0.0, static_cast<double>(w - 1));
    const int y0 = static_cast<int>(y);
    const int x0 = static_cast<int>(x);
    const int y1 = std::min(y0 + 1, h - 1);
    const int x1 = std::min(x0 + 1, w - 1);
    const double fy = y - y0;
    const double fx = x - x0;
    const double top = (1.0 - fx) * plane[y0 * w + x0] + fx * plane[y0 * w + x1];
    const double bot = (1.0 - fx) * plane[y1 * w + x0] + fx * plane[y1 * w + x1];
    return (1.0 - fy) * top + fy * bot;
}

struct Hsv {
    double h, s, v;  // h in turns [0,1)
};

Hsv rgb_to_hsv(double r, double g, double b) {
    const double maxc = std::max({r, g, b});
    const double minc = std::min({r, g, b});
    const double delta = maxc - minc;
    Hsv out{0.0, 0.0, maxc};
    if (maxc > 0.0) out.s = delta / maxc;
    if (delta > 0.0) {
        if (maxc == r) {
            out.h = (g - b) / delta;
        } else if (maxc == g) {
            out.h = 2.0 + (b - r) / delta;
        } else {
            out.h = 4.0 + (r - g) / delta;
        }
        out.h /= 6.0;
        if (out.h < 0.0) out.h += 1.0;
    }
    return out;
}

void hsv_to_rgb(const Hsv& in, double& r, double& g, double& b) {
    if (in.s <= 0.0) {
        r = g = b = in.v;
        return;
    }
    const double h6 = in.h * 6.0;
    const int sector = std::min(5, static_cast<int>(h6));
    const double f = h6 - sector;
    const double p = in.v * (1.0 - in.s);
    const double q = in.v * (1.0 - in.s * f);
    const double t = in.v * (1.0 - in.s * (1.0 - f));
    switch (sector) {
        case 0: r = in.v; g = t; b = p; break;
        case 1: r = q; g = in.v; b = p; break;
        case 2: r = p; g = in.v; b = t; break;
        case 3: r = p; g = q; b = in.v; break;
        case 4: r = t; g = p; b = in.v; break;
        default: r = in.v; g = p; b = q; break;
    }
}

}  // namespace

void hflip(Tensor& t, int i) {
    check_sample(t, i);
    for (int ch = 0; ch < t.c; ++ch) {
        double* plane = t.plane(i, ch);
        for (int y = 0; y < t.h; ++y) {
            double* row = plane + static_cast<std::size_t>(y) * t.w;
            std::reverse(row, row + t.w);
        }
    }
}

void warp_affine(Tensor& t, int i, const std::array<double, 6>& inv) {
    check_sample(t, i);
    const std::size_t plane_elems = t.plane_size();
    std::vector<double> src(plane_elems);
    for (int ch = 0; ch < t.c; ++ch) {
        double* plane = t.plane(i, ch);
        std::copy(plane, plane + plane_elems, src.begin());
        for (int y = 0; y < t.h; ++y) {
            for (int x = 0; x < t.w; ++x) {
                const double sx = inv[0] * x + inv[1] * y + inv[2];
                const double sy = inv[3] * x + inv[4] * y + inv[5];
                plane[static_cast<std::size_t>(y) * t.w + x] = bilinear(src.data(), t.h, t.w, sy, sx);
            }
        }
    }
}

void brightness(Tensor& t, int i, double factor) {
    check_sample(t, i);
    double* s = t.sample(i);
    const std::size_t n = t.sample_size();
    for (std::size_t p = 0; p < n; ++p) s[p] *= factor;
}

void contrast(Tensor& t, int i, double factor) {
    check_sample(t, i);
    const double mean = gray_mean(t, i);
    double* s = t.sample(i);
    const std::size_t n = t.sample_size();
    for (std::size_t p = 0; p < n; ++p) s[p] = mean + factor * (s[p] - mean);
}

void saturation(Tensor& t, int i, double factor) {
    check_sample(t, i);
    if (t.c != 3) return;
    double* r = t.plane(i, 0);
    double* g = t.plane(i, 1);
    double* b = t.plane(i, 2);
    const std::size_t n = t.plane_size();
    for (std::size_t p = 0; p < n; ++p) {
        const double gray = kR601 * r[p] + kG601 * g[p] + kB601 * b[p];
        r[p] = gray + factor * (r[p] - gray);
        g[p] = gray + factor * (g[p] - gray);
        b[p] = gray + factor * (b[p] - gray);
    }
}

void hue_shift(Tensor& t, int i, double turns) {
    check_sample(t, i);
    if (t.c != 3) return;
    double* r = t.plane(i, 0);
    double* g = t.plane(i, 1);
    double* b = t.plane(i, 2);
    const std::size_t n = t.plane_size();
    for (std::size_t p = 0; p < n; ++p) {
        Hsv hsv = rgb_to_hsv(r[p], g[p], b[p]);
        hsv.h = hsv.h + turns - std::floor(hsv.h + turns);
        hsv_to_rgb(hsv, r[p], g[p], b[p]);
    }
}

void clamp01(Tensor& t, int i) {
    check_sample(t, i);
    double* s = t.sample(i);
    const std::size_t n = t.sample_size();
    for (std::size_t p = 0; p < n; ++p) s[p] = std::clamp(s[p], 0.0, 1.0);
}

double gray_at(const Tensor& t, int i, int y, int x) {
    if (t.c == 1) return t.at(i, 0, y, x);
    return kR601 * t.at(i, 0, y, x) + kG601 * t.at(i, 1, y, x) + kB601 * t.at(i, 2, y, x);
}

double gray_mean(const Tensor& t, int i) {
    check_sample(t, i);
    double sum = 0.0;
    for (int y = 0; y < t.h; ++y)
        for (int x = 0; x < t.w; ++x) sum += gray_at(t, i, y, x);
    return sum / static_cast<double>(t.plane_size());
}

Tensor to_grayscale(const Tensor& t) {
    if (t.c == 1) return t;
    if (t.c != 3) throw InvalidArgument("to_grayscale: images must have 1 or 3 channels");
    Tensor out(t.n, 1, t.h, t.w);
    for (int i = 0; i < t.n; ++i) {
        const double* r = t.plane(i, 0);
        const double* g = t.plane(i, 1);
        const double* b = t.plane(i, 2);
        double* o = out.plane(i, 0);
        const std::size_t n = t.plane_size();
        for (std::size_t p = 0; p < n; ++p) o[p] = kR601 * r[p] + kG601 * g[p] + kB601 * b[p];
    }
    return out;
}

}  // namespace gatc::img
