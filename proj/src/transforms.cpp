#include "transforms.hpp"

#include <array>
#include <cmath>

#include "error.hpp"
#include "image_ops.hpp"
#include "rng.hpp"

namespace gatc {

namespace {

constexpr double kPi = 3.14159265358979323846;

/// 2x3 affine in (x, y) coordinates.
struct Affine {
    // clang-format off
    double a = 1.0, b = 0.0, tx = 0.0,
           c = 0.0, d = 1.0, ty = 0.0;
    // clang-format on

    bool is_identity() const {
        return a == 1.0 && b == 0.0 && tx == 0.0 && c == 0.0 && d == 1.0 && ty == 0.0;
    }

    /// this ∘ other: apply `other` first.
    Affine then(const Affine& o) const {
        Affine r;
        r.a = a * o.a + b * o.c;
        r.b = a * o.b + b * o.d;
        r.tx = a * o.tx + b * o.ty + tx;
        r.c = c * o.a + d * o.c;
        r.d = c * o.b + d * o.d;
        r.ty = c * o.tx + d * o.ty + ty;
        return r;
    }

    std::array<double, 6> coeffs() const { return {a, b, tx, c, d, ty}; }
};

Affine translation(double tx, double ty) {
    Affine m;
    m.tx = tx;
    m.ty = ty;
    return m;
}

Affine rotation(double radians) {
    Affine m;
    m.a = std::cos(radians);
    m.b = -std::sin(radians);
    m.c = std::sin(radians);
    m.d = std::cos(radians);
    return m;
}

Affine shear_x(double radians) {
    Affine m;
    m.b = std::tan(radians);
    return m;
}

Affine scaling(double s) {
    Affine m;
    m.a = s;
    m.d = s;
    return m;
}

}  // namespace

void TransformConfig::validate() const {
    if (flip_prob < 0.0 || flip_prob > 1.0)
        throw InvalidArgument("TransformConfig: flip_prob outside [0,1]");
    if (rotation_deg < 0.0 || translate_frac < 0.0 || shear_deg < 0.0)
        throw InvalidArgument("TransformConfig: negative affine range");
    if (!(scale_min <= 1.0 && 1.0 <= scale_max) || scale_min <= 0.0)
        throw InvalidArgument("TransformConfig: scale range must straddle 1");
    if (brightness < 0.0 || brightness > 1.0 || contrast < 0.0 || contrast > 1.0 ||
        saturation < 0.0 || saturation > 1.0)
        throw InvalidArgument("TransformConfig: jitter strengths must lie in [0,1]");
    if (hue < 0.0 || hue > 0.5) throw InvalidArgument("TransformConfig: hue must lie in [0,0.5]");
}

TransformConfig identity_transform() {
    TransformConfig cfg;
    cfg.flip_prob = 0.0;
    cfg.rotation_deg = 0.0;
    cfg.translate_frac = 0.0;
    cfg.scale_min = 1.0;
    cfg.scale_max = 1.0;
    cfg.shear_deg = 0.0;
    cfg.brightness = 0.0;
    cfg.contrast = 0.0;
    cfg.saturation = 0.0;
    cfg.hue = 0.0;
    return cfg;
}

Tensor transform_images(const Tensor& images, const std::vector<int>& ids, const TransformConfig& cfg,
                        bool to_grayscale, std::uint64_t seed) {
    cfg.validate();
    if (images.n == 0) throw InvalidArgument("transform_images: empty batch");
    if (static_cast<int>(ids.size()) != images.n)
        throw InvalidArgument("transform_images: one id per sample required");

    Tensor out = images;
    for (int i = 0; i < images.n; ++i) {
        Rng rng(derive_seed(seed, "transform", static_cast<std::uint64_t>(ids[static_cast<std::size_t>(i)])));

        // Every parameter is drawn unconditionally so disabling one range
        // never shifts the draws of the others.
        const bool flip = rng.bernoulli(cfg.flip_prob);
        const double rot = rng.uniform(-cfg.rotation_deg, cfg.rotation_deg) * kPi / 180.0;
        const double tx = rng.uniform(-cfg.translate_frac, cfg.translate_frac) * images.w;
        const double ty = rng.uniform(-cfg.translate_frac, cfg.translate_frac) * images.h;
        const double scale = rng.uniform(cfg.scale_min, cfg.scale_max);
        const double shear = rng.uniform(-cfg.shear_deg, cfg.shear_deg) * kPi / 180.0;
        const double f_brightness = rng.uniform(1.0 - cfg.brightness, 1.0 + cfg.brightness);
        const double f_contrast = rng.uniform(1.0 - cfg.contrast, 1.0 + cfg.contrast);
        const double f_saturation = rng.uniform(1.0 - cfg.saturation, 1.0 + cfg.saturation);
        const double f_hue = rng.uniform(-cfg.hue, cfg.hue);

        if (flip) img::hflip(out, i);

        // Inverse map (source from destination) around the image center:
        // forward = C . translate . rotate . shear . scale . C^-1.
        const double cx = (images.w - 1) / 2.0;
        const double cy = (images.h - 1) / 2.0;
        const Affine inv = translation(cx, cy)
                               .then(scaling(1.0 / scale))
                               .then(shear_x(-shear))
                               .then(rotation(-rot))
                               .then(translation(-tx, -ty))
                               .then(translation(-cx, -cy));
        if (!inv.is_identity()) img::warp_affine(out, i, inv.coeffs());

        if (f_brightness != 1.0) img::brightness(out, i, f_brightness);
        if (f_contrast != 1.0) img::contrast(out, i, f_contrast);
        if (f_saturation != 1.0) img::saturation(out, i, f_saturation);
        if (f_hue != 0.0) img::hue_shift(out, i, f_hue);
        if (f_brightness != 1.0 || f_contrast != 1.0 || f_saturation != 1.0 || f_hue != 0.0)
            img::clamp01(out, i);
    }
    return to_grayscale ? img::to_grayscale(out) : out;
}

}  // namespace gatc
