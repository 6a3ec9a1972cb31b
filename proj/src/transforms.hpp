#pragma once

#include <cstdint>
#include <vector>

#include "tensor.hpp"

namespace gatc {

/// Ranges for the stochastic augmentation pipeline: flip, affine (rotation,
/// translation, scale, shear), then color jitter. Every range is centered on
/// the identity, so the identity transform is always in the support and an
/// all-zero config (with scale range [1,1]) is the exact identity.
struct TransformConfig {
    double flip_prob = 0.5;
    double rotation_deg = 10.0;
    double translate_frac = 0.1;
    double scale_min = 0.9;
    double scale_max = 1.1;
    double shear_deg = 5.0;
    double brightness = 0.3;
    double contrast = 0.3;
    double saturation = 0.3;
    double hue = 0.1;

    void validate() const;

    bool operator==(const TransformConfig&) const = default;
};

/// Config under which transform_images copies its input bit for bit.
TransformConfig identity_transform();

/// Applies an independently drawn transform to every sample. Draws are keyed
/// by derive_seed(seed, "transform", ids[i]), so a sample receives the same
/// transform no matter which batch it appears in. Grayscale conversion, when
/// requested, happens after the color jitter. Output pixels are clamped to
/// [0,1].
Tensor transform_images(const Tensor& images, const std::vector<int>& ids, const TransformConfig& cfg,
                        bool to_grayscale, std::uint64_t seed);

}  // namespace gatc
