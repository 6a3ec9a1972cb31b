#pragma once

#include <array>

#include "tensor.hpp"

namespace gatc::img {

void hflip(Tensor& t, int i);

/// Warps sample i in place. `inv` is the 2x3 source-from-destination affine in
/// (x, y) coordinates, row-major: src_x = m0*x + m1*y + m2, src_y = m3*x +
/// m4*y + m5. Bilinear sampling with replicated borders; an exact identity
/// matrix leaves the pixels bit-identical.
void warp_affine(Tensor& t, int i, const std::array<double, 6>& inv);

void brightness(Tensor& t, int i, double factor);

/// Blends toward the mean gray level of the sample.
void contrast(Tensor& t, int i, double factor);

/// Blends toward the per-pixel gray level. No-op on single-channel samples.
void saturation(Tensor& t, int i, double factor);

/// Rotates hue by `turns` of the full circle via HSV. No-op on single-channel
/// samples.
void hue_shift(Tensor& t, int i, double turns);

void clamp01(Tensor& t, int i);

/// Rec.601 luma of pixel (y, x) of sample i; the pixel itself when
/// single-channel.
double gray_at(const Tensor& t, int i, int y, int x);

/// Mean gray level over sample i.
double gray_mean(const Tensor& t, int i);

/// Collapses a 3-channel batch to Rec.601 grayscale; copies 1-channel input
/// through unchanged.
Tensor to_grayscale(const Tensor& t);

}  // namespace gatc::img
