#pragma once

#include "rng.hpp"
#include "tensor.hpp"

namespace gatc {

/// Shape generators available to the synthetic dataset, in label order:
/// disk, square, triangle, cross, ring, diamond, saltire, double_bar.
inline constexpr int kSyntheticShapeCount = 8;

const char* synthetic_shape_name(int shape_id);

/// Renders one shape onto sample i: noisy dark background, one bright shape
/// at a random position and scale. Consumes a fixed number of draws from rng
/// for a given image size, so per-image streams stay independent.
void render_synthetic_sample(Tensor& t, int i, int shape_id, Rng& rng);

}  // namespace gatc
