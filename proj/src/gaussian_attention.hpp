#pragma once

#include "tensor.hpp"

namespace gatc {

/// Isotropic Gaussian attention over a spatial grid. Grid positions are
/// normalized to [0,1] per axis as i/(H-1); a single-element axis sits at 0.5.
/// The map value at position u is exp(-(1/alpha) * |u - mu|^2 / delta), i.e.
/// the covariance is delta * I and alpha acts as a fixed temperature.
struct AttentionParams {
    double mu_r = 0.5;   ///< center, row axis, expected in [0,1]
    double mu_c = 0.5;   ///< center, column axis, expected in [0,1]
    double delta = 1.0;  ///< isotropic variance, must be > 0
};

inline constexpr double kAttentionAlpha = 0.05;

Matrix gaussian_attention_map(const AttentionParams& p, int h, int w, double alpha = kAttentionAlpha);

/// Backward pass: given the upstream map gradient, returns d(loss)/d(params).
AttentionParams gaussian_attention_map_grad(const AttentionParams& p, int h, int w, const Matrix& dmap,
                                            double alpha = kAttentionAlpha);

}  // namespace gatc
