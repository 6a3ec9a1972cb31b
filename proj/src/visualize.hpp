#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "dataset.hpp"
#include "network.hpp"
#include "tensor.hpp"

namespace gatc {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

/// Projects a label feature into the unit disk: cluster h of k sits at the
/// regular k-gon vertex (sin 2*pi*h/k, cos 2*pi*h/k) for h = 1..k, and a soft
/// assignment lands at the convex combination of its vertices. One-hot inputs
/// hit the vertices exactly; the uniform vector maps to the origin.
Point2 map_to_2d(const Vector& label);

/// Every sample's projected label feature, ready to plot.
struct ScatterMap {
    std::vector<Point2> points;
    std::vector<int> color_ids;      ///< ground-truth classes; empty when unknown
    std::optional<double> accuracy;  ///< annotation for the rendered plot
};

ScatterMap make_scatter(const Matrix& label_features, const std::vector<int>& truth = {},
                        std::optional<double> accuracy = {});

/// One "x,y,color" row per sample, color -1 when ground truth is unknown.
void write_scatter_csv(const ScatterMap& map, const std::filesystem::path& path);

/// Rasterizes the scatter inside the unit circle to a size x size PNG.
void write_scatter_png(const ScatterMap& map, const std::filesystem::path& path, int size = 640);

/// Upsamples the attention map to the image size (bilinear), then alpha-blends
/// it over the image as a heatmap and writes a PNG of the image's dimensions.
/// `image` is a single decoded sample, shape (1, c, h, w) in [0, 1].
void render_attention_overlay(const Tensor& image, const Matrix& attention,
                              const std::filesystem::path& out);

/// Label features of every sample, evaluated in chunks of at most sub_batch
/// decoded images so the memory bound of training holds here too.
Matrix dataset_label_features(const ImageSource& data, GatNetwork& net, int sub_batch);

}  // namespace gatc
