#include "visualize.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "error.hpp"

namespace gatc {

Point2 map_to_2d(const Vector& label) {
    const Eigen::Index k = label.size();
    if (k < 1) throw InvalidArgument("map_to_2d: empty label feature");
    Point2 v;
    for (Eigen::Index h = 1; h <= k; ++h) {
        const double angle = 2.0 * M_PI * static_cast<double>(h) / static_cast<double>(k);
        v.x += label(h - 1) * std::sin(angle);
        v.y += label(h - 1) * std::cos(angle);
    }
    return v;
}

ScatterMap make_scatter(const Matrix& label_features, const std::vector<int>& truth,
                        std::optional<double> accuracy) {
    if (!truth.empty() && static_cast<Eigen::Index>(truth.size()) != label_features.rows())
        throw InvalidArgument("make_scatter: one ground-truth label per sample, or none");
    ScatterMap map;
    map.points.reserve(static_cast<std::size_t>(label_features.rows()));
    for (Eigen::Index i = 0; i < label_features.rows(); ++i)
        map.points.push_back(map_to_2d(label_features.row(i).transpose()));
    map.color_ids = truth;
    map.accuracy = accuracy;
    return map;
}

void write_scatter_csv(const ScatterMap& map, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("scatter: cannot write " + path.string());
    out << "x,y,color\n";
    out.precision(17);
    for (std::size_t i = 0; i < map.points.size(); ++i) {
        const int color = map.color_ids.empty() ? -1 : map.color_ids[i];
        out << map.points[i].x << ',' << map.points[i].y << ',' << color << '\n';
    }
}

namespace {

cv::Scalar class_color(int id) {
    // Cycled for datasets with more classes than the palette.
    static const cv::Scalar palette[] = {
        {180, 119, 31},  {14, 127, 255},  {44, 160, 44},  {40, 39, 214},
        {189, 103, 148}, {75, 86, 140},   {194, 119, 227}, {34, 189, 188},
    };
    if (id < 0) return {120, 120, 120};
    return palette[static_cast<std::size_t>(id) % (sizeof(palette) / sizeof(palette[0]))];
}

}  // namespace

void write_scatter_png(const ScatterMap& map, const std::filesystem::path& path, int size) {
    if (size < 64) throw InvalidArgument("scatter: plot size too small");
    cv::Mat canvas(size, size, CV_8UC3, cv::Scalar(255, 255, 255));
    const double radius = size / 2.0 - 0.05 * size;
    const cv::Point center(size / 2, size / 2);
    cv::circle(canvas, center, static_cast<int>(radius), cv::Scalar(200, 200, 200), 1, cv::LINE_AA);

    for (std::size_t i = 0; i < map.points.size(); ++i) {
        const cv::Point p(center.x + static_cast<int>(std::lround(map.points[i].x * radius)),
                          center.y - static_cast<int>(std::lround(map.points[i].y * radius)));
        const int color = map.color_ids.empty() ? -1 : map.color_ids[i];
        cv::circle(canvas, p, std::max(2, size / 160), class_color(color), cv::FILLED, cv::LINE_AA);
    }
    if (map.accuracy) {
        char text[32];
        std::snprintf(text, sizeof(text), "ACC %.3f", *map.accuracy);
        cv::putText(canvas, text, cv::Point(size / 20, size / 12), cv::FONT_HERSHEY_SIMPLEX,
                    size / 800.0, cv::Scalar(40, 40, 40), 1, cv::LINE_AA);
    }
    bool written = false;
    try {
        written = cv::imwrite(path.string(), canvas);
    } catch (const cv::Exception&) {
    }
    if (!written) throw IoError("scatter: cannot write " + path.string());
}

void render_attention_overlay(const Tensor& image, const Matrix& attention,
                              const std::filesystem::path& out) {
    if (image.n != 1 || (image.c != 1 && image.c != 3))
        throw InvalidArgument("attention overlay: expected one sample with 1 or 3 channels");
    if (attention.rows() < 1 || attention.cols() < 1)
        throw InvalidArgument("attention overlay: empty attention map");

    cv::Mat base(image.h, image.w, CV_8UC3);
    for (int y = 0; y < image.h; ++y) {
        cv::Vec3b* row = base.ptr<cv::Vec3b>(y);
        for (int x = 0; x < image.w; ++x) {
            auto to8 = [&](int c) {
                const double v = image.at(0, std::min(c, image.c - 1), y, x);
                return cv::saturate_cast<uchar>(std::lround(v * 255.0));
            };
            row[x] = cv::Vec3b(to8(2), to8(1), to8(0));  // tensor is RGB, PNG wants BGR
        }
    }

    // Scaling by the peak keeps a uniform map uniform (everything at full
    // tint) instead of amplifying noise the way min-max stretching would.
    cv::Mat heat(static_cast<int>(attention.rows()), static_cast<int>(attention.cols()), CV_8UC1);
    const double peak = attention.maxCoeff();
    for (int y = 0; y < heat.rows; ++y)
        for (int x = 0; x < heat.cols; ++x)
            heat.at<uchar>(y, x) = cv::saturate_cast<uchar>(
                std::lround(peak > 0 ? attention(y, x) / peak * 255.0 : 0.0));
    cv::Mat heat_big;
    cv::resize(heat, heat_big, cv::Size(image.w, image.h), 0, 0, cv::INTER_LINEAR);
    cv::Mat colored;
    cv::applyColorMap(heat_big, colored, cv::COLORMAP_JET);

    cv::Mat blended;
    cv::addWeighted(base, 0.55, colored, 0.45, 0.0, blended);
    bool written = false;
    try {
        written = cv::imwrite(out.string(), blended);
    } catch (const cv::Exception&) {
    }
    if (!written) throw IoError("attention overlay: cannot write " + out.string());
}

Matrix dataset_label_features(const ImageSource& data, GatNetwork& net, int sub_batch) {
    if (sub_batch < 1) throw InvalidArgument("dataset_label_features: sub_batch must be positive");
    const int n = data.size();
    Matrix all(n, net.config().cluster_count);
    for (int start = 0; start < n; start += sub_batch) {
        const int count = std::min(sub_batch, n - start);
        std::vector<int> ids(static_cast<std::size_t>(count));
        std::iota(ids.begin(), ids.end(), start);
        const ImageBatch batch = data.batch(ids);
        all.middleRows(start, count) = net.label_features_eval(batch.samples);
    }
    return all;
}

}  // namespace gatc
