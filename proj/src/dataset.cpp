#include "dataset.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <utility>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "error.hpp"
#include "image_ops.hpp"
#include "rng.hpp"
#include "synthetic.hpp"

namespace fs = std::filesystem;

namespace gatc {

namespace {

std::atomic<long> g_gauge_current{0};
std::atomic<long> g_gauge_peak{0};

bool has_image_extension(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp";
}

void check_unique(const std::vector<int>& indices, int size) {
    if (indices.empty()) throw InvalidArgument("dataset: empty batch request");
    std::set<int> seen;
    for (int i : indices) {
        if (i < 0 || i >= size) throw InvalidArgument("dataset: sample index out of range");
        if (!seen.insert(i).second) throw InvalidArgument("dataset: duplicate sample index in batch");
    }
}

/// Shared batch assembly on top of a per-sample raw decoder. Raw images keep
/// their native channel count; grayscale conversion comes after any jitter.
class DecodingDataset : public Dataset {
  public:
    ImageBatch batch(const std::vector<int>& indices) const final {
        Tensor raw = decode_batch(indices);
        ImageBatch out;
        out.samples = grayscale_ ? img::to_grayscale(raw) : std::move(raw);
        out.indices = indices;
        out.token = GaugeToken(static_cast<long>(indices.size()));
        return out;
    }

    ImageBatch transformed_batch(const std::vector<int>& indices, const TransformConfig& cfg,
                                 std::uint64_t seed) const final {
        Tensor raw = decode_batch(indices);
        ImageBatch out;
        out.samples = transform_images(raw, indices, cfg, grayscale_, seed);
        out.indices = indices;
        out.token = GaugeToken(static_cast<long>(indices.size()));
        return out;
    }

    int channels() const final { return grayscale_ ? 1 : native_channels(); }

  protected:
    explicit DecodingDataset(bool grayscale) : grayscale_(grayscale) {}

    virtual Tensor decode_batch(const std::vector<int>& indices) const = 0;
    virtual int native_channels() const = 0;

  private:
    bool grayscale_;
};

class FolderDataset final : public DecodingDataset {
  public:
    FolderDataset(DatasetSpec spec, std::vector<std::string> paths, std::vector<int> labels)
        : DecodingDataset(spec.grayscale),
          spec_(std::move(spec)),
          paths_(std::move(paths)),
          labels_(std::move(labels)) {}

    int size() const override { return static_cast<int>(paths_.size()); }
    int height() const override { return spec_.height; }
    int width() const override { return spec_.width; }
    bool has_ground_truth() const override { return !labels_.empty(); }
    const std::vector<int>& ground_truth() const override { return labels_; }
    int cluster_count() const override { return spec_.cluster_count; }

  protected:
    int native_channels() const override { return 3; }

    Tensor decode_batch(const std::vector<int>& indices) const override {
        check_unique(indices, size());
        Tensor out(static_cast<int>(indices.size()), 3, spec_.height, spec_.width);
        for (std::size_t pos = 0; pos < indices.size(); ++pos) {
            const std::string& path = paths_[static_cast<std::size_t>(indices[pos])];
            cv::Mat bgr = cv::imread(path, cv::IMREAD_COLOR);
            if (bgr.empty()) throw IoError("dataset: cannot decode image " + path);
            cv::Mat f64;
            bgr.convertTo(f64, CV_64FC3, 1.0 / 255.0);
            if (f64.rows != spec_.height || f64.cols != spec_.width) {
                cv::Mat resized;
                cv::resize(f64, resized, cv::Size(spec_.width, spec_.height), 0, 0, cv::INTER_LINEAR);
                f64 = resized;
            }
            const int i = static_cast<int>(pos);
            for (int y = 0; y < spec_.height; ++y) {
                const cv::Vec3d* row = f64.ptr<cv::Vec3d>(y);
                for (int x = 0; x < spec_.width; ++x) {
                    out.at(i, 0, y, x) = row[x][2];  // OpenCV stores BGR
                    out.at(i, 1, y, x) = row[x][1];
                    out.at(i, 2, y, x) = row[x][0];
                }
            }
        }
        return out;
    }

  private:
    DatasetSpec spec_;
    std::vector<std::string> paths_;
    std::vector<int> labels_;
};

class SyntheticDataset final : public DecodingDataset {
  public:
    SyntheticDataset(int k, int n_per_class, int height, int width, std::uint64_t seed)
        : DecodingDataset(false), k_(k), height_(height), width_(width), seed_(seed) {
        if (k < 2 || k > kSyntheticShapeCount)
            throw InvalidArgument("synthetic dataset: cluster count must lie in [2, " +
                                  std::to_string(kSyntheticShapeCount) + "]");
        if (n_per_class < 1) throw InvalidArgument("synthetic dataset: n_per_class must be positive");
        if (height < 8 || width < 8) throw InvalidArgument("synthetic dataset: image size below 8x8");
        labels_.resize(static_cast<std::size_t>(k) * n_per_class);
        for (std::size_t i = 0; i < labels_.size(); ++i) labels_[i] = static_cast<int>(i) % k;
    }

    int size() const override { return static_cast<int>(labels_.size()); }
    int height() const override { return height_; }
    int width() const override { return width_; }
    bool has_ground_truth() const override { return true; }
    const std::vector<int>& ground_truth() const override { return labels_; }
    int cluster_count() const override { return k_; }

  protected:
    int native_channels() const override { return 1; }

    Tensor decode_batch(const std::vector<int>& indices) const override {
        check_unique(indices, size());
        Tensor out(static_cast<int>(indices.size()), 1, height_, width_);
        for (std::size_t pos = 0; pos < indices.size(); ++pos) {
            const int id = indices[pos];
            Rng rng(derive_seed(seed_, "synthetic", static_cast<std::uint64_t>(id)));
            render_synthetic_sample(out, static_cast<int>(pos), id % k_, rng);
        }
        return out;
    }

  private:
    int k_, height_, width_;
    std::uint64_t seed_;
    std::vector<int> labels_;
};

}  // namespace

void DatasetSpec::validate() const {
    if (height < 8 || width < 8) throw InvalidArgument("DatasetSpec: image size below 8x8");
    if (cluster_count < 2) throw InvalidArgument("DatasetSpec: cluster count must be at least 2");
}

long DecodedImageGauge::current() { return g_gauge_current.load(); }
long DecodedImageGauge::peak() { return g_gauge_peak.load(); }
void DecodedImageGauge::reset_peak() { g_gauge_peak.store(g_gauge_current.load()); }

void DecodedImageGauge::add(long n) {
    const long now = g_gauge_current.fetch_add(n) + n;
    long peak = g_gauge_peak.load();
    while (now > peak && !g_gauge_peak.compare_exchange_weak(peak, now)) {
    }
}

GaugeToken::GaugeToken(long n) : n_(n) { DecodedImageGauge::add(n_); }
GaugeToken::GaugeToken(const GaugeToken& o) : n_(o.n_) { DecodedImageGauge::add(n_); }
GaugeToken::GaugeToken(GaugeToken&& o) noexcept : n_(o.n_) { o.n_ = 0; }
GaugeToken::~GaugeToken() { DecodedImageGauge::add(-n_); }

GaugeToken& GaugeToken::operator=(const GaugeToken& o) {
    if (this != &o) {
        DecodedImageGauge::add(o.n_ - n_);
        n_ = o.n_;
    }
    return *this;
}

GaugeToken& GaugeToken::operator=(GaugeToken&& o) noexcept {
    if (this != &o) {
        DecodedImageGauge::add(-n_);
        n_ = o.n_;
        o.n_ = 0;
    }
    return *this;
}

std::unique_ptr<Dataset> load_dataset(const DatasetSpec& spec) {
    spec.validate();
    const fs::path root(spec.root_path);
    if (!fs::exists(root)) throw IoError("dataset: path does not exist: " + spec.root_path);

    std::vector<std::string> paths;
    std::vector<int> labels;

    const fs::path manifest = root / "labels.csv";
    if (fs::exists(manifest)) {
        std::ifstream in(manifest);
        if (!in) throw IoError("dataset: cannot open " + manifest.string());
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const std::size_t comma = line.find_last_of(',');
            if (comma == std::string::npos)
                throw IoError("dataset: malformed manifest line: " + line);
            paths.push_back((root / line.substr(0, comma)).string());
            labels.push_back(std::stoi(line.substr(comma + 1)));
        }
    } else {
        std::vector<fs::path> class_dirs;
        for (const auto& entry : fs::directory_iterator(root)) {
            if (entry.is_directory()) class_dirs.push_back(entry.path());
        }
        std::sort(class_dirs.begin(), class_dirs.end());

        if (!class_dirs.empty()) {
            for (std::size_t cls = 0; cls < class_dirs.size(); ++cls) {
                std::vector<fs::path> files;
                for (const auto& entry : fs::directory_iterator(class_dirs[cls])) {
                    if (entry.is_regular_file() && has_image_extension(entry.path()))
                        files.push_back(entry.path());
                }
                std::sort(files.begin(), files.end());
                for (const auto& f : files) {
                    paths.push_back(f.string());
                    labels.push_back(static_cast<int>(cls));
                }
            }
        } else {
            std::vector<fs::path> files;
            for (const auto& entry : fs::directory_iterator(root)) {
                if (entry.is_regular_file() && has_image_extension(entry.path()))
                    files.push_back(entry.path());
            }
            std::sort(files.begin(), files.end());
            for (const auto& f : files) paths.push_back(f.string());
        }
    }

    if (paths.empty()) throw IoError("dataset: no samples found under " + spec.root_path);
    if (spec.has_ground_truth && labels.empty())
        throw IoError("dataset: ground truth requested but no class layout or manifest present");

    if (!labels.empty()) {
        const int classes = *std::max_element(labels.begin(), labels.end()) + 1;
        if (classes != spec.cluster_count) {
            std::cerr << "dataset: warning: " << classes << " classes on disk but k = "
                      << spec.cluster_count << "\n";
        }
    }
    return std::make_unique<FolderDataset>(spec, std::move(paths), std::move(labels));
}

std::unique_ptr<Dataset> make_synthetic_shapes(int k, int n_per_class, int height, int width,
                                               std::uint64_t seed) {
    return std::make_unique<SyntheticDataset>(k, n_per_class, height, width, seed);
}

}  // namespace gatc
