#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "tensor.hpp"
#include "transforms.hpp"

namespace gatc {

struct DatasetSpec {
    std::string root_path;
    int height = 0;
    int width = 0;
    bool grayscale = false;
    int cluster_count = 0;
    bool has_ground_truth = false;

    void validate() const;

    bool operator==(const DatasetSpec&) const = default;
};

/// Process-wide count of decoded images currently held alive by ImageBatch
/// objects. Every batch carries an RAII token, so peak() measures how many
/// decoded samples coexisted, which is what bounds training memory.
class DecodedImageGauge {
  public:
    static long current();
    static long peak();
    static void reset_peak();

  private:
    friend class GaugeToken;
    static void add(long n);
};

class GaugeToken {
  public:
    GaugeToken() = default;
    explicit GaugeToken(long n);
    GaugeToken(const GaugeToken& o);
    GaugeToken& operator=(const GaugeToken& o);
    GaugeToken(GaugeToken&& o) noexcept;
    GaugeToken& operator=(GaugeToken&& o) noexcept;
    ~GaugeToken();

  private:
    long n_ = 0;
};

struct ImageBatch {
    Tensor samples;            ///< (count, channels, height, width) in [0,1]
    std::vector<int> indices;  ///< dataset sample ids, unique within the batch
    GaugeToken token;
};

/// What the trainer is allowed to see: images only. Ground-truth labels live
/// on Dataset below and stay out of reach of training code by construction.
class ImageSource {
  public:
    virtual ~ImageSource() = default;
    virtual int size() const = 0;
    virtual int channels() const = 0;
    virtual int height() const = 0;
    virtual int width() const = 0;

    /// Decodes the requested samples, model-ready (grayscale already applied
    /// when the dataset is configured for it).
    virtual ImageBatch batch(const std::vector<int>& indices) const = 0;

    /// Decodes and augments. Transform draws are keyed by sample id, so a
    /// sample gets the same transform for a given seed regardless of the
    /// batch it appears in.
    virtual ImageBatch transformed_batch(const std::vector<int>& indices, const TransformConfig& cfg,
                                         std::uint64_t seed) const = 0;
};

class Dataset : public ImageSource {
  public:
    virtual bool has_ground_truth() const = 0;
    /// One label per sample; empty when has_ground_truth() is false.
    virtual const std::vector<int>& ground_truth() const = 0;
    virtual int cluster_count() const = 0;
};

/// Loads an image folder: either labels.csv ("relative_path,label" lines),
/// or one subdirectory per class, or a flat directory of unlabeled images.
std::unique_ptr<Dataset> load_dataset(const DatasetSpec& spec);

/// Deterministic generated dataset of k shape classes, n_per_class each,
/// labels interleaved (sample i has class i mod k). Images are rendered on
/// demand from the seed, so no pixels persist between batches.
std::unique_ptr<Dataset> make_synthetic_shapes(int k, int n_per_class, int height, int width,
                                               std::uint64_t seed);

}  // namespace gatc
