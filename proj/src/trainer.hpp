#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <vector>

#include "adam.hpp"
#include "checkpoint.hpp"
#include "dataset.hpp"
#include "losses.hpp"
#include "network.hpp"
#include "transforms.hpp"

namespace gatc {

struct TrainConfig {
    int epochs = 0;
    int macro_batch = 0;  ///< M; clipped to the dataset size at run time
    int sub_batch = 0;    ///< m1, bounds resident images during target computation
    int mini_batch = 32;  ///< m2, the optimizer step granularity
    double learning_rate = 1e-3;
    LossWeights weights;
    std::uint64_t seed = 0;
    std::int64_t checkpoint_every = 0;  ///< optimizer steps; 0 writes only the final state
    TransformConfig transforms;

    void validate() const;

    bool operator==(const TrainConfig&) const = default;
};

struct StepRecord {
    std::int64_t step = 0;
    int epoch = 0;
    int macro_index = 0;
    LossBreakdown loss;
};

struct EpochMetrics {
    double acc = 0.0;
    double nmi = 0.0;
    double ari = 0.0;
    bool degenerate_nmi = false;
};

/// Scores an epoch's cluster assignments against ground truth the trainer
/// itself never sees; disengaged (or returning nullopt) when there is none.
using MetricsHook = std::function<std::optional<EpochMetrics>(const std::vector<int>& assignments)>;

struct EpochRecord {
    int epoch = 0;
    std::optional<EpochMetrics> metrics;
};

struct TrainHistory {
    std::vector<StepRecord> steps;
    std::vector<EpochRecord> epochs;
    long peak_step1_images = 0;  ///< decoded images coexisting during target computation
    long peak_step2_images = 0;  ///< same during the optimization sweep
    bool aborted = false;        ///< a non-finite loss stopped the run
    std::int64_t abort_step = -1;
    LossBreakdown abort_loss;
};

/// The two-step training loop: per macro-batch, first infer pseudo-targets in
/// evaluation mode over small sub-batches, then optimize mini-batches of the
/// transformed macro-batch against those frozen targets.
class Trainer {
  public:
    /// `out_dir` empty → no files; otherwise per-step CSV, per-epoch JSON
    /// lines and checkpoints are written there.
    Trainer(ImageSource& images, GatNetwork& net, const TrainConfig& cfg,
            std::filesystem::path out_dir = {}, MetricsHook metrics = {});

    /// Restores model, optimizer and progress counters; call before run().
    void resume(const std::filesystem::path& checkpoint);

    /// Trains from the current counters to cfg.epochs.
    TrainHistory run();

    /// Evaluation-mode cluster id per dataset sample.
    std::vector<int> final_inference();

    const TrainCounters& counters() const { return counters_; }

  private:
    Matrix eval_features(const std::vector<int>& ids);
    void save_checkpoint(const std::string& filename);
    void log_step(const StepRecord& rec);
    void log_epoch(const EpochRecord& rec);

    ImageSource& images_;
    GatNetwork& net_;
    TrainConfig cfg_;
    std::filesystem::path out_dir_;
    MetricsHook metrics_;
    Adam adam_;
    TrainCounters counters_;
    std::int64_t last_checkpoint_step_ = 0;
    std::ofstream step_log_;
    std::ofstream epoch_log_;
};

}  // namespace gatc
