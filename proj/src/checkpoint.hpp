#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "layers.hpp"
#include "network.hpp"

namespace gatc {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Training progress. epoch/macro_index name the next macro-batch to run, so
/// a resumed run picks up exactly where the saved one stopped.
struct TrainCounters {
    std::int64_t epoch = 0;
    std::int64_t macro_index = 0;
    std::int64_t step = 0;       ///< optimizer steps completed
    std::int64_t adam_step = 0;  ///< bias-correction clock of the optimizer

    bool operator==(const TrainCounters&) const = default;
};

struct CheckpointMeta {
    ModelConfig model;
    TrainCounters counters;
    std::uint64_t seed = 0;
};

/// Writes magic, format version, a JSON description and the raw arrays.
/// The file appears atomically: data goes to a temporary next to `path`
/// which is renamed over it only once fully written.
void write_checkpoint(const std::filesystem::path& path, const CheckpointMeta& meta,
                      const std::vector<StateView>& arrays);

struct Checkpoint {
    CheckpointMeta meta;
    std::map<std::string, std::vector<double>> arrays;
};

Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Copies the named arrays into the given views. Every view must exist in
/// the checkpoint with exactly matching size; extra arrays in the file are
/// ignored, so a model can be restored without its optimizer state.
void restore_arrays(const Checkpoint& ckpt, const std::vector<StateView>& views);

// JSON form of the model geometry, shared by checkpoints and run configs.
void to_json(nlohmann::json& j, const ModelConfig& cfg);
void from_json(const nlohmann::json& j, ModelConfig& cfg);

}  // namespace gatc
