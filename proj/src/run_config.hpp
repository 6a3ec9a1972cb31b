#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "dataset.hpp"
#include "json.hpp"
#include "network.hpp"
#include "trainer.hpp"

namespace gatc {

/// Where the samples come from: an image folder on disk, or the generated
/// shapes set rendered on demand.
struct DataConfig {
    enum class Kind { kFolder, kSynthetic };

    Kind kind = Kind::kFolder;
    DatasetSpec folder;  ///< kind == kFolder

    // kind == kSynthetic
    int classes = 0;
    int per_class = 0;
    int height = 0;
    int width = 0;
    std::uint64_t seed = 0;

    void validate() const;
    std::unique_ptr<Dataset> open() const;

    bool operator==(const DataConfig&) const = default;
};

/// One experiment, fully described. This is the file a run directory echoes
/// back, so a run can always be repeated from its own artifacts.
struct RunConfig {
    DataConfig data;
    ModelConfig model;
    TrainConfig train;
    std::string output_dir;  ///< relative paths resolve under the output root

    void validate() const;

    bool operator==(const RunConfig&) const = default;
};

/// Strict in both directions: parsing rejects unknown keys anywhere in the
/// tree, and parse(serialize(c)) == c for every valid config.
nlohmann::json run_config_to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const nlohmann::json& j);

/// The data section alone, same strictness. Lets tools accept a dataset
/// description without a whole run config around it.
nlohmann::json data_config_to_json(const DataConfig& d);
DataConfig data_config_from_json(const nlohmann::json& j);

RunConfig load_run_config(const std::filesystem::path& path);
void save_run_config(const std::filesystem::path& path, const RunConfig& cfg);

/// Run directories land under $GATCLUSTER_OUTPUT_ROOT unless the configured
/// path is already absolute; an unset root means the current directory.
std::filesystem::path resolve_output_dir(const std::string& configured);

}  // namespace gatc
