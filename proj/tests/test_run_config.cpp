#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <unistd.h>

#include "doctest.h"
#include "error.hpp"
#include "run_config.hpp"

using namespace gatc;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("gatc_runcfg_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

RunConfig synthetic_config() {
    RunConfig cfg;
    cfg.data.kind = DataConfig::Kind::kSynthetic;
    cfg.data.classes = 3;
    cfg.data.per_class = 10;
    cfg.data.height = 16;
    cfg.data.width = 16;
    cfg.data.seed = 9;
    cfg.model.height = 16;
    cfg.model.width = 16;
    cfg.model.in_channels = 1;
    cfg.model.cluster_count = 3;
    cfg.model.conv_blocks = {{6}};
    cfg.model.attention_h = 7;
    cfg.model.attention_w = 7;
    cfg.train.epochs = 1;
    cfg.train.macro_batch = 30;
    cfg.train.sub_batch = 10;
    cfg.train.mini_batch = 5;
    cfg.train.seed = 21;
    cfg.output_dir = "runs/demo";
    return cfg;
}

}  // namespace

TEST_CASE("serialization round-trips losslessly") {
    RunConfig cfg = synthetic_config();
    cfg.train.learning_rate = 3.25e-4;
    cfg.train.checkpoint_every = 17;
    cfg.train.weights = {1.25, 0.0, 7.5};
    cfg.train.transforms.rotation_deg = 22.5;
    cfg.train.transforms.hue = 0.05;
    cfg.model.alpha = 0.125;

    const RunConfig back = run_config_from_json(run_config_to_json(cfg));
    CHECK(back == cfg);

    RunConfig folder = cfg;
    folder.data = {};
    folder.data.kind = DataConfig::Kind::kFolder;
    folder.data.folder = {"/data/imagefolder", 16, 16, true, 3, true};
    CHECK(run_config_from_json(run_config_to_json(folder)) == folder);
}

TEST_CASE("unknown keys are rejected at every level") {
    const nlohmann::json good = run_config_to_json(synthetic_config());

    auto poisoned = [&](std::initializer_list<const char*> where) {
        nlohmann::json j = good;
        nlohmann::json* at = &j;
        for (const char* key : where) at = &(*at)[key];
        (*at)["surprise"] = 1;
        return j;
    };

    CHECK_THROWS_WITH_AS(run_config_from_json(poisoned({})), doctest::Contains("surprise"),
                         InvalidArgument);
    CHECK_THROWS_AS(run_config_from_json(poisoned({"data"})), InvalidArgument);
    CHECK_THROWS_AS(run_config_from_json(poisoned({"model"})), InvalidArgument);
    CHECK_THROWS_AS(run_config_from_json(poisoned({"train"})), InvalidArgument);
    CHECK_THROWS_AS(run_config_from_json(poisoned({"train", "weights"})), InvalidArgument);
    CHECK_THROWS_AS(run_config_from_json(poisoned({"train", "transforms"})), InvalidArgument);
}

TEST_CASE("structurally incomplete configs are refused") {
    nlohmann::json good = run_config_to_json(synthetic_config());

    nlohmann::json no_data = good;
    no_data.erase("data");
    CHECK_THROWS_AS(run_config_from_json(no_data), InvalidArgument);

    nlohmann::json no_kind = good;
    no_kind["data"].erase("kind");
    CHECK_THROWS_AS(run_config_from_json(no_kind), InvalidArgument);

    nlohmann::json bad_kind = good;
    bad_kind["data"]["kind"] = "downloaded";
    CHECK_THROWS_AS(run_config_from_json(bad_kind), InvalidArgument);

    // Missing optional keys fall back to defaults instead of failing.
    nlohmann::json lean = good;
    lean["train"].erase("weights");
    lean["train"].erase("transforms");
    lean["train"].erase("learning_rate");
    const RunConfig parsed = run_config_from_json(lean);
    CHECK(parsed.train.weights == LossWeights{});
    CHECK(parsed.train.transforms == TransformConfig{});
    CHECK(parsed.train.learning_rate == TrainConfig{}.learning_rate);
}

TEST_CASE("file round-trip and file error reporting") {
    TempDir tmp;
    const RunConfig cfg = synthetic_config();
    const fs::path file = tmp.path / "config.json";
    save_run_config(file, cfg);
    CHECK(load_run_config(file) == cfg);

    CHECK_THROWS_AS(load_run_config(tmp.path / "absent.json"), IoError);

    std::ofstream(tmp.path / "broken.json") << "{ not json";
    CHECK_THROWS_AS(load_run_config(tmp.path / "broken.json"), InvalidArgument);
}

TEST_CASE("validation cross-checks model geometry against the data") {
    RunConfig cfg = synthetic_config();
    cfg.validate();

    RunConfig wrong_size = cfg;
    wrong_size.model.height = 32;
    CHECK_THROWS_AS(wrong_size.validate(), InvalidArgument);

    RunConfig wrong_channels = cfg;
    wrong_channels.model.in_channels = 3;
    CHECK_THROWS_AS(wrong_channels.validate(), InvalidArgument);

    RunConfig no_out = cfg;
    no_out.output_dir.clear();
    CHECK_THROWS_AS(no_out.validate(), InvalidArgument);

    RunConfig tiny = cfg;
    tiny.data.per_class = 0;
    CHECK_THROWS_AS(tiny.validate(), InvalidArgument);
}

TEST_CASE("synthetic data config opens a dataset with the declared shape") {
    const RunConfig cfg = synthetic_config();
    const auto data = cfg.data.open();
    CHECK(data->size() == 30);
    CHECK(data->channels() == 1);
    CHECK(data->height() == 16);
    CHECK(data->cluster_count() == 3);
    CHECK(data->has_ground_truth());
}

TEST_CASE("output directories resolve against the environment root") {
    const char* saved = std::getenv("GATCLUSTER_OUTPUT_ROOT");
    const std::string backup = saved ? saved : "";

    ::setenv("GATCLUSTER_OUTPUT_ROOT", "/tmp/gatc_root", 1);
    CHECK(resolve_output_dir("runs/a") == fs::path("/tmp/gatc_root/runs/a"));
    CHECK(resolve_output_dir("/abs/path") == fs::path("/abs/path"));

    ::unsetenv("GATCLUSTER_OUTPUT_ROOT");
    CHECK(resolve_output_dir("runs/a") == fs::path("./runs/a"));

    if (saved) ::setenv("GATCLUSTER_OUTPUT_ROOT", backup.c_str(), 1);
}
