#include "run_config.hpp"

#include <cstdlib>
#include <fstream>
#include <initializer_list>

#include "checkpoint.hpp"
#include "error.hpp"

namespace gatc {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& j, const char* where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw InvalidArgument(std::string("run config: ") + where + " must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* key : allowed)
            if (it.key() == key) known = true;
        if (!known)
            throw InvalidArgument(std::string("run config: unknown key '") + it.key() + "' in " + where);
    }
}

/// Overwrites `value` when the key is present; absent keys keep the caller's
/// default, so a config only needs to spell out what it changes.
template <typename T>
void take(const json& j, const char* key, T& value) {
    if (auto it = j.find(key); it != j.end()) it->get_to(value);
}

}  // namespace

nlohmann::json data_config_to_json(const DataConfig& d) {
    if (d.kind == DataConfig::Kind::kFolder)
        return {{"kind", "folder"},
                {"root", d.folder.root_path},
                {"height", d.folder.height},
                {"width", d.folder.width},
                {"grayscale", d.folder.grayscale},
                {"classes", d.folder.cluster_count},
                {"labeled", d.folder.has_ground_truth}};
    return {{"kind", "synthetic"}, {"classes", d.classes},     {"per_class", d.per_class},
            {"height", d.height},  {"width", d.width},         {"seed", d.seed}};
}

DataConfig data_config_from_json(const nlohmann::json& j) {
    DataConfig d;
    std::string kind;
    if (!j.is_object() || !j.contains("kind"))
        throw InvalidArgument("run config: data section needs a 'kind'");
    j.at("kind").get_to(kind);
    if (kind == "folder") {
        reject_unknown_keys(j, "data", {"kind", "root", "height", "width", "grayscale", "classes", "labeled"});
        d.kind = DataConfig::Kind::kFolder;
        j.at("root").get_to(d.folder.root_path);
        j.at("height").get_to(d.folder.height);
        j.at("width").get_to(d.folder.width);
        j.at("classes").get_to(d.folder.cluster_count);
        take(j, "grayscale", d.folder.grayscale);
        take(j, "labeled", d.folder.has_ground_truth);
    } else if (kind == "synthetic") {
        reject_unknown_keys(j, "data", {"kind", "classes", "per_class", "height", "width", "seed"});
        d.kind = DataConfig::Kind::kSynthetic;
        j.at("classes").get_to(d.classes);
        j.at("per_class").get_to(d.per_class);
        j.at("height").get_to(d.height);
        j.at("width").get_to(d.width);
        take(j, "seed", d.seed);
    } else {
        throw InvalidArgument("run config: data kind must be 'folder' or 'synthetic', got '" + kind + "'");
    }
    return d;
}

namespace {

json weights_to_json(const LossWeights& w) {
    return {{"alpha1", w.alpha1}, {"alpha2", w.alpha2}, {"alpha3", w.alpha3}};
}

json transforms_to_json(const TransformConfig& t) {
    return {{"flip_prob", t.flip_prob},     {"rotation_deg", t.rotation_deg},
            {"translate_frac", t.translate_frac}, {"scale_min", t.scale_min},
            {"scale_max", t.scale_max},     {"shear_deg", t.shear_deg},
            {"brightness", t.brightness},   {"contrast", t.contrast},
            {"saturation", t.saturation},   {"hue", t.hue}};
}

json train_to_json(const TrainConfig& t) {
    return {{"epochs", t.epochs},
            {"macro_batch", t.macro_batch},
            {"sub_batch", t.sub_batch},
            {"mini_batch", t.mini_batch},
            {"learning_rate", t.learning_rate},
            {"seed", t.seed},
            {"checkpoint_every", t.checkpoint_every},
            {"weights", weights_to_json(t.weights)},
            {"transforms", transforms_to_json(t.transforms)}};
}

TrainConfig train_from_json(const json& j) {
    reject_unknown_keys(j, "train",
                        {"epochs", "macro_batch", "sub_batch", "mini_batch", "learning_rate", "seed",
                         "checkpoint_every", "weights", "transforms"});
    TrainConfig t;
    j.at("epochs").get_to(t.epochs);
    j.at("macro_batch").get_to(t.macro_batch);
    j.at("sub_batch").get_to(t.sub_batch);
    take(j, "mini_batch", t.mini_batch);
    take(j, "learning_rate", t.learning_rate);
    take(j, "seed", t.seed);
    take(j, "checkpoint_every", t.checkpoint_every);
    if (auto it = j.find("weights"); it != j.end()) {
        reject_unknown_keys(*it, "train.weights", {"alpha1", "alpha2", "alpha3"});
        take(*it, "alpha1", t.weights.alpha1);
        take(*it, "alpha2", t.weights.alpha2);
        take(*it, "alpha3", t.weights.alpha3);
    }
    if (auto it = j.find("transforms"); it != j.end()) {
        reject_unknown_keys(*it, "train.transforms",
                            {"flip_prob", "rotation_deg", "translate_frac", "scale_min", "scale_max",
                             "shear_deg", "brightness", "contrast", "saturation", "hue"});
        take(*it, "flip_prob", t.transforms.flip_prob);
        take(*it, "rotation_deg", t.transforms.rotation_deg);
        take(*it, "translate_frac", t.transforms.translate_frac);
        take(*it, "scale_min", t.transforms.scale_min);
        take(*it, "scale_max", t.transforms.scale_max);
        take(*it, "shear_deg", t.transforms.shear_deg);
        take(*it, "brightness", t.transforms.brightness);
        take(*it, "contrast", t.transforms.contrast);
        take(*it, "saturation", t.transforms.saturation);
        take(*it, "hue", t.transforms.hue);
    }
    return t;
}

}  // namespace

void DataConfig::validate() const {
    if (kind == Kind::kFolder) {
        folder.validate();
        return;
    }
    if (classes < 2) throw InvalidArgument("run config: synthetic data needs at least 2 classes");
    if (per_class < 1) throw InvalidArgument("run config: synthetic data needs per_class >= 1");
    if (height < 8 || width < 8) throw InvalidArgument("run config: synthetic images must be at least 8x8");
}

std::unique_ptr<Dataset> DataConfig::open() const {
    validate();
    if (kind == Kind::kFolder) return load_dataset(folder);
    return make_synthetic_shapes(classes, per_class, height, width, seed);
}

void RunConfig::validate() const {
    data.validate();
    model.validate();
    train.validate();
    if (output_dir.empty()) throw InvalidArgument("run config: output_dir must not be empty");
    const int channels = data.kind == DataConfig::Kind::kSynthetic || data.folder.grayscale ? 1 : 3;
    const int h = data.kind == DataConfig::Kind::kSynthetic ? data.height : data.folder.height;
    const int w = data.kind == DataConfig::Kind::kSynthetic ? data.width : data.folder.width;
    if (model.in_channels != channels || model.height != h || model.width != w)
        throw InvalidArgument("run config: model input geometry does not match the data");
}

nlohmann::json run_config_to_json(const RunConfig& cfg) {
    return {{"data", data_config_to_json(cfg.data)},
            {"model", json(cfg.model)},
            {"train", train_to_json(cfg.train)},
            {"output_dir", cfg.output_dir}};
}

RunConfig run_config_from_json(const nlohmann::json& j) {
    reject_unknown_keys(j, "the top level", {"data", "model", "train", "output_dir"});
    if (!j.contains("data") || !j.contains("model") || !j.contains("train"))
        throw InvalidArgument("run config: 'data', 'model' and 'train' sections are required");
    RunConfig cfg;
    cfg.data = data_config_from_json(j.at("data"));
    reject_unknown_keys(j.at("model"), "model",
                        {"height", "width", "in_channels", "cluster_count", "conv_blocks",
                         "attention_h", "attention_w", "alpha"});
    j.at("model").get_to(cfg.model);
    cfg.train = train_from_json(j.at("train"));
    take(j, "output_dir", cfg.output_dir);
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("run config: cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument("run config: " + path.string() + " is not valid JSON: " + e.what());
    }
    try {
        return run_config_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument("run config: " + path.string() + ": " + e.what());
    }
}

void save_run_config(const std::filesystem::path& path, const RunConfig& cfg) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("run config: cannot write " + path.string());
    out << run_config_to_json(cfg).dump(2) << "\n";
}

std::filesystem::path resolve_output_dir(const std::string& configured) {
    const std::filesystem::path dir(configured);
    if (dir.is_absolute()) return dir;
    const char* root = std::getenv("GATCLUSTER_OUTPUT_ROOT");
    return (root && *root ? std::filesystem::path(root) : std::filesystem::path(".")) / dir;
}

}  // namespace gatc
