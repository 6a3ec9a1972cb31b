#include "checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "error.hpp"

namespace gatc {

// The array payload is written as raw IEEE doubles in the byte order below.
static_assert(std::endian::native == std::endian::little,
              "checkpoint payload assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'G', 'A', 'T', 'C'};

void write_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_u64(std::ostream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

nlohmann::json counters_to_json(const TrainCounters& c) {
    return {{"epoch", c.epoch}, {"macro_index", c.macro_index}, {"step", c.step},
            {"adam_step", c.adam_step}};
}

TrainCounters counters_from_json(const nlohmann::json& j) {
    TrainCounters c;
    c.epoch = j.at("epoch").get<std::int64_t>();
    c.macro_index = j.at("macro_index").get<std::int64_t>();
    c.step = j.at("step").get<std::int64_t>();
    c.adam_step = j.at("adam_step").get<std::int64_t>();
    return c;
}

}  // namespace

void to_json(nlohmann::json& j, const ModelConfig& cfg) {
    j = {{"height", cfg.height},
         {"width", cfg.width},
         {"in_channels", cfg.in_channels},
         {"cluster_count", cfg.cluster_count},
         {"conv_blocks", cfg.conv_blocks},
         {"attention_h", cfg.attention_h},
         {"attention_w", cfg.attention_w},
         {"alpha", cfg.alpha}};
}

void from_json(const nlohmann::json& j, ModelConfig& cfg) {
    j.at("height").get_to(cfg.height);
    j.at("width").get_to(cfg.width);
    j.at("in_channels").get_to(cfg.in_channels);
    j.at("cluster_count").get_to(cfg.cluster_count);
    j.at("conv_blocks").get_to(cfg.conv_blocks);
    j.at("attention_h").get_to(cfg.attention_h);
    j.at("attention_w").get_to(cfg.attention_w);
    j.at("alpha").get_to(cfg.alpha);
}

void write_checkpoint(const std::filesystem::path& path, const CheckpointMeta& meta,
                      const std::vector<StateView>& arrays) {
    nlohmann::json header;
    header["model"] = meta.model;
    header["counters"] = counters_to_json(meta.counters);
    header["seed"] = meta.seed;
    auto& list = header["arrays"] = nlohmann::json::array();
    for (const auto& a : arrays) list.push_back({{"name", a.name}, {"count", a.n}});
    const std::string text = header.dump();

    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("checkpoint: cannot open " + tmp.string());
        out.write(kMagic, sizeof(kMagic));
        write_u32(out, kCheckpointVersion);
        write_u64(out, text.size());
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        for (const auto& a : arrays)
            out.write(reinterpret_cast<const char*>(a.data),
                      static_cast<std::streamsize>(a.n * sizeof(double)));
        if (!out) throw IoError("checkpoint: write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("checkpoint: cannot open " + path.string());

    char magic[4];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw IoError("checkpoint: " + path.string() + " is not a checkpoint file");
    std::uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (!in || version != kCheckpointVersion)
        throw IoError("checkpoint: unsupported format version " + std::to_string(version));
    std::uint64_t header_len = 0;
    in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
    std::string text(header_len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(header_len));
    if (!in) throw IoError("checkpoint: truncated header in " + path.string());

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("checkpoint: corrupt header in " + path.string() + ": " + e.what());
    }

    Checkpoint ckpt;
    try {
        ckpt.meta.model = header.at("model").get<ModelConfig>();
        ckpt.meta.counters = counters_from_json(header.at("counters"));
        ckpt.meta.seed = header.at("seed").get<std::uint64_t>();
        for (const auto& entry : header.at("arrays")) {
            const std::string name = entry.at("name").get<std::string>();
            const std::size_t count = entry.at("count").get<std::size_t>();
            std::vector<double> data(count);
            in.read(reinterpret_cast<char*>(data.data()),
                    static_cast<std::streamsize>(count * sizeof(double)));
            if (!in) throw IoError("checkpoint: truncated array " + name + " in " + path.string());
            if (!ckpt.arrays.emplace(name, std::move(data)).second)
                throw IoError("checkpoint: duplicate array " + name + " in " + path.string());
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError("checkpoint: corrupt header in " + path.string() + ": " + e.what());
    }
    return ckpt;
}

void restore_arrays(const Checkpoint& ckpt, const std::vector<StateView>& views) {
    for (const auto& v : views) {
        const auto it = ckpt.arrays.find(v.name);
        if (it == ckpt.arrays.end()) throw IoError("checkpoint: missing array " + v.name);
        if (it->second.size() != v.n)
            throw IoError("checkpoint: array " + v.name + " holds " +
                          std::to_string(it->second.size()) + " values, expected " +
                          std::to_string(v.n));
        std::memcpy(v.data, it->second.data(), v.n * sizeof(double));
    }
}

}  // namespace gatc
