#include "gatcluster/gatcluster.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "checkpoint.hpp"
#include "dataset.hpp"
#include "error.hpp"
#include "json.hpp"
#include "metrics.hpp"
#include "network.hpp"
#include "run_config.hpp"
#include "theorem_lab.hpp"
#include "trainer.hpp"
#include "visualize.hpp"

namespace fs = std::filesystem;

namespace {

thread_local std::string g_last_error;

/// Chunk size for whole-dataset inference through the C surface; bounds
/// decoded images the same way m1 does during training.
constexpr int kEvalChunk = 64;

template <typename F>
gatc_status guarded(F&& body) {
    try {
        body();
        g_last_error.clear();
        return GATC_OK;
    } catch (const gatc::InvalidArgument& e) {
        g_last_error = e.what();
        return GATC_ERR_INVALID_ARGUMENT;
    } catch (const gatc::IoError& e) {
        g_last_error = e.what();
        return GATC_ERR_IO;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return GATC_ERR_RUNTIME;
    }
}

void require(bool ok, const char* what) {
    if (!ok) throw gatc::InvalidArgument(what);
}

std::unique_ptr<gatc::Dataset> open_session_data(const std::string& path,
                                                 const gatc::ModelConfig& model) {
    if (fs::is_directory(path)) {
        gatc::DatasetSpec spec;
        spec.root_path = path;
        spec.height = model.height;
        spec.width = model.width;
        spec.grayscale = model.in_channels == 1;
        spec.cluster_count = model.cluster_count;
        spec.has_ground_truth = false;  // labels are welcome but not required
        return gatc::load_dataset(spec);
    }
    std::ifstream in(path);
    if (!in) throw gatc::IoError("cannot open data path " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception&) {
        throw gatc::InvalidArgument("data path " + path +
                                    " is neither an image folder nor a JSON description");
    }
    try {
        const gatc::DataConfig data =
            gatc::data_config_from_json(j.is_object() && j.contains("data") ? j.at("data") : j);
        return data.open();
    } catch (const nlohmann::json::exception& e) {
        throw gatc::InvalidArgument("data description " + path + ": " + e.what());
    }
}

const char* relation_mode_name(gatc::RelationMode mode) {
    switch (mode) {
        case gatc::RelationMode::kGroundTruth: return "ground_truth";
        case gatc::RelationMode::kSelfEstimated: return "self_estimated";
        case gatc::RelationMode::kAllOnes: return "all_ones";
    }
    return "?";
}

gatc::RelationMode parse_relation_mode(const std::string& name) {
    if (name == "ground_truth") return gatc::RelationMode::kGroundTruth;
    if (name == "self_estimated") return gatc::RelationMode::kSelfEstimated;
    if (name == "all_ones") return gatc::RelationMode::kAllOnes;
    throw gatc::InvalidArgument("unknown relation mode '" + name +
                                "', expected ground_truth, self_estimated or all_ones");
}

const char* init_mode_name(gatc::InitMode mode) {
    return mode == gatc::InitMode::kRandom ? "random" : "near_collapse";
}

gatc::InitMode parse_init_mode(const std::string& name) {
    if (name == "random") return gatc::InitMode::kRandom;
    if (name == "near_collapse") return gatc::InitMode::kNearCollapse;
    throw gatc::InvalidArgument("unknown init mode '" + name +
                                "', expected random or near_collapse");
}

}  // namespace

struct gatc_session {
    std::unique_ptr<gatc::GatNetwork> net;
    std::unique_ptr<gatc::Dataset> data;
    std::optional<gatc::Matrix> features;  // computed once, reused

    const gatc::Matrix& label_features() {
        if (!features) features = gatc::dataset_label_features(*data, *net, kEvalChunk);
        return *features;
    }

    std::vector<int> assignments() {
        const gatc::Matrix& f = label_features();
        std::vector<int> out(static_cast<std::size_t>(f.rows()));
        for (Eigen::Index i = 0; i < f.rows(); ++i)
            out[static_cast<std::size_t>(i)] = gatc::argmax_lowest(f.row(i).transpose());
        return out;
    }
};

extern "C" {

const char* gatc_last_error(void) { return g_last_error.c_str(); }

gatc_status gatc_train(const char* config_path, const char* resume_checkpoint, char* run_dir,
                       size_t run_dir_len) {
    return guarded([&] {
        require(config_path && *config_path, "gatc_train: config_path is required");
        const gatc::RunConfig cfg = gatc::load_run_config(config_path);
        cfg.validate();

        const fs::path dir = gatc::resolve_output_dir(cfg.output_dir);
        fs::create_directories(dir);
        gatc::save_run_config(dir / "config.json", cfg);

        const auto data = cfg.data.open();
        gatc::GatNetwork net(cfg.model, cfg.train.seed);

        gatc::MetricsHook hook;
        if (data->has_ground_truth()) {
            const std::vector<int>& truth = data->ground_truth();
            hook = [&truth](const std::vector<int>& pred) -> std::optional<gatc::EpochMetrics> {
                const gatc::ClusteringReport r = gatc::report(pred, truth);
                return gatc::EpochMetrics{r.acc, r.nmi, r.ari, r.degenerate_nmi};
            };
        }

        gatc::Trainer trainer(*data, net, cfg.train, dir, hook);
        if (resume_checkpoint && *resume_checkpoint) trainer.resume(resume_checkpoint);
        const gatc::TrainHistory history = trainer.run();

        if (run_dir && run_dir_len > 0)
            std::snprintf(run_dir, run_dir_len, "%s", dir.string().c_str());
        if (history.aborted)
            throw gatc::NumericError("training aborted on a non-finite loss at step " +
                                     std::to_string(history.abort_step) +
                                     "; last good state saved to abort.ckpt");
    });
}

gatc_session* gatc_session_open(const char* checkpoint_path, const char* data_path) {
    auto session = std::make_unique<gatc_session>();
    const gatc_status status = guarded([&] {
        require(checkpoint_path && *checkpoint_path, "gatc_session_open: checkpoint_path is required");
        require(data_path && *data_path, "gatc_session_open: data_path is required");
        const gatc::Checkpoint ckpt = gatc::read_checkpoint(checkpoint_path);
        session->net = std::make_unique<gatc::GatNetwork>(ckpt.meta.model, ckpt.meta.seed);
        gatc::restore_arrays(ckpt, session->net->state());
        session->data = open_session_data(data_path, ckpt.meta.model);
        const auto& m = ckpt.meta.model;
        if (session->data->channels() != m.in_channels || session->data->height() != m.height ||
            session->data->width() != m.width)
            throw gatc::InvalidArgument("data geometry does not match the checkpointed model");
    });
    return status == GATC_OK ? session.release() : nullptr;
}

void gatc_session_close(gatc_session* session) { delete session; }

int64_t gatc_session_size(const gatc_session* session) {
    return session && session->data ? session->data->size() : 0;
}

int32_t gatc_session_clusters(const gatc_session* session) {
    return session && session->net ? session->net->config().cluster_count : 0;
}

gatc_status gatc_session_assignments(gatc_session* session, int32_t* out) {
    return guarded([&] {
        require(session != nullptr, "gatc_session_assignments: null session");
        require(out != nullptr, "gatc_session_assignments: null output buffer");
        const std::vector<int> pred = session->assignments();
        for (std::size_t i = 0; i < pred.size(); ++i) out[i] = pred[i];
    });
}

gatc_status gatc_session_metrics(gatc_session* session, gatc_metrics* out) {
    return guarded([&] {
        require(session != nullptr, "gatc_session_metrics: null session");
        require(out != nullptr, "gatc_session_metrics: null output");
        if (!session->data->has_ground_truth())
            throw gatc::InvalidArgument("ground truth required to compute clustering metrics");
        const gatc::ClusteringReport r =
            gatc::report(session->assignments(), session->data->ground_truth());
        *out = gatc_metrics{r.acc, r.nmi, r.ari, r.degenerate_nmi ? 1 : 0};
    });
}

gatc_status gatc_session_visualize(gatc_session* session, const char* out_dir, int32_t overlays) {
    return guarded([&] {
        require(session != nullptr, "gatc_session_visualize: null session");
        require(out_dir && *out_dir, "gatc_session_visualize: out_dir is required");
        const fs::path dir(out_dir);
        fs::create_directories(dir);

        std::vector<int> colors;
        std::optional<double> acc;
        if (session->data->has_ground_truth()) {
            colors = session->data->ground_truth();
            acc = gatc::accuracy(session->assignments(), colors);
        }
        const gatc::ScatterMap map = gatc::make_scatter(session->label_features(), colors, acc);
        gatc::write_scatter_csv(map, dir / "scatter.csv");
        gatc::write_scatter_png(map, dir / "scatter.png");

        const int n = session->data->size();
        const int count = std::min<int>(overlays < 0 ? 0 : overlays, n);
        for (int i = 0; i < count; ++i) {
            const gatc::ImageBatch batch = session->data->batch({i});
            const auto outputs = session->net->forward_eval(batch.samples);
            char name[32];
            std::snprintf(name, sizeof(name), "attention_%03d.png", i);
            gatc::render_attention_overlay(batch.samples, outputs.at(0).attention_map, dir / name);
        }
    });
}

gatc_status gatc_theorem_check(const gatc_theorem_opts* opts, const char* out_dir,
                               gatc_theorem_row* row) {
    return guarded([&] {
        require(opts != nullptr, "gatc_theorem_check: null options");
        require(opts->seeds >= 1, "gatc_theorem_check: need at least one seed");

        gatc::TrialConfig base;
        base.n = opts->n;
        base.k = opts->k;
        base.regime = gatc::parse_regime(opts->regime ? opts->regime : "gat");
        if (opts->relations) base.relations = parse_relation_mode(opts->relations);
        if (opts->init) base.init = parse_init_mode(opts->init);
        if (opts->iters > 0) base.iters = opts->iters;
        if (opts->step > 0) base.step = opts->step;
        if (opts->lambda_e >= 0) base.lambda_e = opts->lambda_e;
        base.validate();

        std::vector<gatc::TrialConfig> grid(static_cast<std::size_t>(opts->seeds), base);
        for (std::size_t i = 0; i < grid.size(); ++i) grid[i].seed = static_cast<std::uint64_t>(i);

        const gatc::SweepResult result = gatc::sweep(grid);
        const gatc::SweepRow& aggregate = result.rows.at(0);
        if (row)
            *row = gatc_theorem_row{aggregate.trials, aggregate.invalid,
                                    aggregate.mean_one_hot_fraction, aggregate.collapse_fraction,
                                    aggregate.mean_final_objective};
        if (!out_dir || !*out_dir) return;

        const fs::path dir(out_dir);
        fs::create_directories(dir);
        nlohmann::json doc;
        doc["setting"] = {{"n", base.n},
                          {"k", base.k},
                          {"regime", gatc::regime_name(base.regime)},
                          {"relations", relation_mode_name(base.relations)},
                          {"init", init_mode_name(base.init)},
                          {"iters", base.iters},
                          {"step", base.step},
                          {"lambda_e", base.lambda_e}};
        doc["aggregate"] = {{"trials", aggregate.trials},
                            {"invalid", aggregate.invalid},
                            {"mean_one_hot_fraction", aggregate.mean_one_hot_fraction},
                            {"collapse_fraction", aggregate.collapse_fraction},
                            {"mean_final_objective", aggregate.mean_final_objective}};
        auto& trials = doc["trials"] = nlohmann::json::array();
        std::ofstream csv(dir / "verdicts.csv", std::ios::trunc);
        if (!csv) throw gatc::IoError("theorem-check: cannot write " + (dir / "verdicts.csv").string());
        csv << "seed,one_hot_fraction,occupied_clusters,collapsed,final_objective,valid\n";
        csv.precision(17);
        for (const gatc::TrialOutcome& trial : result.trials) {
            const gatc::TheoremVerdict& v = trial.verdict;
            trials.push_back({{"seed", trial.config.seed},
                              {"one_hot_fraction", v.one_hot_fraction},
                              {"occupied_clusters", v.occupied_clusters},
                              {"collapsed", v.collapsed},
                              {"final_objective", v.final_objective},
                              {"valid", v.valid}});
            csv << trial.config.seed << ',' << v.one_hot_fraction << ',' << v.occupied_clusters
                << ',' << (v.collapsed ? 1 : 0) << ',' << v.final_objective << ','
                << (v.valid ? 1 : 0) << '\n';
        }
        std::ofstream json_out(dir / "verdicts.json", std::ios::trunc);
        if (!json_out)
            throw gatc::IoError("theorem-check: cannot write " + (dir / "verdicts.json").string());
        json_out << doc.dump(2) << "\n";
    });
}

}  // extern "C"
