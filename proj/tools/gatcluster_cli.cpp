#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gatcluster/gatcluster.h"

namespace {

// 0 ok / 1 usage (the inputs were wrong) / 2 runtime (the work failed).
int exit_code(gatc_status status) {
    if (status == GATC_OK) return 0;
    std::fprintf(stderr, "error: %s\n", gatc_last_error());
    return status == GATC_ERR_INVALID_ARGUMENT ? 1 : 2;
}

int run_train(const std::string& config, const std::string& resume) {
    char run_dir[4096] = {};
    const gatc_status status = gatc_train(config.c_str(), resume.empty() ? nullptr : resume.c_str(),
                                          run_dir, sizeof(run_dir));
    if (status == GATC_OK) std::printf("run directory: %s\n", run_dir);
    return exit_code(status);
}

int run_eval(const std::string& checkpoint, const std::string& data) {
    gatc_session* session = gatc_session_open(checkpoint.c_str(), data.c_str());
    if (!session) {
        std::fprintf(stderr, "error: %s\n", gatc_last_error());
        return 2;
    }
    gatc_metrics metrics{};
    const gatc_status status = gatc_session_metrics(session, &metrics);
    if (status == GATC_OK) {
        std::printf("samples: %lld\n", static_cast<long long>(gatc_session_size(session)));
        std::printf("clusters: %d\n", gatc_session_clusters(session));
        std::printf("acc: %.4f\n", metrics.acc);
        std::printf("nmi: %.4f%s\n", metrics.nmi, metrics.degenerate_nmi ? " (degenerate)" : "");
        std::printf("ari: %.4f\n", metrics.ari);
    }
    gatc_session_close(session);
    return exit_code(status);
}

int run_visualize(const std::string& checkpoint, const std::string& data, const std::string& out,
                  int overlays) {
    gatc_session* session = gatc_session_open(checkpoint.c_str(), data.c_str());
    if (!session) {
        std::fprintf(stderr, "error: %s\n", gatc_last_error());
        return 2;
    }
    const gatc_status status =
        gatc_session_visualize(session, out.c_str(), static_cast<int32_t>(overlays));
    if (status == GATC_OK) std::printf("wrote scatter and %d overlays to %s\n", overlays, out.c_str());
    gatc_session_close(session);
    return exit_code(status);
}

int run_theorem_check(const gatc_theorem_opts& opts, const std::string& out) {
    gatc_theorem_row row{};
    const gatc_status status = gatc_theorem_check(&opts, out.empty() ? nullptr : out.c_str(), &row);
    if (status == GATC_OK) {
        std::printf("trials: %d  invalid: %d\n", row.trials, row.invalid);
        std::printf("mean one-hot fraction: %.4f\n", row.mean_one_hot_fraction);
        std::printf("collapse fraction: %.4f\n", row.collapse_fraction);
        std::printf("mean final objective: %.6g\n", row.mean_final_objective);
        if (!out.empty()) std::printf("verdict tables in %s\n", out.c_str());
    }
    return exit_code(status);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gatcluster: self-supervised image clustering"};
    app.require_subcommand(1);

    std::string config, resume;
    CLI::App* train = app.add_subcommand("train", "Run a training job described by a config file");
    train->add_option("--config", config, "run config JSON")->required();
    train->add_option("--resume", resume, "checkpoint to continue from");

    std::string checkpoint, data, out;
    CLI::App* eval = app.add_subcommand("eval", "Score a checkpoint against labeled data");
    eval->add_option("--checkpoint", checkpoint, "trained checkpoint")->required();
    eval->add_option("--data", data, "image folder or JSON data description")->required();

    int overlays = 8;
    CLI::App* visualize =
        app.add_subcommand("visualize", "Write the label-feature scatter and attention overlays");
    visualize->add_option("--checkpoint", checkpoint, "trained checkpoint")->required();
    visualize->add_option("--data", data, "image folder or JSON data description")->required();
    visualize->add_option("--out", out, "output directory")->required();
    visualize->add_option("--overlays", overlays, "number of attention overlays (default 8)");

    gatc_theorem_opts opts{};
    opts.n = 60;
    opts.k = 3;
    opts.seeds = 20;
    std::string regime = "gat", relations, init;
    int iters = 0;
    double step = 0.0, lambda_e = -1.0;
    CLI::App* theorem =
        app.add_subcommand("theorem-check", "Optimize the label-feature objectives directly");
    theorem->add_option("--n", opts.n, "samples (default 60)");
    theorem->add_option("--k", opts.k, "clusters (default 3)");
    theorem->add_option("--seeds", opts.seeds, "trials, seeded 0..S-1 (default 20)")->required();
    theorem->add_option("--regime", regime, "dac or gat")->required();
    theorem->add_option("--relations", relations, "ground_truth, self_estimated or all_ones");
    theorem->add_option("--init", init, "random or near_collapse");
    theorem->add_option("--iters", iters, "gradient steps per trial");
    theorem->add_option("--step", step, "gradient step size");
    theorem->add_option("--lambda-e", lambda_e, "entropy weight for the gat objective");
    theorem->add_option("--out", out, "directory for verdicts.json / verdicts.csv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    if (*train) return run_train(config, resume);
    if (*eval) return run_eval(checkpoint, data);
    if (*visualize) return run_visualize(checkpoint, data, out, overlays);
    if (*theorem) {
        opts.regime = regime.c_str();
        if (!relations.empty()) opts.relations = relations.c_str();
        if (!init.empty()) opts.init = init.c_str();
        opts.iters = iters;
        opts.step = step;
        opts.lambda_e = lambda_e;
        return run_theorem_check(opts, out);
    }
    return 1;
}
