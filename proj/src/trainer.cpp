#include "trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "error.hpp"
#include "pseudo_targets.hpp"
#include "rng.hpp"

namespace gatc {

namespace {

const TrainConfig& validated(const TrainConfig& cfg) {
    cfg.validate();
    return cfg;
}

}  // namespace

void TrainConfig::validate() const {
    if (epochs < 0) throw InvalidArgument("TrainConfig: negative epoch count");
    if (macro_batch < 1) throw InvalidArgument("TrainConfig: macro batch must be positive");
    if (sub_batch < 1) throw InvalidArgument("TrainConfig: sub batch must be positive");
    if (mini_batch < 1) throw InvalidArgument("TrainConfig: mini batch must be positive");
    if (mini_batch > macro_batch)
        throw InvalidArgument("TrainConfig: mini batch cannot exceed the macro batch");
    if (sub_batch > macro_batch)
        throw InvalidArgument("TrainConfig: sub batch cannot exceed the macro batch");
    if (learning_rate <= 0.0) throw InvalidArgument("TrainConfig: learning rate must be positive");
    if (checkpoint_every < 0) throw InvalidArgument("TrainConfig: negative checkpoint interval");
    transforms.validate();
}

Trainer::Trainer(ImageSource& images, GatNetwork& net, const TrainConfig& cfg,
                 std::filesystem::path out_dir, MetricsHook metrics)
    : images_(images),
      net_(net),
      cfg_(validated(cfg)),
      out_dir_(std::move(out_dir)),
      metrics_(std::move(metrics)),
      adam_(net.parameters(), cfg.learning_rate) {
    if (images_.size() < 1) throw InvalidArgument("Trainer: empty dataset");
    if (!out_dir_.empty()) {
        std::filesystem::create_directories(out_dir_);
        step_log_.open(out_dir_ / "steps.csv", std::ios::app);
        if (!step_log_) throw IoError("Trainer: cannot open step log");
        if (step_log_.tellp() == 0)
            step_log_ << "step,epoch,macro_index,l_r,l_t,l_a,l_e,total\n";
        epoch_log_.open(out_dir_ / "epochs.jsonl", std::ios::app);
        if (!epoch_log_) throw IoError("Trainer: cannot open epoch log");
    }
}

void Trainer::resume(const std::filesystem::path& checkpoint) {
    const Checkpoint ckpt = read_checkpoint(checkpoint);
    if (!(ckpt.meta.model == net_.config()))
        throw InvalidArgument("Trainer: checkpoint was produced by a different model geometry");
    if (ckpt.meta.seed != cfg_.seed)
        throw InvalidArgument("Trainer: checkpoint was produced under a different seed");
    restore_arrays(ckpt, net_.state());
    restore_arrays(ckpt, adam_.state());
    counters_ = ckpt.meta.counters;
    adam_.set_steps(counters_.adam_step);
    last_checkpoint_step_ = counters_.step;
}

Matrix Trainer::eval_features(const std::vector<int>& ids) {
    const int k = net_.config().cluster_count;
    Matrix out(static_cast<Eigen::Index>(ids.size()), k);
    const std::size_t chunk = static_cast<std::size_t>(std::max(cfg_.sub_batch, 1));
    for (std::size_t at = 0; at < ids.size(); at += chunk) {
        const std::size_t count = std::min(chunk, ids.size() - at);
        const std::vector<int> part(ids.begin() + static_cast<std::ptrdiff_t>(at),
                                    ids.begin() + static_cast<std::ptrdiff_t>(at + count));
        const ImageBatch batch = images_.batch(part);
        out.middleRows(static_cast<Eigen::Index>(at), static_cast<Eigen::Index>(count)) =
            net_.label_features_eval(batch.samples);
    }
    return out;
}

std::vector<int> Trainer::final_inference() {
    std::vector<int> ids(static_cast<std::size_t>(images_.size()));
    std::iota(ids.begin(), ids.end(), 0);
    const Matrix l = eval_features(ids);
    std::vector<int> assignments(ids.size());
    for (Eigen::Index i = 0; i < l.rows(); ++i)
        assignments[static_cast<std::size_t>(i)] = argmax_lowest(l.row(i).transpose());
    return assignments;
}

void Trainer::save_checkpoint(const std::string& filename) {
    if (out_dir_.empty()) return;
    CheckpointMeta meta;
    meta.model = net_.config();
    meta.counters = counters_;
    meta.seed = cfg_.seed;
    std::vector<StateView> arrays = net_.state();
    for (auto& v : adam_.state()) arrays.push_back(v);
    write_checkpoint(out_dir_ / filename, meta, arrays);
}

void Trainer::log_step(const StepRecord& rec) {
    if (!step_log_.is_open()) return;
    step_log_ << rec.step << ',' << rec.epoch << ',' << rec.macro_index << ',' << rec.loss.l_r
              << ',' << rec.loss.l_t << ',' << rec.loss.l_a << ',' << rec.loss.l_e << ','
              << rec.loss.total << '\n';
    step_log_.flush();
}

void Trainer::log_epoch(const EpochRecord& rec) {
    if (!epoch_log_.is_open()) return;
    nlohmann::json j{{"epoch", rec.epoch}};
    if (rec.metrics) {
        j["acc"] = rec.metrics->acc;
        j["nmi"] = rec.metrics->nmi;
        j["ari"] = rec.metrics->ari;
        j["degenerate_nmi"] = rec.metrics->degenerate_nmi;
    }
    epoch_log_ << j.dump() << '\n';
    epoch_log_.flush();
}

TrainHistory Trainer::run() {
    TrainHistory hist;
    const int n = images_.size();
    const int k = net_.config().cluster_count;
    const int macro = std::min(cfg_.macro_batch, n);
    if (cfg_.mini_batch > macro)
        throw InvalidArgument("Trainer: mini batch exceeds the clipped macro batch");
    const int n_macro = n / macro;
    const int steps_per_macro = macro / cfg_.mini_batch;
    const int m2 = cfg_.mini_batch;

    const std::int64_t start_epoch = counters_.epoch;
    const std::int64_t start_macro = counters_.macro_index;

    // Batch-norm running statistics move during the forward pass itself, so
    // a diverged batch would leave non-finite traces in the abort checkpoint
    // even though the parameter update never happens. Snapshot them before
    // each step and roll back when aborting.
    std::vector<StateView> running_stats;
    for (const auto& v : net_.state())
        if (v.name.find("running_") != std::string::npos) running_stats.push_back(v);
    std::vector<double> stats_backup;

    for (std::int64_t epoch = start_epoch; epoch < cfg_.epochs; ++epoch) {
        std::vector<int> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), 0);
        Rng shuffle_rng(derive_seed(cfg_.seed, "epoch_shuffle", static_cast<std::uint64_t>(epoch)));
        shuffle_rng.shuffle(order);

        const std::int64_t first_macro = (epoch == start_epoch) ? start_macro : 0;
        for (std::int64_t b = first_macro; b < n_macro; ++b) {
            const std::vector<int> macro_ids(
                order.begin() + static_cast<std::ptrdiff_t>(b) * macro,
                order.begin() + static_cast<std::ptrdiff_t>(b + 1) * macro);

            // Step 1: pseudo-targets from evaluation-mode features, decoded
            // in sub-batches so at most m1 images coexist.
            DecodedImageGauge::reset_peak();
            const Matrix features = eval_features(macro_ids);
            hist.peak_step1_images = std::max(hist.peak_step1_images, DecodedImageGauge::peak());
            const Matrix balanced = balanced_target(features);
            const RelationMatrix relations = relations_by_kmeans(
                features, k,
                derive_seed(cfg_.seed, "kmeans", static_cast<std::uint64_t>(epoch),
                            static_cast<std::uint64_t>(b)));
            const Matrix confident = confident_attention_target(features);

            // Step 2: one transform draw for the whole macro-batch round,
            // then disjoint mini-batches in a shuffled order.
            DecodedImageGauge::reset_peak();
            const std::uint64_t transform_seed =
                derive_seed(cfg_.seed, "augment", static_cast<std::uint64_t>(epoch),
                            static_cast<std::uint64_t>(b));
            std::vector<int> positions(static_cast<std::size_t>(macro));
            std::iota(positions.begin(), positions.end(), 0);
            Rng mb_rng(derive_seed(cfg_.seed, "minibatch", static_cast<std::uint64_t>(epoch),
                                   static_cast<std::uint64_t>(b)));
            mb_rng.shuffle(positions);

            for (int s = 0; s < steps_per_macro; ++s) {
                std::vector<int> mini_ids(static_cast<std::size_t>(m2));
                Matrix target_l(m2, k), target_la(m2, k);
                std::vector<std::uint8_t> rel(static_cast<std::size_t>(m2) * m2);
                for (int i = 0; i < m2; ++i) {
                    const int pi = positions[static_cast<std::size_t>(s * m2 + i)];
                    mini_ids[static_cast<std::size_t>(i)] = macro_ids[static_cast<std::size_t>(pi)];
                    target_l.row(i) = balanced.row(pi);
                    target_la.row(i) = confident.row(pi);
                    for (int j = 0; j < m2; ++j) {
                        const int pj = positions[static_cast<std::size_t>(s * m2 + j)];
                        rel[static_cast<std::size_t>(i) * m2 + j] = relations.at(pi, pj);
                    }
                }

                stats_backup.clear();
                for (const auto& v : running_stats)
                    stats_backup.insert(stats_backup.end(), v.data, v.data + v.n);

                const ImageBatch batch =
                    images_.transformed_batch(mini_ids, cfg_.transforms, transform_seed);
                const TrainOutputs out = net_.forward_train(batch.samples);
                Matrix dl, dla;
                const LossBreakdown loss = total_loss(out.label, out.attention_label, target_l,
                                                      target_la, rel, cfg_.weights, &dl, &dla);

                if (!std::isfinite(loss.total)) {
                    // The parameters are still the last finite state: stop
                    // before the update, undo the running-statistics drift
                    // of the failed forward pass and keep everything else.
                    std::size_t off = 0;
                    for (const auto& v : running_stats)
                        for (std::size_t i = 0; i < v.n; ++i) v.data[i] = stats_backup[off++];
                    hist.aborted = true;
                    hist.abort_step = counters_.step;
                    hist.abort_loss = loss;
                    save_checkpoint("abort.ckpt");
                    return hist;
                }

                net_.zero_grad();
                net_.backward(dl, dla);
                adam_.step();
                counters_.step += 1;
                counters_.adam_step = adam_.steps();

                StepRecord rec{counters_.step, static_cast<int>(epoch), static_cast<int>(b), loss};
                log_step(rec);
                hist.steps.push_back(rec);
            }
            hist.peak_step2_images = std::max(hist.peak_step2_images, DecodedImageGauge::peak());

            if (b + 1 < n_macro) {
                counters_.epoch = epoch;
                counters_.macro_index = b + 1;
            } else {
                counters_.epoch = epoch + 1;
                counters_.macro_index = 0;
            }
            if (cfg_.checkpoint_every > 0 &&
                counters_.step - last_checkpoint_step_ >= cfg_.checkpoint_every) {
                save_checkpoint("ckpt_step" + std::to_string(counters_.step) + ".ckpt");
                last_checkpoint_step_ = counters_.step;
            }
        }

        EpochRecord erec;
        erec.epoch = static_cast<int>(epoch);
        if (metrics_) erec.metrics = metrics_(final_inference());
        log_epoch(erec);
        hist.epochs.push_back(std::move(erec));
    }

    save_checkpoint("final.ckpt");
    return hist;
}

}  // namespace gatc
