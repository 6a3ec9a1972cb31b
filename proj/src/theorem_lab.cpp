#include "theorem_lab.hpp"

#include <cmath>
#include <vector>

#include "error.hpp"
#include "layers.hpp"
#include "losses.hpp"
#include "rng.hpp"

namespace gatc {

void TrialConfig::validate() const {
    if (k < 1) throw InvalidArgument("TrialConfig: cluster count must be positive");
    if (n < k) throw InvalidArgument("TrialConfig: need at least one sample per cluster");
    if (iters < 1) throw InvalidArgument("TrialConfig: need at least one iteration");
    if (step <= 0.0) throw InvalidArgument("TrialConfig: step must be positive");
    if (lambda_e < 0.0) throw InvalidArgument("TrialConfig: negative entropy weight");
}

namespace {

/// Sum over ordered row pairs of the clamped binary cross entropy between
/// the relation and the cosine of the pair. On unit-norm rows the cosine is
/// the plain inner product, so the same term serves both regimes. When
/// `dfeatures` is given it receives the gradient w.r.t. the rows.
double pairwise_objective(const Matrix& f, const RelationMatrix& r, Matrix* dfeatures) {
    const Eigen::Index n = f.rows();
    Vector norms(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        norms[i] = f.row(i).norm();
        if (norms[i] == 0.0) throw InvalidArgument("pairwise objective: zero-norm feature row");
    }
    const Matrix y = norms.cwiseInverse().asDiagonal() * f;
    const Matrix s = y * y.transpose();

    double value = 0.0;
    Matrix g;
    if (dfeatures) g.setZero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const int rel = r.at(static_cast<int>(i), static_cast<int>(j));
            value += -rel * clamped_log(s(i, j)) - (1 - rel) * clamped_log(1.0 - s(i, j));
            if (dfeatures)
                g(i, j) = -rel * clamped_log_grad(s(i, j)) + (1 - rel) * clamped_log_grad(1.0 - s(i, j));
        }
    }
    if (dfeatures) {
        // d/dy_i collected over both roles a row plays, then pulled back
        // through the normalization (tangent projection, scaled by 1/norm).
        const Matrix dy = (g + g.transpose()) * y;
        dfeatures->resize(n, f.cols());
        for (Eigen::Index i = 0; i < n; ++i) {
            const double along = dy.row(i).dot(y.row(i));
            dfeatures->row(i) = (dy.row(i) - along * y.row(i)) / norms[i];
        }
    }
    return value;
}

Matrix realize(const Matrix& logits, Regime regime) {
    return regime == Regime::kDac ? dac_features(logits) : gat_features(logits);
}

RelationMatrix estimate_relations(const Matrix& logits, const TrialConfig& cfg, std::uint64_t iter) {
    switch (cfg.relations) {
        case RelationMode::kGroundTruth:
            return ground_truth_relations(cfg.n, cfg.k);
        case RelationMode::kAllOnes:
            return all_ones_relations(cfg.n);
        case RelationMode::kSelfEstimated:
            break;
    }
    return relations_by_kmeans(realize(logits, cfg.regime), cfg.k,
                               derive_seed(cfg.seed, "relations", iter));
}

}  // namespace

double trial_objective(const Matrix& logits, const TrialConfig& cfg, const RelationMatrix& r,
                       Matrix* dlogits) {
    if (cfg.regime == Regime::kDac) {
        const Matrix u = logits.cwiseProduct(logits);
        Vector norms(u.rows());
        for (Eigen::Index i = 0; i < u.rows(); ++i) norms[i] = u.row(i).norm();
        const Matrix f = norms.cwiseInverse().asDiagonal() * u;

        Matrix df;
        const double value = pairwise_objective(f, r, dlogits ? &df : nullptr);
        if (dlogits) {
            dlogits->resize(logits.rows(), logits.cols());
            for (Eigen::Index i = 0; i < f.rows(); ++i) {
                const double along = df.row(i).dot(f.row(i));
                const auto du = (df.row(i) - along * f.row(i)) / norms[i];
                dlogits->row(i) = 2.0 * logits.row(i).cwiseProduct(du);
            }
        }
        return value;
    }

    const Matrix f = gat_features(logits);
    Matrix df;
    double value = pairwise_objective(f, r, dlogits ? &df : nullptr);
    value -= f.squaredNorm();
    value += cfg.lambda_e * entropy_loss(f);
    if (dlogits) {
        df -= 2.0 * f;
        df += cfg.lambda_e * entropy_loss_grad(f);
        dlogits->resize(logits.rows(), logits.cols());
        for (Eigen::Index i = 0; i < f.rows(); ++i) {
            const double along = df.row(i).dot(f.row(i));
            dlogits->row(i) = (f.row(i).array() * (df.row(i).array() - along)).matrix();
        }
    }
    return value;
}

Matrix dac_features(const Matrix& logits) {
    Matrix u = logits.cwiseProduct(logits);
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
        const double norm = u.row(i).norm();
        if (norm == 0.0) throw InvalidArgument("dac_features: all-zero logit row");
        u.row(i) /= norm;
    }
    return u;
}

Matrix gat_features(const Matrix& logits) { return softmax_rows(logits); }

RelationMatrix ground_truth_relations(int n, int k) {
    if (n < 1 || k < 1) throw InvalidArgument("ground_truth_relations: empty problem");
    RelationMatrix r;
    r.m = n;
    r.entries.assign(static_cast<std::size_t>(n) * n, 0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i % k == j % k) r.entries[static_cast<std::size_t>(i) * n + j] = 1;
    return r;
}

RelationMatrix all_ones_relations(int n) {
    if (n < 1) throw InvalidArgument("all_ones_relations: empty problem");
    RelationMatrix r;
    r.m = n;
    r.entries.assign(static_cast<std::size_t>(n) * n, 1);
    return r;
}

double dac_objective(const Matrix& features, const RelationMatrix& relations) {
    if (features.rows() != relations.m) throw InvalidArgument("dac_objective: relation size mismatch");
    return pairwise_objective(features, relations, nullptr);
}

double gat_objective(const Matrix& features, const RelationMatrix& relations, double lambda_e) {
    if (features.rows() != relations.m) throw InvalidArgument("gat_objective: relation size mismatch");
    return pairwise_objective(features, relations, nullptr) - features.squaredNorm() +
           lambda_e * entropy_loss(features);
}

TheoremVerdict run_trial(const TrialConfig& cfg) {
    cfg.validate();
    Rng rng(derive_seed(cfg.seed, "theorem_trial"));

    Matrix logits(cfg.n, cfg.k);
    if (cfg.init == InitMode::kRandom) {
        // Small logits keep the realized rows soft at first, so the pairwise
        // term sorts samples into classes before the confidence term can
        // freeze anyone onto a mismatched vertex.
        for (Eigen::Index i = 0; i < logits.size(); ++i) logits.data()[i] = 0.01 * rng.normal();
    } else {
        // Every row starts next to the same vertex of the feature simplex,
        // the configuration the collapse arguments are about.
        const double lead = cfg.regime == Regime::kGat ? 4.0 : 1.0;
        for (Eigen::Index i = 0; i < logits.rows(); ++i)
            for (Eigen::Index j = 0; j < logits.cols(); ++j)
                logits(i, j) = (j == 0 ? lead : 0.0) + 0.01 * rng.normal();
    }

    TheoremVerdict verdict;
    RelationMatrix relations = estimate_relations(logits, cfg, 0);
    for (int iter = 0; iter < cfg.iters; ++iter) {
        if (cfg.relations == RelationMode::kSelfEstimated && iter > 0)
            relations = estimate_relations(logits, cfg, static_cast<std::uint64_t>(iter));

        Matrix grad;
        const double objective = trial_objective(logits, cfg, relations, &grad);
        if (!std::isfinite(objective) || !grad.allFinite()) {
            verdict.valid = false;
            break;
        }
        logits -= cfg.step * grad;
    }

    const Matrix features = realize(logits, cfg.regime);
    const RelationMatrix final_relations =
        estimate_relations(logits, cfg, static_cast<std::uint64_t>(cfg.iters));
    verdict.final_objective = cfg.regime == Regime::kDac
                                  ? dac_objective(features, final_relations)
                                  : gat_objective(features, final_relations, cfg.lambda_e);

    std::vector<bool> used(static_cast<std::size_t>(cfg.k), false);
    int one_hot = 0;
    for (Eigen::Index i = 0; i < features.rows(); ++i) {
        Eigen::Index arg = 0;
        const double top = features.row(i).maxCoeff(&arg);
        if (top > 0.99) ++one_hot;
        used[static_cast<std::size_t>(arg)] = true;
    }
    verdict.one_hot_fraction = static_cast<double>(one_hot) / static_cast<double>(cfg.n);
    verdict.occupied_clusters = 0;
    for (bool u : used) verdict.occupied_clusters += u ? 1 : 0;
    verdict.collapsed = verdict.occupied_clusters < cfg.k;
    return verdict;
}

namespace {

bool same_setting(const TrialConfig& a, const TrialConfig& b) {
    return a.n == b.n && a.k == b.k && a.regime == b.regime && a.relations == b.relations &&
           a.init == b.init && a.iters == b.iters && a.step == b.step && a.lambda_e == b.lambda_e;
}

}  // namespace

SweepResult sweep(const std::vector<TrialConfig>& grid) {
    SweepResult result;
    for (const TrialConfig& cfg : grid) result.trials.push_back({cfg, run_trial(cfg)});

    for (const TrialOutcome& outcome : result.trials) {
        SweepRow* row = nullptr;
        for (SweepRow& candidate : result.rows)
            if (same_setting(candidate.config, outcome.config)) row = &candidate;
        if (!row) {
            result.rows.push_back({outcome.config, 0, 0, 0.0, 0.0, 0.0});
            row = &result.rows.back();
        }
        row->trials += 1;
        if (!outcome.verdict.valid) {
            row->invalid += 1;
            continue;
        }
        row->mean_one_hot_fraction += outcome.verdict.one_hot_fraction;
        row->collapse_fraction += outcome.verdict.collapsed ? 1.0 : 0.0;
        row->mean_final_objective += outcome.verdict.final_objective;
    }
    for (SweepRow& row : result.rows) {
        const int valid = row.trials - row.invalid;
        if (valid > 0) {
            row.mean_one_hot_fraction /= valid;
            row.collapse_fraction /= valid;
            row.mean_final_objective /= valid;
        }
    }
    return result;
}

const char* regime_name(Regime r) { return r == Regime::kDac ? "dac" : "gat"; }

Regime parse_regime(const std::string& name) {
    if (name == "dac") return Regime::kDac;
    if (name == "gat") return Regime::kGat;
    throw InvalidArgument("unknown regime '" + name + "', expected dac or gat");
}

}  // namespace gatc
