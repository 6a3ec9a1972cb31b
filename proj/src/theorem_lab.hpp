#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pseudo_targets.hpp"
#include "tensor.hpp"

namespace gatc {

/// Which clustering objective a trial optimizes. Both act on free per-sample
/// feature vectors, no images or network involved, which isolates the
/// objective's own fixed points from everything the model adds.
///
/// kDac: binary cross entropy between pairwise relations and plain inner
/// products of unit-norm nonnegative features (the DAC formulation).
/// kGat: the same pairwise term on cosine similarities of row-stochastic
/// features, plus a confidence reward and an entropy balance penalty.
enum class Regime { kDac, kGat };

enum class RelationMode {
    kGroundTruth,    ///< fixed block relations from the planted classes (i mod k)
    kSelfEstimated,  ///< re-estimated from the current features each iteration
    kAllOnes,        ///< degenerate estimate relating every pair, the output a
                     ///< similarity threshold produces once features collapse
};

enum class InitMode {
    kRandom,        ///< standard normal logits
    kNearCollapse,  ///< all rows start close to the same one-hot vertex
};

struct TrialConfig {
    int n = 60;
    int k = 3;
    Regime regime = Regime::kGat;
    RelationMode relations = RelationMode::kGroundTruth;
    InitMode init = InitMode::kRandom;
    std::uint64_t seed = 0;
    int iters = 2000;
    double step = 0.1;
    double lambda_e = 3.0;  ///< entropy weight; only the kGat regime uses it

    void validate() const;
};

/// What the optimized features look like at the end of a trial.
struct TheoremVerdict {
    double one_hot_fraction = 0.0;  ///< rows whose max entry exceeds 0.99
    int occupied_clusters = 0;      ///< distinct argmax values
    bool collapsed = false;         ///< occupied_clusters < k
    double final_objective = 0.0;
    bool valid = true;  ///< false when the optimization turned non-finite
};

struct TrialOutcome {
    TrialConfig config;
    TheoremVerdict verdict;
};

/// One aggregate line per distinct setting (everything but the seed).
/// The mean and fraction fields average valid trials only.
struct SweepRow {
    TrialConfig config;  ///< representative config; its seed is meaningless
    int trials = 0;
    int invalid = 0;
    double mean_one_hot_fraction = 0.0;
    double collapse_fraction = 0.0;
    double mean_final_objective = 0.0;
};

struct SweepResult {
    std::vector<TrialOutcome> trials;
    std::vector<SweepRow> rows;
};

/// Realizes logits as unit-L2-norm nonnegative rows by squaring entrywise
/// and normalizing. Smooth everywhere, so plain gradient descent applies.
Matrix dac_features(const Matrix& logits);

/// Realizes logits as probability rows via softmax.
Matrix gat_features(const Matrix& logits);

/// Block relations of the planted balanced classes: i and j relate iff
/// i == j (mod k).
RelationMatrix ground_truth_relations(int n, int k);

/// Every pair related; the degenerate self-estimate of a collapsed solution.
RelationMatrix all_ones_relations(int n);

/// Sum over all ordered pairs of the clamped binary cross entropy between
/// r_ij and the inner product of rows i and j. Rows must be unit-norm
/// nonnegative (dac_features output).
double dac_objective(const Matrix& features, const RelationMatrix& relations);

/// The pairwise term on cosine similarities, minus the total self-confidence
/// sum_i l_i.l_i, plus lambda_e times the entropy balance penalty
/// sum_h p_h log p_h of the mean assignment p.
double gat_objective(const Matrix& features, const RelationMatrix& relations, double lambda_e);

/// The configured regime's objective as a function of the free logits,
/// with optional gradient: the quantity run_trial descends on.
double trial_objective(const Matrix& logits, const TrialConfig& cfg,
                       const RelationMatrix& relations, Matrix* dlogits = nullptr);

/// Plain full-batch gradient descent on free logits under the configured
/// regime. Self-estimated relations are recomputed every iteration from the
/// current features; a non-finite objective or gradient marks the verdict
/// invalid.
TheoremVerdict run_trial(const TrialConfig& cfg);

/// Runs every trial in the grid and aggregates outcomes per setting.
/// Deterministic: outcomes depend only on the configs themselves.
SweepResult sweep(const std::vector<TrialConfig>& grid);

const char* regime_name(Regime r);
Regime parse_regime(const std::string& name);

}  // namespace gatc
