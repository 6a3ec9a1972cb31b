/* Public C surface of the clustering toolkit. Every entry point reports
 * failure through a status code; the per-thread message from
 * gatc_last_error() describes the most recent failure in detail. */
#ifndef GATCLUSTER_H
#define GATCLUSTER_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gatc_status {
    GATC_OK = 0,
    GATC_ERR_INVALID_ARGUMENT = 1, /* bad config values, shape mismatches */
    GATC_ERR_IO = 2,               /* missing or unreadable/unwritable files */
    GATC_ERR_RUNTIME = 3           /* anything else, including numeric failure */
} gatc_status;

/* Message describing this thread's most recent failure; empty string after
 * a success. The pointer stays valid until the next call on the thread. */
const char* gatc_last_error(void);

/* Runs the full training job described by the JSON config at config_path.
 * Artifacts (config echo, step log, checkpoints) land in the config's output
 * directory, resolved against $GATCLUSTER_OUTPUT_ROOT when relative.
 * resume_checkpoint continues a previous run when non-NULL. When run_dir is
 * non-NULL the resolved run directory is copied into it (NUL-terminated,
 * truncated to run_dir_len). */
gatc_status gatc_train(const char* config_path, const char* resume_checkpoint,
                       char* run_dir, size_t run_dir_len);

/* A trained model bound to a dataset, ready for inference. data_path is
 * either an image folder or a JSON file carrying a data section (a run
 * config, or the bare section itself). */
typedef struct gatc_session gatc_session;

gatc_session* gatc_session_open(const char* checkpoint_path, const char* data_path);
void gatc_session_close(gatc_session* session);

int64_t gatc_session_size(const gatc_session* session);
int32_t gatc_session_clusters(const gatc_session* session);

/* Cluster assignment per sample; out must hold gatc_session_size entries. */
gatc_status gatc_session_assignments(gatc_session* session, int32_t* out);

typedef struct gatc_metrics {
    double acc;
    double nmi;
    double ari;
    int32_t degenerate_nmi; /* nonzero when a single-cluster side zeroed NMI */
} gatc_metrics;

/* Scores the assignments against the dataset's ground truth. Fails with
 * GATC_ERR_INVALID_ARGUMENT when the dataset has no labels. */
gatc_status gatc_session_metrics(gatc_session* session, gatc_metrics* out);

/* Writes scatter.csv and scatter.png (the label-feature map projected onto
 * the unit disk) plus attention overlay PNGs for the first `overlays`
 * samples into out_dir. */
gatc_status gatc_session_visualize(gatc_session* session, const char* out_dir,
                                   int32_t overlays);

/* One optimization-trial family for the collapse experiments. seeds run
 * 0..seeds-1; NULL/non-positive optional fields take the built-in defaults
 * (ground_truth relations, random init, 2000 iterations, step 0.1,
 * lambda_e 3). */
typedef struct gatc_theorem_opts {
    int32_t n;
    int32_t k;
    int32_t seeds;
    const char* regime;    /* "dac" or "gat" */
    const char* relations; /* "ground_truth", "self_estimated" or "all_ones" */
    const char* init;      /* "random" or "near_collapse" */
    int32_t iters;
    double step;
    double lambda_e;
} gatc_theorem_opts;

typedef struct gatc_theorem_row {
    int32_t trials;
    int32_t invalid;
    double mean_one_hot_fraction;
    double collapse_fraction;
    double mean_final_objective;
} gatc_theorem_row;

/* Runs the seed sweep; fills *row when non-NULL. When out_dir is non-NULL,
 * writes verdicts.json and verdicts.csv (one line per trial) there. */
gatc_status gatc_theorem_check(const gatc_theorem_opts* opts, const char* out_dir,
                               gatc_theorem_row* row);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* GATCLUSTER_H */
