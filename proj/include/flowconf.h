/*
 * flowconf C API.
 *
 * Opaque handles own their data and are released with the matching
 * *_free function. Every fallible call returns an fc_status; on failure
 * fc_last_error() describes the problem (thread-local, valid until the
 * next failing call on the same thread).
 */
#ifndef FLOWCONF_H
#define FLOWCONF_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(FLOWCONF_BUILDING_LIBRARY)
#    define FC_API __declspec(dllexport)
#  else
#    define FC_API __declspec(dllimport)
#  endif
#else
#  define FC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Values 1-3 double as CLI exit codes. */
typedef enum fc_status {
    FC_OK = 0,
    FC_ERR_USAGE = 1,
    FC_ERR_DATA = 2,
    FC_ERR_CELL = 3,
    FC_ERR_DISCARD = 4,
    FC_ERR_UNREACHABLE = 5,
    FC_ERR_INTERNAL = 6
} fc_status;

typedef struct fc_flowset fc_flowset;
typedef struct fc_hashes fc_hashes;
typedef struct fc_experiment fc_experiment;

FC_API const char* fc_last_error(void);
FC_API const char* fc_version(void);
FC_API void fc_string_free(char* s);

/* ---- flow sets ---------------------------------------------------------- */

FC_API fc_status fc_flowset_load(const char* dir, fc_flowset** out);
FC_API fc_status fc_flowset_load_manifest(const char* manifest, fc_flowset** out);
FC_API fc_status fc_flowset_synthesize(int sites, int instances, uint64_t seed, fc_flowset** out);
FC_API fc_status fc_flowset_save(const fc_flowset* fs, const char* dir);
FC_API void fc_flowset_free(fc_flowset* fs);

FC_API size_t fc_flowset_size(const fc_flowset* fs);
FC_API size_t fc_flowset_sites(const fc_flowset* fs);
FC_API size_t fc_flowset_packets(const fc_flowset* fs);
FC_API size_t fc_flowset_dummies(const fc_flowset* fs);
/* Files skipped during load because their names are not <site>-<instance>. */
FC_API size_t fc_flowset_skipped(const fc_flowset* fs);
FC_API fc_status fc_flowset_trace_info(const fc_flowset* fs, size_t index, int* site, int* instance,
                                       size_t* packets, double* duration);

/* ---- impairments and padding ------------------------------------------- */

/* ipdv_spec: "none", "normal:mean,sd[,min,max]" (seconds) or a sample file path. */
FC_API fc_status fc_flowset_impair(const fc_flowset* fs, double drop_probability, const char* ipdv_spec,
                                   uint64_t seed, fc_flowset** out);

/* Empirical IPDV samples from two captures of the same flows; written one per line. */
FC_API fc_status fc_ipdv_build(const fc_flowset* client, const fc_flowset* server, const char* out_path,
                               double* min, double* mean, double* max);

FC_API fc_status fc_histograms_build(const fc_flowset* corpus, double split_threshold, const char* out_path);

typedef enum fc_rate_definition { FC_RATE_DUMMY_PER_REAL = 0, FC_RATE_DUMMY_PER_TOTAL = 1 } fc_rate_definition;

typedef struct fc_pad_params {
    const char* histograms_path; /* NULL: build from the flow set being padded */
    double target_rate;          /* used when rate_scale <= 0 */
    double rate_scale;           /* <= 0: calibrate to target_rate */
    double burst_inject_probability;
    int max_dummies_per_gap;
    int rate_definition;         /* fc_rate_definition */
    uint64_t seed;
} fc_pad_params;

FC_API void fc_pad_params_default(fc_pad_params* p);
FC_API fc_status fc_flowset_pad(const fc_flowset* fs, const fc_pad_params* params, fc_flowset** out,
                                double* rate_scale_used, double* achieved_rate);

/* ---- hashing ------------------------------------------------------------ */

typedef enum fc_window_anchor { FC_ANCHOR_MIDPOINT = 0, FC_ANCHOR_START = 1 } fc_window_anchor;

typedef struct fc_hash_params {
    int n_windows;
    int hash_bits;
    uint64_t basis_seed;
    double time_scale;
    int anchor;              /* fc_window_anchor */
    int weight_first_window; /* boolean */
} fc_hash_params;

FC_API void fc_hash_params_default(fc_hash_params* p);
/* Flows with fewer packets than windows are skipped and counted. */
FC_API fc_status fc_hashes_compute(const fc_flowset* fs, const fc_hash_params* params, fc_hashes** out);
FC_API fc_status fc_hashes_load(const char* path, fc_hashes** out);
/* header may be NULL; it is written as a '#' comment line. */
FC_API fc_status fc_hashes_save(const fc_hashes* h, const char* path, const char* header);
FC_API void fc_hashes_free(fc_hashes* h);

FC_API size_t fc_hashes_size(const fc_hashes* h);
FC_API size_t fc_hashes_discarded(const fc_hashes* h);
/* Writes the lowercase hex hash (NUL-terminated) into buf. */
FC_API fc_status fc_hashes_get(const fc_hashes* h, size_t index, int* site, int* instance, int* bits, char* buf,
                               size_t buf_len);
FC_API fc_status fc_hashes_hamming(const fc_hashes* a, size_t i, const fc_hashes* b, size_t j, int* distance);

/* ---- matching ----------------------------------------------------------- */

typedef struct fc_match_summary {
    size_t queries;
    size_t perfect;
    size_t website;
    size_t miss;
    size_t no_prediction;
    double perfect_rate;
    double website_rate; /* perfect matches included */
    double false_match_rate;
} fc_match_summary;

/* report_path may be NULL. Query ids name their true counterparts. */
FC_API fc_status fc_match_nearest(const fc_hashes* queries, const fc_hashes* library, const char* report_path,
                                  fc_match_summary* out);
/* Every library entry with distance < tau counts as matched. */
FC_API fc_status fc_match_threshold(const fc_hashes* queries, const fc_hashes* library, int tau,
                                    const char* report_path, fc_match_summary* out);
FC_API fc_status fc_match_scc(const fc_flowset* unpadded, const fc_flowset* padded, double window_length,
                              const char* report_path, fc_match_summary* out);
/* tau,tpr,fpr over tau = 0..m; impostors drawn with the given seed. */
FC_API fc_status fc_roc(const fc_hashes* originals, const fc_hashes* modified, uint64_t seed, const char* csv_path,
                        double* auc);

/* ---- experiments -------------------------------------------------------- */

typedef enum fc_experiment_kind {
    FC_RUN_UNPADDED = 0, /* ROC + nearest-neighbour sweep */
    FC_EVAL_ROC = 1,     /* ROC cells only */
    FC_RUN_PADDED = 2,   /* padding + adapted-SCC grid */
    FC_EVAL_SCC = 3      /* adapted-SCC at the smallest configured window only */
} fc_experiment_kind;

/* config_path may be NULL for defaults. */
FC_API fc_status fc_experiment_load(const char* config_path, fc_experiment** out);
FC_API fc_status fc_experiment_set(fc_experiment* e, const char* key, const char* value);
/* Fully resolved config text; release with fc_string_free. */
FC_API fc_status fc_experiment_config_text(const fc_experiment* e, char** out);
/* Writes outputs under the configured output directory. Returns FC_ERR_CELL
 * when some grid cells failed (the others are still written). The summary
 * JSON is returned through summary_json when non-NULL. */
FC_API fc_status fc_experiment_run(const fc_experiment* e, int kind, char** summary_json);
FC_API void fc_experiment_free(fc_experiment* e);

#ifdef __cplusplus
}
#endif

#endif /* FLOWCONF_H */
