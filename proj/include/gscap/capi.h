/* gscap C API: caption-generation toolkit behind a plain shared-library
 * surface. All functions return a status code; on failure the context holds
 * a human-readable message. Handles are opaque; strings are UTF-8. */
#ifndef GSCAP_CAPI_H
#define GSCAP_CAPI_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define GSCAP_API __declspec(dllexport)
#else
#define GSCAP_API __attribute__((visibility("default")))
#endif

/* Status codes double as CLI exit codes. */
enum {
    GSCAP_OK = 0,
    GSCAP_ERR_CONFIG = 1,     /* bad usage or configuration */
    GSCAP_ERR_VALIDATION = 2, /* data failed validation */
    GSCAP_ERR_NUMERIC = 3     /* numeric failure (divergence, non-finite values) */
};

enum {
    GSCAP_VARIANT_LSTM = 0,
    GSCAP_VARIANT_GST = 1,
    GSCAP_VARIANT_GSSCN = 2
};

enum {
    GSCAP_LOSS_CROSS_ENTROPY = 0,
    GSCAP_LOSS_SQUARED_ERROR = 1
};

typedef struct gscap_ctx gscap_ctx;

GSCAP_API const char* gscap_version(void);

GSCAP_API gscap_ctx* gscap_ctx_new(void);
GSCAP_API void gscap_ctx_free(gscap_ctx* ctx);
/* Message for the most recent failing call on this context. */
GSCAP_API const char* gscap_last_error(const gscap_ctx* ctx);

typedef struct {
    int64_t n_items;
    int64_t visual_dim;
    int64_t semantic_dim;
    int64_t vocab_size;   /* distinct word types available to the planted rule */
    int64_t caption_len;  /* k of the planted top-k rule */
    uint64_t seed;
} gscap_synth_opts;

/* Write a deterministic synthetic dataset (JSON lines) to out_path. */
GSCAP_API int gscap_synth(gscap_ctx* ctx, const gscap_synth_opts* opts, const char* out_path);

typedef struct {
    int variant;            /* GSCAP_VARIANT_* */
    int64_t hidden_dim;
    int64_t embed_dim;
    int64_t factor_dim;     /* <= 0: defaults to hidden_dim (gsscn only) */
    int64_t max_vocab;
    double sigma;           /* Gaussian smoothing width */
    int64_t radius;         /* <= 0: ceil(3 * sigma) */
    int loss_kind;          /* GSCAP_LOSS_* */
    double learning_rate;
    double dropout;
    int64_t epochs;
    int64_t batch_size;
    double grad_clip;       /* <= 0: no clipping */
    uint64_t seed;
    int fine_tune_embedding;       /* 0 or 1 */
    const char* embeddings_path;   /* optional, NULL to skip */
} gscap_train_opts;

/* Train on a dataset file; writes a checkpoint and a per-epoch loss CSV
 * (pass NULL for loss_csv_out to skip the trace). */
GSCAP_API int gscap_train(gscap_ctx* ctx, const gscap_train_opts* opts, const char* dataset_path,
                          const char* checkpoint_out, const char* loss_csv_out);

typedef struct {
    int64_t beam_size;   /* 1 reduces to greedy decoding */
    int64_t max_len;
    int64_t no_repeat_n; /* 0 disables the repetition filter */
} gscap_generate_opts;

/* Decode captions for every dataset item; writes JSON lines
 * {image_id, tokens, text, log_prob} to out_jsonl. */
GSCAP_API int gscap_generate(gscap_ctx* ctx, const gscap_generate_opts* opts,
                             const char* checkpoint_path, const char* dataset_path,
                             const char* out_jsonl);

typedef struct {
    const char* dict_path;   /* two-column L/E dictionary; NULL = identity translator */
    const char* refs_e_path; /* dataset with English references; NULL = reuse dataset_path */
} gscap_eval_opts;

/* Score generated captions against a dataset's references in both evaluation
 * spaces; writes a JSON report and an aligned text table (either output path
 * may be NULL). */
GSCAP_API int gscap_evaluate(gscap_ctx* ctx, const gscap_eval_opts* opts,
                             const char* generated_jsonl, const char* dataset_path,
                             const char* report_json_out, const char* report_table_out);

typedef struct {
    int variant;
    int64_t hidden_dim;
    int64_t embed_dim;
    int64_t semantic_dim;
    int64_t factor_dim;
    int64_t vocab_size;
    int64_t visual_dim;
    int64_t seq_len;   /* teacher-forced prediction steps */
    int loss_kind;
    double dropout;
    double epsilon;    /* finite-difference step */
    uint64_t seed;
} gscap_gradcheck_opts;

/* Compare analytic gradients against central finite differences on a seeded
 * random instance. Outputs may be NULL. */
GSCAP_API int gscap_gradcheck(gscap_ctx* ctx, const gscap_gradcheck_opts* opts,
                              double* max_rel_err_out, double* frac_within_tol_out);

typedef struct {
    int64_t hidden_dim;
    int64_t embed_dim;
    int64_t semantic_dim;
    int64_t factor_dim; /* <= 0: defaults to hidden_dim */
    int64_t vocab_size;
    int64_t visual_dim;
} gscap_dims;

/* Exact learnable-parameter counts for the three variants at the given dims,
 * in the order lstm, gst, gsscn. */
GSCAP_API int gscap_param_count(gscap_ctx* ctx, const gscap_dims* dims, uint64_t counts_out[3]);

#ifdef __cplusplus
}
#endif

#endif
