/* negtune - learned-codec fine-tuning toolkit with gain-limited perceptual
 * metrics. C API: opaque handles, integer status codes, no global state. */

#ifndef NEGTUNE_H
#define NEGTUNE_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define NEGTUNE_API_VERSION_MAJOR 0
#define NEGTUNE_API_VERSION_MINOR 1

typedef enum nt_status {
    NT_OK = 0,
    NT_ERR_RUNTIME = 1, /* I/O failures, divergence, metric errors */
    NT_ERR_CONFIG = 2,  /* invalid configuration or arguments */
} nt_status;

typedef struct nt_context nt_context;     /* error reporting scope */
typedef struct nt_vmaf_model nt_vmaf_model;
typedef struct nt_codec nt_codec;
typedef struct nt_corpus nt_corpus;

/* ---- context ---- */
nt_status nt_context_create(nt_context **ctx);
void nt_context_destroy(nt_context *ctx);
/* message of the last failure on this context; valid until the next call */
const char *nt_context_errmsg(const nt_context *ctx);
const char *nt_version(void);

/* ---- metric model ---- */
nt_status nt_vmaf_model_load(nt_context *ctx, const char *path, nt_vmaf_model **model);
void nt_vmaf_model_destroy(nt_vmaf_model *model);

/* ---- pairwise metrics on raw buffers ----
 * Planar RGB doubles in [0,1], layout [3][height][width], identical shapes. */
typedef struct nt_pair_scores {
    double psnr_db;
    double ms_ssim;
    double vmafneg_y, vmafneg_u, vmafneg_v, vmafneg_mean;
} nt_pair_scores;

nt_status nt_score_pair(nt_context *ctx, const nt_vmaf_model *model, const double *ref,
                        const double *dist, int width, int height, nt_pair_scores *out);

/* d(metric)/d(dist), written to grad_out (same layout as the inputs).
 * metric: "mse", "ms_ssim" or "vmaf_neg". */
nt_status nt_metric_gradient(nt_context *ctx, const nt_vmaf_model *model, const char *metric,
                             const double *ref, const double *dist, int width, int height,
                             double *value_out, double *grad_out);

/* ---- codec handles ---- */
typedef struct nt_codec_config {
    int base_channels;
    int latent_channels;
    int hyper_channels;
    int kernel;
    uint64_t seed;
} nt_codec_config;

void nt_codec_config_default(nt_codec_config *cfg);
nt_status nt_codec_create(nt_context *ctx, const nt_codec_config *cfg, nt_codec **codec);
nt_status nt_codec_load(nt_context *ctx, const nt_codec_config *cfg, const char *checkpoint_path,
                        nt_codec **codec);
nt_status nt_codec_save(nt_context *ctx, const nt_codec *codec, const char *provenance_json,
                        const char *checkpoint_path);
void nt_codec_destroy(nt_codec *codec);
/* parameters in scope: "all", "encoder", "decoder", or "dec.<k>" */
nt_status nt_codec_param_count(nt_context *ctx, const nt_codec *codec, const char *scope,
                               long *count);

/* round-trips one image: reconstruction written to recon_out (same layout),
 * rate estimate in bits per pixel to bpp_out */
nt_status nt_codec_code_image(nt_context *ctx, nt_codec *codec, const double *rgb, int width,
                              int height, double *recon_out, double *bpp_out);

/* ---- corpora ---- */
nt_status nt_corpus_open(nt_context *ctx, const char *root, const char *split, nt_corpus **corpus);
void nt_corpus_destroy(nt_corpus *corpus);
nt_status nt_corpus_size(nt_context *ctx, const nt_corpus *corpus, size_t *size);

/* ---- run drivers (config file in, artifacts out) ---- */
nt_status nt_run_calibrate(nt_context *ctx, const char *config_path);
nt_status nt_run_finetune(nt_context *ctx, const char *config_path);
nt_status nt_run_evaluate(nt_context *ctx, const char *config_path);
nt_status nt_run_probe(nt_context *ctx, const char *config_path);
nt_status nt_run_rank(nt_context *ctx, const char *const *grid_csv_paths, int n_paths,
                      const char *tie_policy, const char *out_csv);

/* apply a single "section.key=value" override before a run driver call */
typedef struct nt_overrides nt_overrides;
nt_status nt_overrides_create(nt_overrides **ov);
nt_status nt_overrides_add(nt_context *ctx, nt_overrides *ov, const char *dotted_key,
                           const char *value);
void nt_overrides_destroy(nt_overrides *ov);

nt_status nt_run_calibrate_ov(nt_context *ctx, const char *config_path, const nt_overrides *ov);
nt_status nt_run_finetune_ov(nt_context *ctx, const char *config_path, const nt_overrides *ov);
nt_status nt_run_evaluate_ov(nt_context *ctx, const char *config_path, const nt_overrides *ov);
nt_status nt_run_probe_ov(nt_context *ctx, const char *config_path, const nt_overrides *ov);

#ifdef __cplusplus
}
#endif

#endif /* NEGTUNE_H */
