#include "negtune/negtune.h"

#include <cstring>
#include <string>
#include <utility>
#include <vector>

#include "core/checkpoint.hpp"
#include "core/codec.hpp"
#include "core/config.hpp"
#include "core/corpus.hpp"
#include "core/metrics/vmaf.hpp"
#include "core/runs.hpp"

using namespace negtune;

struct nt_context {
    std::string errmsg;
};

struct nt_vmaf_model {
    VmafModel model;
};

struct nt_codec {
    CodecModel model;
};

struct nt_corpus {
    CorpusManifest manifest;
};

struct nt_overrides {
    std::vector<std::pair<std::string, std::string>> kv;
};

namespace {

nt_status fail(nt_context* ctx, nt_status code, const char* what) {
    if (ctx) ctx->errmsg = what ? what : "unknown error";
    return code;
}

template <typename Fn>
nt_status guarded(nt_context* ctx, Fn&& fn) {
    try {
        fn();
        return NT_OK;
    } catch (const ConfigError& e) {
        return fail(ctx, NT_ERR_CONFIG, e.what());
    } catch (const std::invalid_argument& e) {
        return fail(ctx, NT_ERR_CONFIG, e.what());
    } catch (const std::exception& e) {
        return fail(ctx, NT_ERR_RUNTIME, e.what());
    }
}

ImageBatch batch_from_buffer(const double* rgb, int width, int height) {
    Tensor t(1, 3, height, width);
    std::memcpy(t.data.data(), rgb, t.data.size() * sizeof(double));
    return ImageBatch(std::move(t));
}

CodecConfig to_cpp(const nt_codec_config* cfg) {
    CodecConfig c;
    if (cfg) {
        c.base_channels = cfg->base_channels;
        c.latent_channels = cfg->latent_channels;
        c.hyper_channels = cfg->hyper_channels;
        c.kernel = cfg->kernel;
        c.seed = cfg->seed;
    }
    return c;
}

RunConfig load_config(const char* path, const nt_overrides* ov) {
    RunConfig cfg = RunConfig::parse_file(path);
    if (ov)
        for (const auto& [k, v] : ov->kv) cfg.set_key(k, v);
    return cfg;
}

} // namespace

extern "C" {

nt_status nt_context_create(nt_context** ctx) {
    if (!ctx) return NT_ERR_CONFIG;
    *ctx = new nt_context();
    return NT_OK;
}

void nt_context_destroy(nt_context* ctx) { delete ctx; }

const char* nt_context_errmsg(const nt_context* ctx) {
    return ctx ? ctx->errmsg.c_str() : "";
}

const char* nt_version(void) { return "0.1.0"; }

nt_status nt_vmaf_model_load(nt_context* ctx, const char* path, nt_vmaf_model** model) {
    if (!path || !model) return fail(ctx, NT_ERR_CONFIG, "null argument");
    return guarded(ctx, [&] { *model = new nt_vmaf_model{VmafModel::load(path)}; });
}

void nt_vmaf_model_destroy(nt_vmaf_model* model) { delete model; }

nt_status nt_score_pair(nt_context* ctx, const nt_vmaf_model* model, const double* ref,
                        const double* dist, int width, int height, nt_pair_scores* out) {
    if (!model || !ref || !dist || !out) return fail(ctx, NT_ERR_CONFIG, "null argument");
    return guarded(ctx, [&] {
        ImageBatch r = batch_from_buffer(ref, width, height);
        ImageBatch d = batch_from_buffer(dist, width, height);
        out->psnr_db = psnr_db(r, d);
        out->ms_ssim = ms_ssim(r, d).value;
        VmafScores s = vmaf_neg(r, d, model->model);
        out->vmafneg_y = s.y;
        out->vmafneg_u = s.u;
        out->vmafneg_v = s.v;
        out->vmafneg_mean = s.mean;
    });
}

nt_status nt_metric_gradient(nt_context* ctx, const nt_vmaf_model* model, const char* metric,
                             const double* ref, const double* dist, int width, int height,
                             double* value_out, double* grad_out) {
    if (!metric || !ref || !dist || !value_out || !grad_out)
        return fail(ctx, NT_ERR_CONFIG, "null argument");
    return guarded(ctx, [&] {
        ImageBatch r = batch_from_buffer(ref, width, height);
        ImageBatch d = batch_from_buffer(dist, width, height);
        MetricId id = metric_id_from_name(metric);
        MetricValue mv = metric_with_gradient(id, r, d, model ? &model->model : nullptr);
        *value_out = mv.value;
        std::memcpy(grad_out, mv.gradient->data.data(), mv.gradient->data.size() * sizeof(double));
    });
}

void nt_codec_config_default(nt_codec_config* cfg) {
    if (!cfg) return;
    CodecConfig c;
    cfg->base_channels = c.base_channels;
    cfg->latent_channels = c.latent_channels;
    cfg->hyper_channels = c.hyper_channels;
    cfg->kernel = c.kernel;
    cfg->seed = c.seed;
}

nt_status nt_codec_create(nt_context* ctx, const nt_codec_config* cfg, nt_codec** codec) {
    if (!codec) return fail(ctx, NT_ERR_CONFIG, "null argument");
    return guarded(ctx, [&] { *codec = new nt_codec{CodecModel(to_cpp(cfg))}; });
}

nt_status nt_codec_load(nt_context* ctx, const nt_codec_config* cfg, const char* checkpoint_path,
                        nt_codec** codec) {
    if (!codec || !checkpoint_path) return fail(ctx, NT_ERR_CONFIG, "null argument");
    return guarded(ctx, [&] {
        auto holder = new nt_codec{CodecModel(to_cpp(cfg))};
        try {
            Checkpoint::load(checkpoint_path).restore_into(holder->model);
        } catch (...) {
            delete holder;
            throw;
        }
        *codec = holder;
    });
}

nt_status nt_codec_save(nt_context* ctx, const nt_codec* codec, const char* provenance_json,
                        const char* checkpoint_path) {
    if (!codec || !checkpoint_path) return fail(ctx, NT_ERR_CONFIG, "null argument");
    return guarded(ctx, [&] {
        Checkpoint ck = Checkpoint::from_model(codec->model,
                                               provenance_json ? provenance_json : "{}");
        ck.save(checkpoint_path);
    });
}

void nt_codec_destroy(nt_codec* codec) { delete codec; }

nt_status nt_codec_param_count(nt_context* ctx, const nt_codec* codec, const char* scope,
                               long* count) {
    if (!codec || !scope || !count) return fail(ctx, NT_ERR_CONFIG, "null argument");
    return guarded(ctx, [&] {
        const std::string s = scope;
        const CodecModel& m = codec->model;
        if (s == "all") {
            *count = m.count_params();
        } else if (s == "encoder") {
            long total = 0;
            for (const auto& n : m.param_names())
                if (n.rfind("enc.", 0) == 0 || n.rfind("hyper_enc.", 0) == 0)
                    total += static_cast<long>(m.param(n).value().size());
            *count = total;
        } else if (s == "decoder") {
            long total = 0;
            for (int b = 0; b < m.decoder_block_count(); ++b) total += m.count_params_block(b);
            *count = total;
        } else if (s.rfind("dec.", 0) == 0) {
            *count = m.count_params_block(std::stoi(s.substr(4)));
        } else {
            throw std::invalid_argument("unknown parameter scope: " + s);
        }
    });
}

nt_status nt_codec_code_image(nt_context* ctx, nt_codec* codec, const double* rgb, int width,
                              int height, double* recon_out, double* bpp_out) {
    if (!codec || !rgb || !recon_out || !bpp_out) return fail(ctx, NT_ERR_CONFIG, "null argument");
    return guarded(ctx, [&] {
        ImageBatch img = batch_from_buffer(rgb, width, height);
        CodedImage coded = code_image(codec->model, img, CodingMode::evaluation);
        std::memcpy(recon_out, coded.reconstruction.data.data.data(),
                    coded.reconstruction.data.data.size() * sizeof(double));
        *bpp_out = coded.rate.bpp;
    });
}

nt_status nt_corpus_open(nt_context* ctx, const char* root, const char* split,
                         nt_corpus** corpus) {
    if (!root || !split || !corpus) return fail(ctx, NT_ERR_CONFIG, "null argument");
    return guarded(ctx, [&] {
        *corpus = new nt_corpus{load_corpus(root, split_from_name(split))};
    });
}

void nt_corpus_destroy(nt_corpus* corpus) { delete corpus; }

nt_status nt_corpus_size(nt_context* ctx, const nt_corpus* corpus, size_t* size) {
    if (!corpus || !size) return fail(ctx, NT_ERR_CONFIG, "null argument");
    *size = corpus->manifest.size();
    return NT_OK;
}

nt_status nt_run_calibrate(nt_context* ctx, const char* config_path) {
    return nt_run_calibrate_ov(ctx, config_path, nullptr);
}
nt_status nt_run_finetune(nt_context* ctx, const char* config_path) {
    return nt_run_finetune_ov(ctx, config_path, nullptr);
}
nt_status nt_run_evaluate(nt_context* ctx, const char* config_path) {
    return nt_run_evaluate_ov(ctx, config_path, nullptr);
}
nt_status nt_run_probe(nt_context* ctx, const char* config_path) {
    return nt_run_probe_ov(ctx, config_path, nullptr);
}

nt_status nt_run_rank(nt_context* ctx, const char* const* grid_csv_paths, int n_paths,
                      const char* tie_policy, const char* out_csv) {
    if (!grid_csv_paths || n_paths < 1 || !out_csv)
        return fail(ctx, NT_ERR_CONFIG, "null argument");
    return guarded(ctx, [&] {
        std::vector<std::string> paths(grid_csv_paths, grid_csv_paths + n_paths);
        run_rank(paths, tie_policy ? tie_policy : "min", out_csv);
    });
}

nt_status nt_overrides_create(nt_overrides** ov) {
    if (!ov) return NT_ERR_CONFIG;
    *ov = new nt_overrides();
    return NT_OK;
}

nt_status nt_overrides_add(nt_context* ctx, nt_overrides* ov, const char* dotted_key,
                           const char* value) {
    if (!ov || !dotted_key || !value) return fail(ctx, NT_ERR_CONFIG, "null argument");
    ov->kv.emplace_back(dotted_key, value);
    return NT_OK;
}

void nt_overrides_destroy(nt_overrides* ov) { delete ov; }

nt_status nt_run_calibrate_ov(nt_context* ctx, const char* config_path, const nt_overrides* ov) {
    if (!config_path) return fail(ctx, NT_ERR_CONFIG, "null argument");
    return guarded(ctx, [&] { run_calibrate(load_config(config_path, ov)); });
}

nt_status nt_run_finetune_ov(nt_context* ctx, const char* config_path, const nt_overrides* ov) {
    if (!config_path) return fail(ctx, NT_ERR_CONFIG, "null argument");
    return guarded(ctx, [&] { run_finetune(load_config(config_path, ov)); });
}

nt_status nt_run_evaluate_ov(nt_context* ctx, const char* config_path, const nt_overrides* ov) {
    if (!config_path) return fail(ctx, NT_ERR_CONFIG, "null argument");
    return guarded(ctx, [&] { run_evaluate(load_config(config_path, ov)); });
}

nt_status nt_run_probe_ov(nt_context* ctx, const char* config_path, const nt_overrides* ov) {
    if (!config_path) return fail(ctx, NT_ERR_CONFIG, "null argument");
    return guarded(ctx, [&] { run_probe(load_config(config_path, ov)); });
}

} // extern "C"
