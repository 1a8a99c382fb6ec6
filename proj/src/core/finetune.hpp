#pragma once

#include <functional>
#include <string>
#include <vector>

#include "checkpoint.hpp"
#include "codec.hpp"
#include "corpus.hpp"
#include "loss.hpp"

namespace negtune {

constexpr double kFixedLearningRate = 1e-4;

struct TrainConfig {
    int epochs = 10;
    double learning_rate = kFixedLearningRate; // overriding warns
    int crop = kTrainCropSide;
    int batch_size = 8;
    uint64_t seed = 1;
    LossWeights weights;
    ScalingFactors scaling;
    FreezeSpec freeze;
    double grad_clip_norm = 1.0;
    int completed_epochs = 0; // nonzero when resuming

    void validate() const;
};

struct ValidationStats {
    double psnr_db = 0.0, ms_ssim = 0.0;
    double vmafneg_y = 0.0, vmafneg_u = 0.0, vmafneg_v = 0.0, vmafneg_mean = 0.0;
    double bpp = 0.0;
};

struct EpochRecord {
    int epoch = 0; // 1-based, cumulative across resumes
    LossBreakdown train_mean;
    ValidationStats validation;
    double wall_seconds = 0.0;
};

struct TrainHistory {
    uint64_t seed = 0;
    std::vector<EpochRecord> epochs;
};

// Adaptive-moment state, serialized into checkpoints so a resumed run is
// bit-equal to an uninterrupted one.
struct OptState {
    std::map<std::string, Tensor> m, v;
    long step = 0;

    void embed_into(Checkpoint& ck) const;
    static OptState extract_from(const Checkpoint& ck);
};

// Mutates only the parameters selected by cfg.freeze. Validation runs at
// every epoch end on the uncropped validation images. A non-finite loss
// aborts after restoring the last epoch-boundary parameters, with the
// dominant loss component named in the error.
TrainHistory finetune(CodecModel& model, const CorpusManifest& train, const CorpusManifest& val,
                      const TrainConfig& cfg, const VmafModel& metric_model,
                      OptState* opt_state = nullptr,
                      const std::function<void(const EpochRecord&)>& on_epoch = {});

ValidationStats evaluate_validation(CodecModel& model, const CorpusManifest& val,
                                    const VmafModel& metric_model);

} // namespace negtune
