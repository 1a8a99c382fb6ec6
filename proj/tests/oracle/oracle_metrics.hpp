#pragma once

// Reference implementations used as oracles: plain scalar code, no tape, no
// shared numeric paths with the library (only published constants are reused).
// These deliberately restate the metric definitions instead of calling the
// production pipeline, so the two routes check each other.

#include <array>
#include <vector>

#include "core/image.hpp"
#include "core/metrics/vmaf_model.hpp"
#include "core/tensor.hpp"

namespace negtune::oracle {

double ms_ssim_ref(const ImageBatch& ref, const ImageBatch& dist);

// planes on the 0-255 scale
std::array<double, 4> vif_features_ref(const std::vector<std::vector<double>>& ref,
                                       const std::vector<std::vector<double>>& dist, double egl);
double adm_feature_ref(const std::vector<std::vector<double>>& ref,
                       const std::vector<std::vector<double>>& dist, double egl);

struct VmafScoresRef {
    double y, u, v, mean;
};
VmafScoresRef vmaf_neg_ref(const ImageBatch& ref, const ImageBatch& dist, const VmafModel& model);

// single channel helper (plane01 in [0,1])
double vmaf_channel_ref(const std::vector<std::vector<double>>& ref01,
                        const std::vector<std::vector<double>>& dist01, const VmafModel& model);

} // namespace negtune::oracle
