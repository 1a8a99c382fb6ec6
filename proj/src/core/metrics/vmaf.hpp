#pragma once

#include <string>

#include "../autodiff.hpp"
#include "../image.hpp"
#include "metric_value.hpp"
#include "mse_psnr.hpp"
#include "ms_ssim.hpp"
#include "vmaf_model.hpp"

namespace negtune {

struct VmafScores {
    double y = 0.0, u = 0.0, v = 0.0;
    double mean = 0.0; // unweighted arithmetic mean of the three channels
};

// Still-image convention: no temporal predecessor, motion is identically zero.
double motion_feature();

// Graph-level conversion of an RGB batch element to Y/U/V planes in [0,1].
struct YuvVars {
    ad::Var y, u, v;
};
YuvVars rgb_to_yuv_g(const ad::Var& rgb, int batch_index);

// Per-channel score: features on the 0-255 plane, fused by the model.
ad::Var vmaf_channel_g(const ad::Var& plane01, const ad::Var& dist_plane01, const VmafModel& model);

// Mean of the three channel scores for one batch element; the building block
// the training loss uses.
ad::Var vmaf_neg_mean_g(const ad::Var& ref_rgb, const ad::Var& dist_rgb, const VmafModel& model,
                        int batch_index = 0);

VmafScores vmaf_neg(const ImageBatch& ref, const ImageBatch& dist, const VmafModel& model);

enum class MetricId { mse, ms_ssim, vmaf_neg };
MetricId metric_id_from_name(const std::string& name);

// value + d(metric)/d(dist); throws with a diagnostic if the gradient is not
// finite everywhere.
MetricValue metric_with_gradient(MetricId id, const ImageBatch& ref, const ImageBatch& dist,
                                 const VmafModel* model);

} // namespace negtune
