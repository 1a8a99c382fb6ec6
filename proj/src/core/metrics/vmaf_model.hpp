#pragma once

#include <array>
#include <string>
#include <vector>

#include "../autodiff.hpp"

namespace negtune {

constexpr int kVmafFeatureCount = 6;

// Canonical feature order: adm, motion, vif scales 0-3.
extern const std::array<const char*, kVmafFeatureCount> kVmafFeatureNames;

// Feature fusion model: linear feature rescaling followed by an RBF nu-SVR
// and score denormalization. Serialized as JSON carrying the libsvm model
// text verbatim, plus the per-feature enhancement gain limits.
struct VmafModel {
    std::vector<double> slopes;      // [0] denormalizes the score, [1..6] features
    std::vector<double> intercepts;  // same layout
    double score_clip_lo = 0.0;
    double score_clip_hi = 100.0;
    double svr_gamma = 0.0;
    double svr_rho = 0.0;
    std::vector<std::array<double, kVmafFeatureCount>> support_vectors;
    std::vector<double> dual_coef;
    double vif_egl = 1.0; // enhancement gain limits; >= 1, infinity disables
    double adm_egl = 1.0;

    static VmafModel load(const std::string& path);
    static VmafModel from_json_text(const std::string& text);
    std::string to_json_text() const;

    // SVR prediction on raw (unnormalized) features, before clipping.
    double predict_raw(const std::array<double, kVmafFeatureCount>& features) const;
};

// Differentiable fusion: normalize, kernel regression, denormalize, clip.
ad::Var svr_fuse_g(const std::array<ad::Var, kVmafFeatureCount>& features, const VmafModel& model);

} // namespace negtune
