#include "vmaf.hpp"

#include <cmath>
#include <stdexcept>

#include "adm.hpp"
#include "vif.hpp"

namespace negtune {

using ad::Var;

double motion_feature() { return 0.0; }

YuvVars rgb_to_yuv_g(const Var& rgb, int batch_index) {
    const Tensor& t = rgb.value();
    if (t.c != 3) throw std::invalid_argument("rgb_to_yuv_g: need 3 channels");
    Var img = rgb;
    if (t.n > 1) {
        // isolate one batch element; metrics score images independently
        Var merged = ad::reshape_v(rgb, 1, t.n * 3, t.h, t.w);
        img = ad::reshape_v(ad::slice_channels(merged, batch_index * 3, 3), 1, 3, t.h, t.w);
    }
    Var r = ad::slice_channels(img, 0, 1);
    Var g = ad::slice_channels(img, 1, 1);
    Var b = ad::slice_channels(img, 2, 1);
    YuvVars out;
    out.y = clamp(r * 0.299 + g * 0.587 + b * 0.114, 0.0, 1.0);
    out.u = clamp((b - out.y) * (1.0 / 1.772) + 0.5, 0.0, 1.0);
    out.v = clamp((r - out.y) * (1.0 / 1.402) + 0.5, 0.0, 1.0);
    return out;
}

Var vmaf_channel_g(const Var& ref_plane01, const Var& dist_plane01, const VmafModel& model) {
    Var ref = ref_plane01 * 255.0;
    Var dist = dist_plane01 * 255.0;
    auto vif = vif_features_g(ref, dist, model.vif_egl);
    Var adm = adm_feature_g(ref, dist, model.adm_egl);
    std::array<Var, kVmafFeatureCount> feats = {
        adm, Var::scalar(motion_feature()), vif[0], vif[1], vif[2], vif[3]};
    return svr_fuse_g(feats, model);
}

Var vmaf_neg_mean_g(const Var& ref_rgb, const Var& dist_rgb, const VmafModel& model,
                    int batch_index) {
    const Tensor& t = ref_rgb.value();
    if (t.h < kMinMetricSide || t.w < kMinMetricSide)
        throw std::invalid_argument("vmaf: input below minimum metric side");
    YuvVars r = rgb_to_yuv_g(ref_rgb, batch_index);
    YuvVars d = rgb_to_yuv_g(dist_rgb, batch_index);
    Var sy = vmaf_channel_g(r.y, d.y, model);
    Var su = vmaf_channel_g(r.u, d.u, model);
    Var sv = vmaf_channel_g(r.v, d.v, model);
    return (sy + su + sv) * (1.0 / 3.0);
}

VmafScores vmaf_neg(const ImageBatch& ref, const ImageBatch& dist, const VmafModel& model) {
    if (!ref.data.same_shape(dist.data)) throw std::invalid_argument("vmaf: shape mismatch");
    if (ref.height() < kMinMetricSide || ref.width() < kMinMetricSide)
        throw std::invalid_argument("vmaf: input below minimum metric side");
    ad::NoGradGuard guard;
    VmafScores acc;
    for (int i = 0; i < ref.batch(); ++i) {
        YuvVars r = rgb_to_yuv_g(Var::constant(ref.data), i);
        YuvVars d = rgb_to_yuv_g(Var::constant(dist.data), i);
        acc.y += vmaf_channel_g(r.y, d.y, model).item();
        acc.u += vmaf_channel_g(r.u, d.u, model).item();
        acc.v += vmaf_channel_g(r.v, d.v, model).item();
    }
    acc.y /= ref.batch();
    acc.u /= ref.batch();
    acc.v /= ref.batch();
    acc.mean = (acc.y + acc.u + acc.v) / 3.0;
    return acc;
}

MetricId metric_id_from_name(const std::string& name) {
    if (name == "mse") return MetricId::mse;
    if (name == "ms_ssim" || name == "msssim") return MetricId::ms_ssim;
    if (name == "vmaf_neg" || name == "vmafneg") return MetricId::vmaf_neg;
    throw std::invalid_argument("unknown metric: " + name);
}

MetricValue metric_with_gradient(MetricId id, const ImageBatch& ref, const ImageBatch& dist,
                                 const VmafModel* model) {
    if (!ref.data.same_shape(dist.data))
        throw std::invalid_argument("metric_with_gradient: shape mismatch");
    Var d = Var::leaf(dist.data);
    Var value;
    switch (id) {
        case MetricId::mse:
            value = mse255_g(Var::constant(ref.data), d);
            break;
        case MetricId::ms_ssim:
            value = ms_ssim_g(Var::constant(ref.data), d);
            break;
        case MetricId::vmaf_neg: {
            if (!model) throw std::invalid_argument("vmaf_neg gradient needs a model");
            Var acc;
            for (int i = 0; i < ref.batch(); ++i) {
                Var s = vmaf_neg_mean_g(Var::constant(ref.data), d, *model, i);
                acc = acc.defined() ? acc + s : s;
            }
            value = acc * (1.0 / ref.batch());
            break;
        }
    }
    ad::backward(value);
    MetricValue out;
    out.value = value.item();
    out.gradient = d.grad();
    if (!out.gradient->all_finite()) {
        std::string stage = "fused score";
        if (id == MetricId::vmaf_neg && model) {
            // locate the first feature stage that went non-finite
            ad::NoGradGuard guard;
            YuvVars r = rgb_to_yuv_g(Var::constant(ref.data), 0);
            YuvVars dv = rgb_to_yuv_g(Var::constant(dist.data), 0);
            auto vif = vif_features_g(r.y * 255.0, dv.y * 255.0, model->vif_egl);
            for (int s = 0; s < 4; ++s)
                if (!std::isfinite(vif[s].item())) stage = "vif scale " + std::to_string(s);
            if (!std::isfinite(adm_feature_g(r.y * 255.0, dv.y * 255.0, model->adm_egl).item()))
                stage = "adm";
        }
        throw std::runtime_error("non-finite metric gradient (stage: " + stage + ")");
    }
    return out;
}

} // namespace negtune
