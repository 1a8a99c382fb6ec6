#include "loss.hpp"

#include <cmath>
#include <stdexcept>

#include "codec.hpp"

namespace negtune {

using ad::Var;

void LossWeights::validate() const {
    if (alpha < 0.0 || alpha > 1.0 || beta < 0.0 || beta > 1.0 || gamma < 0.0 || gamma > 1.0)
        throw std::invalid_argument("loss weights must lie in [0,1]");
    if (std::fabs(alpha + beta + gamma - 1.0) > 1e-9)
        throw std::invalid_argument("alpha+beta+gamma must equal 1");
    if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
}

namespace {
constexpr double kInvLn2 = 1.4426950408889634; // 1/ln(2)
}

Var rate_bpp_g(const std::vector<Var>& likelihoods, long num_pixels) {
    if (num_pixels <= 0) throw std::invalid_argument("rate: num_pixels must be positive");
    Var bits;
    for (const auto& p : likelihoods) {
        const Tensor& t = p.value();
        if (t.min_value() <= 0.0 || t.max_value() > 1.0 + 1e-12)
            throw std::invalid_argument("invalid likelihood (must lie in (0,1])");
        Var term = neg(sum_all(log_v(p))) * kInvLn2;
        bits = bits.defined() ? bits + term : term;
    }
    if (!bits.defined()) throw std::invalid_argument("rate: no likelihood tensors");
    return bits * (1.0 / static_cast<double>(num_pixels));
}

RateEstimate rate_bpp(const std::vector<Tensor>& likelihoods, long num_pixels) {
    ad::NoGradGuard guard;
    std::vector<Var> vars;
    vars.reserve(likelihoods.size());
    for (const auto& t : likelihoods) vars.push_back(Var::constant(t));
    RateEstimate r;
    r.num_pixels = num_pixels;
    r.bpp = rate_bpp_g(vars, num_pixels).item();
    r.total_bits = r.bpp * static_cast<double>(num_pixels);
    return r;
}

LossBreakdown MixedLossGraph::values() const {
    LossBreakdown b;
    b.rate = rate.item();
    b.d_mse = d_mse.defined() ? d_mse.item() : 0.0;
    b.d_msssim = d_msssim.defined() ? d_msssim.item() : 0.0;
    b.d_vmafneg = d_vmafneg.defined() ? d_vmafneg.item() : 0.0;
    b.total = total.item();
    return b;
}

MixedLossGraph mixed_loss_g(const Var& ref, const Var& dist, const Var& bpp,
                            const LossWeights& w, const ScalingFactors& s,
                            const VmafModel& model) {
    w.validate();
    MixedLossGraph g;
    g.rate = bpp;
    Var distortion;
    auto accumulate = [&distortion](const Var& term) {
        distortion = distortion.defined() ? distortion + term : term;
    };
    if (w.alpha != 0.0) {
        g.d_mse = mse255_g(ref, dist) * w.alpha;
        accumulate(g.d_mse);
    }
    if (w.beta != 0.0) {
        g.d_msssim = (1.0 - ms_ssim_g(ref, dist)) * (w.beta * s.beta_prime);
        accumulate(g.d_msssim);
    }
    if (w.gamma != 0.0) {
        const int batch = ref.value().n;
        Var acc;
        for (int i = 0; i < batch; ++i) {
            Var v = vmaf_neg_mean_g(ref, dist, model, i);
            acc = acc.defined() ? acc + v : v;
        }
        g.d_vmafneg = (100.0 - acc * (1.0 / batch)) * (w.gamma * s.gamma_prime);
        accumulate(g.d_vmafneg);
    }
    g.total = distortion.defined() ? bpp + distortion * w.lambda : bpp;
    return g;
}

LossBreakdown mixed_loss(const ImageBatch& ref, const ImageBatch& dist, const RateEstimate& rate,
                         const LossWeights& w, const ScalingFactors& s, const VmafModel& model) {
    ad::NoGradGuard guard;
    MixedLossGraph g = mixed_loss_g(Var::constant(ref.data), Var::constant(dist.data),
                                    Var::scalar(rate.bpp), w, s, model);
    return g.values();
}

ScalingFactors calibrate_from_stats(double mean_mse255, double mean_one_minus_msssim,
                                    double mean_vmaf_deficit) {
    if (!(mean_mse255 > 0.0) || !(mean_one_minus_msssim > 0.0) || !(mean_vmaf_deficit > 0.0))
        throw std::runtime_error("degenerate calibration (a distortion term vanished on the corpus)");
    return {mean_mse255 / mean_one_minus_msssim, mean_mse255 / mean_vmaf_deficit};
}

ScalingFactors calibrate_scaling(const CorpusManifest& validation, CodecModel& codec,
                                 const VmafModel& model) {
    if (validation.size() == 0) throw std::runtime_error("calibration corpus is empty");
    double sum_mse = 0.0, sum_inv_ssim = 0.0, sum_deficit = 0.0;
    for (size_t i = 0; i < validation.size(); ++i) {
        ImageBatch img = load_entry(validation, i);
        CodedImage coded = code_image(codec, img, CodingMode::evaluation);
        sum_mse += mse255(img, coded.reconstruction).value;
        sum_inv_ssim += 1.0 - ms_ssim(img, coded.reconstruction).value;
        sum_deficit += 100.0 - vmaf_neg(img, coded.reconstruction, model).mean;
    }
    const double n = static_cast<double>(validation.size());
    return calibrate_from_stats(sum_mse / n, sum_inv_ssim / n, sum_deficit / n);
}

} // namespace negtune
