#include "ms_ssim.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace negtune {

using ad::Var;

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01; // (K1 * L)^2, L = 1
constexpr double kC2 = 0.03 * 0.03;
constexpr std::array<double, 5> kScaleWeights = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

Tensor gaussian_taps_row() {
    Tensor t(1, 1, 1, kWindow);
    double sum = 0.0;
    for (int i = 0; i < kWindow; ++i) {
        double x = i - (kWindow - 1) / 2.0;
        t.data[i] = std::exp(-x * x / (2.0 * kSigma * kSigma));
        sum += t.data[i];
    }
    for (auto& v : t.data) v /= sum;
    return t;
}

// Separable valid blur on single-channel stacks (N,1,H,W).
Var blur(const Var& x, const Var& krow, const Var& kcol) {
    Var h = ad::conv2d_v(x, krow, Var(), 1, 0);
    return ad::conv2d_v(h, kcol, Var(), 1, 0);
}

} // namespace

Var ms_ssim_g(const Var& ref, const Var& dist) {
    const Tensor& rv = ref.value();
    if (!rv.same_shape(dist.value()))
        throw std::invalid_argument("ms_ssim: shape mismatch");
    if (rv.h < kMinMetricSide || rv.w < kMinMetricSide)
        throw std::invalid_argument("ms_ssim: insufficient scales (input below minimum side)");

    Tensor row = gaussian_taps_row();
    Tensor col(1, 1, kWindow, 1);
    col.data = row.data;
    Var krow = Var::constant(row), kcol = Var::constant(col);

    // treat channels as independent planes
    Var x = ad::reshape_v(ref, rv.n * rv.c, 1, rv.h, rv.w);
    Var y = ad::reshape_v(dist, rv.n * rv.c, 1, rv.h, rv.w);

    Var result;
    for (int scale = 0; scale < 5; ++scale) {
        Var mu1 = blur(x, krow, kcol);
        Var mu2 = blur(y, krow, kcol);
        Var mu1_sq = square(mu1), mu2_sq = square(mu2), mu1_mu2 = mu1 * mu2;
        Var sigma1_sq = blur(square(x), krow, kcol) - mu1_sq;
        Var sigma2_sq = blur(square(y), krow, kcol) - mu2_sq;
        Var sigma12 = blur(x * y, krow, kcol) - mu1_mu2;

        Var cs_map = (2.0 * sigma12 + kC2) / (sigma1_sq + sigma2_sq + kC2);
        if (scale < 4) {
            Var mcs = relu(mean_all(cs_map));
            Var term = pow_const(mcs, kScaleWeights[scale]);
            result = result.defined() ? result * term : term;
            x = ad::avg_pool2_v(x);
            y = ad::avg_pool2_v(y);
        } else {
            Var l_map = (2.0 * mu1_mu2 + kC1) / (mu1_sq + mu2_sq + kC1);
            Var ssim = relu(mean_all(l_map * cs_map));
            result = result * pow_const(ssim, kScaleWeights[scale]);
        }
    }
    return result;
}

MetricValue ms_ssim(const ImageBatch& ref, const ImageBatch& dist, bool with_grad) {
    MetricValue out;
    if (with_grad) {
        Var d = Var::leaf(dist.data);
        Var m = ms_ssim_g(Var::constant(ref.data), d);
        ad::backward(m);
        out.value = m.item();
        out.gradient = d.grad();
    } else {
        ad::NoGradGuard guard;
        out.value = ms_ssim_g(Var::constant(ref.data), Var::constant(dist.data)).item();
    }
    return out;
}

} // namespace negtune
