#include "vif.hpp"

#include <cmath>
#include <stdexcept>

namespace negtune {

using ad::Var;

namespace {

constexpr double kSigmaNsq = 2.0;
constexpr double kEps = 1e-10;
constexpr int kScaleWindow[4] = {17, 9, 5, 3};

void make_window(int taps, Tensor& row, Tensor& col) {
    row = Tensor(1, 1, 1, taps);
    const double sigma = taps / 5.0;
    double sum = 0.0;
    for (int i = 0; i < taps; ++i) {
        double x = i - (taps - 1) / 2.0;
        row.data[i] = std::exp(-x * x / (2.0 * sigma * sigma));
        sum += row.data[i];
    }
    for (auto& v : row.data) v /= sum;
    col = Tensor(1, 1, taps, 1);
    col.data = row.data;
}

Var blur(const Var& x, const Var& krow, const Var& kcol) {
    return ad::conv2d_v(ad::conv2d_v(x, krow, Var(), 1, 0), kcol, Var(), 1, 0);
}

Tensor less_than_mask(const Tensor& x, double thr) {
    Tensor m = x;
    for (auto& v : m.data) v = v < thr ? 1.0 : 0.0;
    return m;
}

} // namespace

std::array<Var, 4> vif_features_g(const Var& ref_plane, const Var& dist_plane, double egl) {
    if (!ref_plane.value().same_shape(dist_plane.value()))
        throw std::invalid_argument("vif: plane shape mismatch");
    if (ref_plane.value().h < 192 || ref_plane.value().w < 192)
        throw std::invalid_argument("vif: plane below minimum metric side");

    std::array<Var, 4> features;
    Var ref = ref_plane, dist = dist_plane;

    for (int scale = 0; scale < 4; ++scale) {
        Tensor row_t, col_t;
        make_window(kScaleWindow[scale], row_t, col_t);
        Var krow = Var::constant(row_t), kcol = Var::constant(col_t);

        if (scale > 0) {
            ref = ad::decimate2_v(blur(ref, krow, kcol));
            dist = ad::decimate2_v(blur(dist, krow, kcol));
        }
        if (ref.value().h < kScaleWindow[scale] || ref.value().w < kScaleWindow[scale])
            throw std::invalid_argument("vif: plane too small for scale pyramid");

        Var mu1 = blur(ref, krow, kcol);
        Var mu2 = blur(dist, krow, kcol);
        Var sigma1_sq = relu(blur(square(ref), krow, kcol) - square(mu1));
        Var sigma2_sq = relu(blur(square(dist), krow, kcol) - square(mu2));
        Var sigma12 = blur(ref * dist, krow, kcol) - mu1 * mu2;

        Var g = sigma12 / (sigma1_sq + kEps);
        Var sv_sq = sigma2_sq - g * sigma12;

        Var zero = Var::constant(Tensor(g.value().n, g.value().c, g.value().h, g.value().w));
        // reference has no local signal: nothing to restore
        Tensor m1 = less_than_mask(sigma1_sq.value(), kEps);
        g = where_mask(m1, zero, g);
        sv_sq = where_mask(m1, sigma2_sq, sv_sq);
        sigma1_sq = where_mask(m1, zero, sigma1_sq);
        // distorted has no local signal
        Tensor m2 = less_than_mask(sigma2_sq.value(), kEps);
        g = where_mask(m2, zero, g);
        sv_sq = where_mask(m2, zero, sv_sq);
        // anti-correlated: treat the whole distortion as noise
        Tensor m3 = less_than_mask(g.value(), 0.0);
        sv_sq = where_mask(m3, sigma2_sq, sv_sq);
        g = where_mask(m3, zero, g);
        sv_sq = clamp_min(sv_sq, kEps);

        if (std::isfinite(egl)) g = clamp_max(g, egl);

        Var num = sum_all(log_v(1.0 + square(g) * sigma1_sq / (sv_sq + kSigmaNsq)));
        Var den = sum_all(log_v(1.0 + sigma1_sq / kSigmaNsq));
        // stabilized against constant planes (num = den = 0)
        features[scale] = (num + kEps) / (den + kEps);
    }
    return features;
}

} // namespace negtune
