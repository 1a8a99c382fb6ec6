#include "adm.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace negtune {

using ad::Var;

namespace {

constexpr int kScales = 4;
constexpr double kCos1DegSq = 0.9996954135095479 * 0.9996954135095479; // cos(1 deg)^2
constexpr double kMaskStrength = 1.0 / 30.0;
constexpr double kCubeEps = 1e-8;  // keeps cube-root gradients bounded on empty bands
constexpr double kRatioEps = 1e-10;
constexpr double kBorderFraction = 0.1; // norms skip the outer 10% of each band

// db2 analysis taps (orthonormal)
constexpr std::array<double, 4> kDb2Lo = {0.482962913144690, 0.836516303737469,
                                          0.224143868041857, -0.129409522550921};
constexpr std::array<double, 4> kDb2Hi = {-0.129409522550921, -0.224143868041857,
                                          0.836516303737469, -0.482962913144690};

// Watson DWT threshold model: log10 Y = log10 a + k*(log10(f / (g*f0)))^2 with
// a=0.495, k=0.466, f0=0.401 c/deg, g=1 for the h/v orientations and 0.534 for
// the diagonal. Display resolution: 1080 px viewed at 3 picture heights.
double csf_weight(int scale, bool diagonal) {
    const double a = 0.495, k = 0.466, f0 = 0.401;
    const double g = diagonal ? 0.534 : 1.0;
    const double pix_per_deg = 1080.0 * 3.0 * 3.14159265358979323846 / 180.0;
    const double f = pix_per_deg / std::pow(2.0, scale + 1);
    const double t = std::log10(f / (g * f0));
    const double threshold = a * std::pow(10.0, k * t * t);
    return 1.0 / (2.0 * threshold);
}

struct DwtBands {
    Var a, h, v, d; // approximation, horizontal, vertical, diagonal detail
};

Var filt(const Var& x, const Tensor& taps) { return ad::conv2d_v(x, Var::constant(taps), Var(), 1, 0); }

DwtBands dwt2_db2(const Var& x) {
    Tensor lo_row(1, 1, 1, 4), hi_row(1, 1, 1, 4), lo_col(1, 1, 4, 1), hi_col(1, 1, 4, 1);
    for (int i = 0; i < 4; ++i) {
        lo_row.data[i] = kDb2Lo[i];
        hi_row.data[i] = kDb2Hi[i];
        lo_col.data[i] = kDb2Lo[i];
        hi_col.data[i] = kDb2Hi[i];
    }
    Var xr = ad::pad_reflect_v(x, 0, 0, 1, 2);
    Var lo = ad::decimate2_cols_v(filt(xr, lo_row));
    Var hi = ad::decimate2_cols_v(filt(xr, hi_row));

    auto col_pass = [&](const Var& b, const Tensor& taps) {
        return ad::decimate2_rows_v(filt(ad::pad_reflect_v(b, 1, 2, 0, 0), taps));
    };
    DwtBands out;
    out.a = col_pass(lo, lo_col);
    out.v = col_pass(lo, hi_col);
    out.h = col_pass(hi, lo_col);
    out.d = col_pass(hi, hi_col);
    return out;
}

Tensor zeros_like(const Var& x) {
    const Tensor& t = x.value();
    return Tensor(t.n, t.c, t.h, t.w);
}

// gain = t/o with o==0 treated as no restorable structure
Var band_gain(const Var& o, const Var& t) {
    Tensor zero_mask = o.value();
    for (auto& v : zero_mask.data) v = v == 0.0 ? 1.0 : 0.0;
    Tensor safe_div = o.value();
    for (auto& v : safe_div.data)
        if (v == 0.0) v = 1.0;
    Var k = t / where_mask(zero_mask, Var::constant(safe_div), o);
    return where_mask(zero_mask, Var::constant(zeros_like(k)), k);
}

Var l3_norm_interior(const Var& band, double cube_eps) {
    const int H = band.value().h, W = band.value().w;
    int bh = std::min(static_cast<int>(kBorderFraction * H), (H - 1) / 2);
    int bw = std::min(static_cast<int>(kBorderFraction * W), (W - 1) / 2);
    Var inner = ad::crop_v(band, bh, bw, H - 2 * bh, W - 2 * bw);
    return pow_const(sum_all(pow_const(abs_v(inner), 3.0)) + cube_eps, 1.0 / 3.0);
}

} // namespace

Var adm_feature_g(const Var& ref_plane, const Var& dist_plane, double egl) {
    if (!ref_plane.value().same_shape(dist_plane.value()))
        throw std::invalid_argument("adm: plane shape mismatch");
    if (ref_plane.value().h < 192 || ref_plane.value().w < 192)
        throw std::invalid_argument("adm: plane below minimum metric side");

    Tensor mask_kernel(1, 1, 3, 3);
    const double mk[9] = {1, 1, 1, 1, 2, 1, 1, 1, 1};
    for (int i = 0; i < 9; ++i) mask_kernel.data[i] = mk[i] * kMaskStrength;

    Var num, den;
    Var ref = ref_plane, dist = dist_plane;

    for (int scale = 0; scale < kScales; ++scale) {
        DwtBands o = dwt2_db2(ref);
        DwtBands t = dwt2_db2(dist);
        ref = o.a;
        dist = t.a;

        // angular alignment between the (h,v) detail pairs, value-level mask
        const Tensor& oh = o.h.value();
        const Tensor& ov = o.v.value();
        const Tensor& th = t.h.value();
        const Tensor& tv = t.v.value();
        Tensor angle(oh.n, oh.c, oh.h, oh.w);
        for (size_t i = 0; i < angle.data.size(); ++i) {
            const double dp = oh.data[i] * th.data[i] + ov.data[i] * tv.data[i];
            const double om = oh.data[i] * oh.data[i] + ov.data[i] * ov.data[i];
            const double tm = th.data[i] * th.data[i] + tv.data[i] * tv.data[i];
            angle.data[i] = (dp >= 0.0 && dp * dp >= kCos1DegSq * om * tm) ? 1.0 : 0.0;
        }

        auto decouple = [&](const Var& ob, const Var& tb) {
            Var k = band_gain(ob, tb);
            Var restored_plain = clamp(k, 0.0, 1.0) * ob;
            Var restored_aligned =
                std::isfinite(egl) ? clamp(k, 0.0, egl) * ob : tb;
            return where_mask(angle, restored_aligned, restored_plain);
        };
        Var rh = decouple(o.h, t.h);
        Var rv = decouple(o.v, t.v);
        Var rd = decouple(o.d, t.d);
        Var ah = t.h - rh, av = t.v - rv, ad_ = t.d - rd;

        const double ch = csf_weight(scale, false);
        const double cd = csf_weight(scale, true);

        Var mask_src = abs_v(ah * ch) + abs_v(av * ch) + abs_v(ad_ * cd);
        Var thr = filt(ad::pad_reflect_v(mask_src, 1, 1, 1, 1), mask_kernel);

        auto masked_norm = [&](const Var& r, double csf) {
            return l3_norm_interior(relu(abs_v(r * csf) - thr), kCubeEps);
        };
        Var num_scale = masked_norm(rh, ch) + masked_norm(rv, ch) + masked_norm(rd, cd);
        Var den_scale = l3_norm_interior(o.h * ch, kCubeEps) + l3_norm_interior(o.v * ch, kCubeEps) +
                        l3_norm_interior(o.d * cd, kCubeEps);

        num = num.defined() ? num + num_scale : num_scale;
        den = den.defined() ? den + den_scale : den_scale;
    }
    return (num + kRatioEps) / (den + kRatioEps);
}

} // namespace negtune
