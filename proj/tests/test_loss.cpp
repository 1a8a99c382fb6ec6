#include <doctest.h>

#include <cmath>
#include <random>

#include "core/loss.hpp"

using namespace negtune;
using ad::Var;

namespace {

const char* kModelPath = NEGTUNE_FIXTURES_DIR "/vmaf_model.json";

ImageBatch textured_image(int h, int w, uint64_t seed) {
    Tensor t(1, 3, h, w);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int c = 0; c < 3; ++c) {
        const double fx = 1.0 + 4.0 * u(rng), fy = 1.0 + 4.0 * u(rng), ph = 6.28 * u(rng);
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j)
                t.at(0, c, i, j) =
                    0.5 + 0.3 * std::sin(fx * 6.2832 * j / w + fy * 6.2832 * i / h + ph);
    }
    std::normal_distribution<double> n(0.0, 0.01);
    for (auto& v : t.data) v = std::clamp(v + n(rng), 0.0, 1.0);
    return ImageBatch(std::move(t));
}

ImageBatch perturb(const ImageBatch& img, double sigma, uint64_t seed) {
    Tensor t = img.data;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d(0.0, sigma);
    for (auto& v : t.data) v = std::clamp(v + d(rng), 0.0, 1.0);
    return ImageBatch(std::move(t));
}

} // namespace

TEST_CASE("loss weights invariants") {
    LossWeights ok{0.2, 0.4, 0.4, 0.01};
    CHECK_NOTHROW(ok.validate());
    LossWeights bad_sum{0.5, 0.4, 0.4, 0.01};
    CHECK_THROWS_WITH_AS(bad_sum.validate(), doctest::Contains("must equal 1"),
                         std::invalid_argument);
    LossWeights bad_lambda{1.0, 0.0, 0.0, -1.0};
    CHECK_THROWS(bad_lambda.validate());
    LossWeights bad_range{1.2, -0.2, 0.0, 0.01};
    CHECK_THROWS(bad_range.validate());
}

TEST_CASE("rate term anchors") {
    // 2048 symbols at p=0.5 over a 64x64 image
    Tensor p(1, 2, 32, 32, 0.5);
    RateEstimate r = rate_bpp({p}, 64 * 64);
    CHECK(r.total_bits == doctest::Approx(2048.0));
    CHECK(r.bpp == doctest::Approx(0.5));

    Tensor certain(1, 2, 32, 32, 1.0);
    CHECK(rate_bpp({certain}, 64 * 64).bpp == doctest::Approx(0.0));

    // 100 symbols at 0.25 and 100 at 0.5 over 1000 pixels
    Tensor quarter(1, 1, 10, 10, 0.25);
    Tensor half(1, 1, 10, 10, 0.5);
    RateEstimate mixed = rate_bpp({quarter, half}, 1000);
    CHECK(mixed.bpp == doctest::Approx(0.3));

    Tensor bad(1, 1, 2, 2, 0.5);
    bad.data[1] = 0.0;
    CHECK_THROWS_WITH_AS(rate_bpp({bad}, 4), doctest::Contains("invalid likelihood"),
                         std::invalid_argument);
}

TEST_CASE("rate term is differentiable") {
    Tensor p(1, 1, 4, 4, 0.5);
    Var v = Var::leaf(p);
    Var bpp = rate_bpp_g({v}, 16);
    ad::backward(bpp);
    // d(-log2 p)/dp = -1/(p ln2); per pixel normalization 1/16
    const double expect = -1.0 / (0.5 * std::log(2.0)) / 16.0;
    CHECK(v.grad().data[3] == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("mixed loss hand-computed example") {
    // distortion = 0.2*45.5 + 0.4*0.029*1600 + 0.4*26.8*1.6 = 44.812
    const double distortion = 0.2 * 45.5 + 0.4 * 0.029 * 1600.0 + 0.4 * 26.8 * 1.6;
    CHECK(distortion == doctest::Approx(44.812).epsilon(1e-9));
    const double total = 0.33 + 0.01 * distortion;
    CHECK(total == doctest::Approx(0.77812).epsilon(1e-9));
}

TEST_CASE("mixed loss reduction identities and audit") {
    VmafModel model = VmafModel::load(kModelPath);
    ImageBatch ref = textured_image(192, 192, 1);
    ImageBatch dist = perturb(ref, 0.02, 2);
    RateEstimate rate{0.33 * 192 * 192, 192 * 192, 0.33};
    ScalingFactors s{1600.0, 1.6};

    // alpha = 1: total == bpp + lambda * mse
    LossWeights wa{1.0, 0.0, 0.0, 0.01};
    LossBreakdown a = mixed_loss(ref, dist, rate, wa, s, model);
    const double mse = mse255(ref, dist).value;
    CHECK(a.total == doctest::Approx(0.33 + 0.01 * mse).epsilon(1e-12));
    CHECK(a.d_msssim == 0.0);
    CHECK(a.d_vmafneg == 0.0);

    // beta = 1
    LossWeights wb{0.0, 1.0, 0.0, 0.01};
    LossBreakdown b = mixed_loss(ref, dist, rate, wb, s, model);
    const double msssim = ms_ssim(ref, dist).value;
    CHECK(b.total == doctest::Approx(0.33 + 0.01 * (1.0 - msssim) * 1600.0).epsilon(1e-9));

    // gamma = 1
    LossWeights wg{0.0, 0.0, 1.0, 0.01};
    LossBreakdown g = mixed_loss(ref, dist, rate, wg, s, model);
    const double vmaf = vmaf_neg(ref, dist, model).mean;
    CHECK(g.total == doctest::Approx(0.33 + 0.01 * (100.0 - vmaf) * 1.6).epsilon(1e-9));

    // audit identity: components reproduce the total
    LossWeights wm{0.2, 0.4, 0.4, 0.01};
    LossBreakdown m = mixed_loss(ref, dist, rate, wm, s, model);
    CHECK(m.total ==
          doctest::Approx(m.rate + 0.01 * (m.d_mse + m.d_msssim + m.d_vmafneg)).epsilon(1e-9));
    CHECK((m.total - m.rate) / 0.01 ==
          doctest::Approx(m.d_mse + m.d_msssim + m.d_vmafneg).epsilon(1e-9));

    // identical pair, alpha=1: total is exactly the rate
    LossBreakdown id = mixed_loss(ref, ref, rate, wa, s, model);
    CHECK(id.total == doctest::Approx(rate.bpp));
}

TEST_CASE("mixed loss is affine in the weights") {
    VmafModel model = VmafModel::load(kModelPath);
    ImageBatch ref = textured_image(192, 192, 3);
    ImageBatch dist = perturb(ref, 0.02, 4);
    RateEstimate rate{0.2 * 192 * 192, 192 * 192, 0.2};
    ScalingFactors s{1500.0, 2.0};

    auto total_of = [&](double a, double b, double g) {
        return mixed_loss(ref, dist, rate, LossWeights{a, b, g, 0.01}, s, model).total;
    };
    const double t100 = total_of(1.0, 0.0, 0.0);
    const double t010 = total_of(0.0, 1.0, 0.0);
    const double t001 = total_of(0.0, 0.0, 1.0);
    // affine: total(w) = rate + sum w_i * (term_i)
    const double mix = total_of(0.5, 0.25, 0.25);
    const double predicted =
        0.5 * (t100 - rate.bpp) + 0.25 * (t010 - rate.bpp) + 0.25 * (t001 - rate.bpp) + rate.bpp;
    CHECK(mix == doctest::Approx(predicted).epsilon(1e-9));
}

TEST_CASE("gradient flows through the mixed loss") {
    VmafModel model = VmafModel::load(kModelPath);
    ImageBatch ref = textured_image(192, 192, 5);
    ImageBatch dist = perturb(ref, 0.02, 6);
    Var d = Var::leaf(dist.data);
    MixedLossGraph g = mixed_loss_g(Var::constant(ref.data), d, Var::scalar(0.3),
                                    LossWeights{0.2, 0.4, 0.4, 0.01}, ScalingFactors{1600.0, 1.6},
                                    model);
    ad::backward(g.total);
    double linf = 0.0;
    for (double v : d.grad().data) linf = std::max(linf, std::fabs(v));
    CHECK(linf > 0.0);
    CHECK(d.grad().all_finite());
}

TEST_CASE("calibration from stats and degenerate cases") {
    ScalingFactors s = calibrate_from_stats(45.5, 0.029, 26.8);
    CHECK(s.beta_prime == doctest::Approx(1569.0).epsilon(1e-3));
    CHECK(s.gamma_prime == doctest::Approx(1.698).epsilon(1e-3));

    // constant ratios
    ScalingFactors c = calibrate_from_stats(100.0, 0.1, 50.0);
    CHECK(c.beta_prime == doctest::Approx(1000.0));
    CHECK(c.gamma_prime == doctest::Approx(2.0));

    CHECK_THROWS_WITH_AS(calibrate_from_stats(0.0, 0.1, 50.0),
                         doctest::Contains("degenerate calibration"), std::runtime_error);
    CHECK_THROWS(calibrate_from_stats(100.0, 0.0, 50.0));
}

TEST_CASE("published-consistency window for the calibration") {
    // baseline stats: psnr 31.55 dB, ms-ssim 0.971, channel scores 79.78/73.82/66.06
    const double mse = 65025.0 / std::pow(10.0, 31.55 / 10.0);
    const double vmaf_mean = (79.78 + 73.82 + 66.06) / 3.0;
    ScalingFactors s = calibrate_from_stats(mse, 1.0 - 0.971, 100.0 - vmaf_mean);
    CHECK(std::fabs(s.beta_prime - 1600.0) / 1600.0 < 0.05);
    CHECK(std::fabs(s.gamma_prime - 1.6) / 1.6 < 0.10);
}
