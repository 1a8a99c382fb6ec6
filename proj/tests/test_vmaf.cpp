#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

#include "core/metrics/adm.hpp"
#include "core/metrics/vif.hpp"
#include "core/metrics/vmaf.hpp"
#include "core/report.hpp"
#include "oracle/oracle_metrics.hpp"

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
        const double txf = 15.0 + 25.0 * u(rng);
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j)
                t.at(0, c, i, j) =
                    0.5 + 0.25 * std::sin(fx * 6.2832 * j / w + fy * 6.2832 * i / h + ph) +
                    0.08 * std::sin(txf * 6.2832 * (i - j) / (h + w));
    }
    std::normal_distribution<double> n(0.0, 0.01);
    for (auto& v : t.data) v = std::clamp(v + n(rng), 0.0, 1.0);
    return ImageBatch(std::move(t));
}

Tensor luma_plane255(const ImageBatch& img) {
    YuvImage yuv = rgb_to_yuv(img);
    Tensor p = yuv.y;
    for (auto& v : p.data) v *= 255.0;
    return p;
}

std::vector<std::vector<double>> to_rows(const Tensor& p) {
    std::vector<std::vector<double>> rows(p.h, std::vector<double>(p.w));
    for (int i = 0; i < p.h; ++i)
        for (int j = 0; j < p.w; ++j) rows[i][j] = p.at(0, 0, i, j);
    return rows;
}

ImageBatch degrade(const ImageBatch& img, uint64_t seed) {
    Tensor small = avg_pool2(img.data);
    Tensor out = img.data;
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < out.h; ++i)
            for (int j = 0; j < out.w; ++j) {
                double& px = out.at(0, c, i, j);
                px = 0.6 * px + 0.4 * small.at(0, c, i / 2, j / 2);
            }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 0.008);
    for (auto& v : out.data) v = std::clamp(v + n(rng), 0.0, 1.0);
    ImageBatch r;
    r.data = std::move(out);
    return r;
}

ImageBatch sharpen(const ImageBatch& img, double amount) {
    AttackParams p;
    p.kind = AttackKind::unsharp;
    p.amount = amount;
    p.radius = 1.2;
    return apply_attack(img, p);
}

} // namespace

TEST_CASE("model loader accepts the fixture and rejects malformed files") {
    VmafModel m = VmafModel::load(kModelPath);
    CHECK(m.vif_egl == doctest::Approx(1.0));
    CHECK(m.adm_egl == doctest::Approx(1.0));
    CHECK(m.slopes.size() == 7);
    CHECK_FALSE(m.support_vectors.empty());
    CHECK(m.score_clip_lo == 0.0);
    CHECK(m.score_clip_hi == 100.0);

    // serialization round trip preserves prediction
    VmafModel m2 = VmafModel::from_json_text(m.to_json_text());
    std::array<double, kVmafFeatureCount> f = {0.9, 0.0, 0.8, 0.85, 0.9, 0.95};
    CHECK(m.predict_raw(f) == doctest::Approx(m2.predict_raw(f)).epsilon(1e-12));

    // unknown feature names are rejected
    nlohmann::json j = nlohmann::json::parse(m.to_json_text());
    j["model_dict"]["feature_names"][0] = "VMAF_feature_unknown_score";
    CHECK_THROWS_WITH_AS(VmafModel::from_json_text(j.dump()), doctest::Contains("unknown feature"),
                         std::runtime_error);

    // gain limits below 1 are invalid
    nlohmann::json j2 = nlohmann::json::parse(m.to_json_text());
    j2["model_dict"]["feature_opts_dicts"][2]["vif_enhn_gain_limit"] = 0.5;
    CHECK_THROWS(VmafModel::from_json_text(j2.dump()));
}

TEST_CASE("vif features: self-identity, oracle match, gain-limit dominance") {
    ImageBatch img = textured_image(192, 192, 21);
    Tensor plane = luma_plane255(img);

    auto self_feats = vif_features_g(Var::constant(plane), Var::constant(plane), 1.0);
    for (const auto& f : self_feats) CHECK(f.item() == doctest::Approx(1.0).epsilon(1e-6));

    ImageBatch dist = degrade(img, 22);
    Tensor dplane = luma_plane255(dist);

    ad::NoGradGuard guard;
    auto lib = vif_features_g(Var::constant(plane), Var::constant(dplane), 1.0);
    auto ref = oracle::vif_features_ref(to_rows(plane), to_rows(dplane), 1.0);
    for (int s = 0; s < 4; ++s) {
        CHECK(lib[s].item() == doctest::Approx(ref[s]).epsilon(1e-4));
        CHECK(lib[s].item() >= 0.0);
        CHECK(lib[s].item() <= 1.0 + 1e-9);
    }

    // enhancement: limited features can only be lower or equal
    ImageBatch enhanced = sharpen(degrade(img, 23), 1.0);
    Tensor eplane = luma_plane255(enhanced);
    auto neg = vif_features_g(Var::constant(plane), Var::constant(eplane), 1.0);
    auto plain = vif_features_g(Var::constant(plane), Var::constant(eplane),
                                std::numeric_limits<double>::infinity());
    bool strictly_lower_somewhere = false;
    for (int s = 0; s < 4; ++s) {
        CHECK(neg[s].item() <= plain[s].item() + 1e-12);
        if (neg[s].item() < plain[s].item() - 1e-9) strictly_lower_somewhere = true;
    }
    CHECK(strictly_lower_somewhere);
}

TEST_CASE("adm feature: self-identity, oracle match, gain-limit dominance") {
    ImageBatch img = textured_image(192, 192, 31);
    Tensor plane = luma_plane255(img);

    ad::NoGradGuard guard;
    CHECK(adm_feature_g(Var::constant(plane), Var::constant(plane), 1.0).item() ==
          doctest::Approx(1.0).epsilon(1e-6));

    ImageBatch dist = degrade(img, 32);
    Tensor dplane = luma_plane255(dist);
    const double lib = adm_feature_g(Var::constant(plane), Var::constant(dplane), 1.0).item();
    const double ref = oracle::adm_feature_ref(to_rows(plane), to_rows(dplane), 1.0);
    CHECK(lib == doctest::Approx(ref).epsilon(1e-4));
    CHECK(lib >= 0.0);

    ImageBatch enhanced = sharpen(degrade(img, 33), 1.2);
    Tensor eplane = luma_plane255(enhanced);
    const double neg = adm_feature_g(Var::constant(plane), Var::constant(eplane), 1.0).item();
    const double plain = adm_feature_g(Var::constant(plane), Var::constant(eplane),
                                       std::numeric_limits<double>::infinity())
                             .item();
    CHECK(neg <= plain + 1e-12);
}

TEST_CASE("anti-correlated content drives the fidelity features toward zero") {
    ImageBatch img = textured_image(192, 192, 71);
    Tensor plane = luma_plane255(img);
    Tensor inverted = plane;
    for (auto& v : inverted.data) v = 255.0 - v;
    ad::NoGradGuard guard;
    auto feats = vif_features_g(Var::constant(plane), Var::constant(inverted), 1.0);
    for (const auto& f : feats) {
        CHECK(f.item() >= 0.0);
        CHECK(f.item() < 0.2); // negative local gains are zeroed, not credited
    }
}

TEST_CASE("gain-limited features stay near or below one on amplified content") {
    ImageBatch img = textured_image(192, 192, 72);
    Tensor plane = luma_plane255(img);
    // amplified detail: scale around the mean by 1.7
    double mean = 0.0;
    for (double v : plane.data) mean += v;
    mean /= static_cast<double>(plane.size());
    Tensor amplified = plane;
    for (auto& v : amplified.data) v = std::clamp(mean + 1.7 * (v - mean), 0.0, 255.0);

    ad::NoGradGuard guard;
    auto feats = vif_features_g(Var::constant(plane), Var::constant(amplified), 1.0);
    for (const auto& f : feats) CHECK(f.item() <= 1.0 + 1e-6);
    const double adm = adm_feature_g(Var::constant(plane), Var::constant(amplified), 1.0).item();
    CHECK(adm <= 1.0 + 1e-6);
    // without the limit the amplified detail is credited
    const double adm_plain = adm_feature_g(Var::constant(plane), Var::constant(amplified),
                                           std::numeric_limits<double>::infinity())
                                 .item();
    CHECK(adm_plain > adm);
}

TEST_CASE("degenerate constant planes stay finite") {
    Tensor flat(1, 1, 192, 192, 128.0);
    ad::NoGradGuard guard;
    auto feats = vif_features_g(Var::constant(flat), Var::constant(flat), 1.0);
    for (const auto& f : feats) CHECK(std::isfinite(f.item()));
    CHECK(std::isfinite(adm_feature_g(Var::constant(flat), Var::constant(flat), 1.0).item()));
}

TEST_CASE("motion feature is identically zero for stills") {
    CHECK(motion_feature() == 0.0);
}

TEST_CASE("fusion clips to [0,100] and matches the raw prediction inside") {
    VmafModel m = VmafModel::load(kModelPath);
    std::array<Var, kVmafFeatureCount> feats = {Var::scalar(0.9), Var::scalar(0.0),
                                                Var::scalar(0.8), Var::scalar(0.85),
                                                Var::scalar(0.9), Var::scalar(0.95)};
    ad::NoGradGuard guard;
    const double fused = svr_fuse_g(feats, m).item();
    CHECK(fused >= 0.0);
    CHECK(fused <= 100.0);

    std::array<double, 6> raw = {0.9, 0.0, 0.8, 0.85, 0.9, 0.95};
    CHECK(fused == doctest::Approx(std::clamp(m.predict_raw(raw), 0.0, 100.0)));

    // far outside the training hull the clip engages
    std::array<Var, kVmafFeatureCount> low = {Var::scalar(-5.0), Var::scalar(0.0),
                                              Var::scalar(-5.0), Var::scalar(-5.0),
                                              Var::scalar(-5.0), Var::scalar(-5.0)};
    const double clipped = svr_fuse_g(low, m).item();
    CHECK(clipped >= 0.0);
    CHECK(clipped <= 100.0);
}

TEST_CASE("full pipeline: channel scores, mean arithmetic, asymmetry") {
    VmafModel m = VmafModel::load(kModelPath);
    ImageBatch ref = textured_image(192, 192, 41);

    VmafScores self = vmaf_neg(ref, ref, m);
    CHECK(self.y >= 90.0);
    CHECK(self.u >= 90.0);
    CHECK(self.v >= 90.0);
    CHECK(self.mean == doctest::Approx((self.y + self.u + self.v) / 3.0));

    // published-style per-channel mean arithmetic
    const double mean = (79.78 + 73.82 + 66.06) / 3.0;
    CHECK(mean == doctest::Approx(73.22).epsilon(1e-3));

    ImageBatch dist = degrade(ref, 42);
    VmafScores fwd = vmaf_neg(ref, dist, m);
    VmafScores swapped = vmaf_neg(dist, ref, m);
    CHECK(fwd.mean < self.mean);
    CHECK(fwd.mean != doctest::Approx(swapped.mean).epsilon(1e-6));

    // oracle conformance on this pair
    auto ref_scores = oracle::vmaf_neg_ref(ref, dist, m);
    CHECK(fwd.y == doctest::Approx(ref_scores.y).epsilon(2e-3));
    CHECK(fwd.u == doctest::Approx(ref_scores.u).epsilon(2e-3));
    CHECK(fwd.v == doctest::Approx(ref_scores.v).epsilon(2e-3));

    ImageBatch small = textured_image(96, 96, 43);
    CHECK_THROWS(vmaf_neg(small, small, m));
}

TEST_CASE("determinism: identical inputs give bit-identical scores") {
    VmafModel m = VmafModel::load(kModelPath);
    ImageBatch ref = textured_image(192, 192, 51);
    ImageBatch dist = degrade(ref, 52);
    VmafScores a = vmaf_neg(ref, dist, m);
    VmafScores b = vmaf_neg(ref, dist, m);
    CHECK(a.y == b.y);
    CHECK(a.u == b.u);
    CHECK(a.v == b.v);
}

TEST_CASE("vmaf gradient flows and is finite") {
    VmafModel m = VmafModel::load(kModelPath);
    ImageBatch ref = textured_image(192, 192, 61);
    ImageBatch dist = degrade(ref, 62);
    MetricValue mv = metric_with_gradient(MetricId::vmaf_neg, ref, dist, &m);
    REQUIRE(mv.gradient.has_value());
    CHECK(mv.gradient->all_finite());
    double linf = 0.0;
    for (double v : mv.gradient->data) linf = std::max(linf, std::fabs(v));
    CHECK(linf > 0.0);
}
