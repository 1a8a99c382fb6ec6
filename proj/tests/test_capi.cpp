#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <vector>

#include "negtune/negtune.h"

namespace fs = std::filesystem;

namespace {

const char* kModelPath = NEGTUNE_FIXTURES_DIR "/vmaf_model.json";

fs::path work_dir(const std::string& sub) {
    fs::path p = fs::path(NEGTUNE_WORK_DIR) / sub;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::vector<double> scene(uint64_t seed, int side) {
    std::vector<double> img(static_cast<size_t>(3) * side * side);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int c = 0; c < 3; ++c) {
        const double fx = 1.0 + 3.0 * u(rng), fy = 1.0 + 3.0 * u(rng), ph = 6.28 * u(rng);
        for (int i = 0; i < side; ++i)
            for (int j = 0; j < side; ++j)
                img[(static_cast<size_t>(c) * side + i) * side + j] =
                    0.5 + 0.3 * std::sin(fx * 6.2832 * j / side + fy * 6.2832 * i / side + ph);
    }
    return img;
}

struct Ctx {
    nt_context* ctx = nullptr;
    Ctx() { REQUIRE(nt_context_create(&ctx) == NT_OK); }
    ~Ctx() { nt_context_destroy(ctx); }
};

} // namespace

TEST_CASE("context and version") {
    Ctx c;
    CHECK(std::string(nt_version()) == "0.1.0");
    CHECK(std::string(nt_context_errmsg(c.ctx)).empty());
}

TEST_CASE("model load errors carry messages and config status") {
    Ctx c;
    nt_vmaf_model* model = nullptr;
    CHECK(nt_vmaf_model_load(c.ctx, "/nonexistent/model.json", &model) == NT_ERR_RUNTIME);
    CHECK_FALSE(std::string(nt_context_errmsg(c.ctx)).empty());
    CHECK(nt_vmaf_model_load(c.ctx, nullptr, &model) == NT_ERR_CONFIG);
}

TEST_CASE("pair scoring and gradient through the C surface") {
    Ctx c;
    nt_vmaf_model* model = nullptr;
    REQUIRE(nt_vmaf_model_load(c.ctx, kModelPath, &model) == NT_OK);

    const int side = 192;
    std::vector<double> ref = scene(1, side);
    std::vector<double> dist = ref;
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n(0.0, 0.02);
    for (auto& v : dist) v = std::min(1.0, std::max(0.0, v + n(rng)));

    nt_pair_scores scores{};
    REQUIRE(nt_score_pair(c.ctx, model, ref.data(), dist.data(), side, side, &scores) == NT_OK);
    CHECK(scores.psnr_db > 20.0);
    CHECK(scores.ms_ssim > 0.5);
    CHECK(scores.vmafneg_mean > 0.0);
    CHECK(scores.vmafneg_mean <= 100.0);
    CHECK(scores.vmafneg_mean ==
          doctest::Approx((scores.vmafneg_y + scores.vmafneg_u + scores.vmafneg_v) / 3.0));

    std::vector<double> grad(ref.size());
    double value = 0.0;
    REQUIRE(nt_metric_gradient(c.ctx, model, "mse", ref.data(), dist.data(), side, side, &value,
                               grad.data()) == NT_OK);
    CHECK(value > 0.0);
    double linf = 0.0;
    for (double g : grad) linf = std::max(linf, std::fabs(g));
    CHECK(linf > 0.0);

    CHECK(nt_metric_gradient(c.ctx, model, "unknown_metric", ref.data(), dist.data(), side, side,
                             &value, grad.data()) == NT_ERR_CONFIG);
    nt_vmaf_model_destroy(model);
}

TEST_CASE("codec round trip through the C surface") {
    Ctx c;
    nt_codec_config cfg;
    nt_codec_config_default(&cfg);
    CHECK(cfg.base_channels > 0);

    nt_codec* codec = nullptr;
    REQUIRE(nt_codec_create(c.ctx, &cfg, &codec) == NT_OK);

    long all = 0, enc = 0, dec = 0, dec0 = 0;
    CHECK(nt_codec_param_count(c.ctx, codec, "all", &all) == NT_OK);
    CHECK(nt_codec_param_count(c.ctx, codec, "encoder", &enc) == NT_OK);
    CHECK(nt_codec_param_count(c.ctx, codec, "decoder", &dec) == NT_OK);
    CHECK(nt_codec_param_count(c.ctx, codec, "dec.0", &dec0) == NT_OK);
    CHECK(all > enc + dec);
    CHECK(dec0 > 0);
    CHECK(nt_codec_param_count(c.ctx, codec, "bogus", &all) == NT_ERR_CONFIG);

    const int side = 64;
    std::vector<double> img = scene(3, side);
    std::vector<double> recon(img.size());
    double bpp = 0.0;
    REQUIRE(nt_codec_code_image(c.ctx, codec, img.data(), side, side, recon.data(), &bpp) == NT_OK);
    CHECK(bpp > 0.0);
    for (double v : recon) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }

    // save / load preserves behavior
    auto dir = work_dir("capi");
    const std::string ck = (dir / "m.ntc").string();
    REQUIRE(nt_codec_save(c.ctx, codec, "{\"t\":1}", ck.c_str()) == NT_OK);
    nt_codec* loaded = nullptr;
    REQUIRE(nt_codec_load(c.ctx, &cfg, ck.c_str(), &loaded) == NT_OK);
    std::vector<double> recon2(img.size());
    double bpp2 = 0.0;
    REQUIRE(nt_codec_code_image(c.ctx, loaded, img.data(), side, side, recon2.data(), &bpp2) ==
            NT_OK);
    CHECK(bpp2 == doctest::Approx(bpp));
    CHECK(recon2 == recon);

    nt_codec_destroy(codec);
    nt_codec_destroy(loaded);
}

TEST_CASE("rank driver through the C surface") {
    Ctx c;
    auto dir = work_dir("capi_rank");
    {
        std::ofstream a(dir / "a.csv");
        a << "label,m1\nrun_a,2.0\n";
        std::ofstream b(dir / "b.csv");
        b << "label,m1\nrun_b,1.0\n";
    }
    const std::string pa = (dir / "a.csv").string();
    const std::string pb = (dir / "b.csv").string();
    const std::string out = (dir / "rank.csv").string();
    const char* paths[] = {pa.c_str(), pb.c_str()};
    REQUIRE(nt_run_rank(c.ctx, paths, 2, "min", out.c_str()) == NT_OK);
    CHECK(fs::exists(out));

    // single row errors with config status
    const char* one[] = {pa.c_str()};
    CHECK(nt_run_rank(c.ctx, one, 1, "min", out.c_str()) == NT_ERR_CONFIG);
    CHECK(nt_run_rank(c.ctx, paths, 2, "sideways", out.c_str()) != NT_OK);
}

TEST_CASE("corpus handle") {
    Ctx c;
    auto dir = work_dir("capi_corpus");
    nt_corpus* corpus = nullptr;
    CHECK(nt_corpus_open(c.ctx, dir.string().c_str(), "test", &corpus) == NT_ERR_RUNTIME);
    CHECK(nt_corpus_open(c.ctx, dir.string().c_str(), "sideways", &corpus) == NT_ERR_CONFIG);
}
