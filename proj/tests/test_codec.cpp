#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "core/checkpoint.hpp"
#include "core/codec.hpp"
#include "core/rng.hpp"

using namespace negtune;
using ad::Var;

namespace {

namespace fs = std::filesystem;

fs::path work_dir(const std::string& sub) {
    fs::path p = fs::path(NEGTUNE_WORK_DIR) / sub;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

ImageBatch random_image(int h, int w, uint64_t seed) {
    Tensor t(1, 3, h, w);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d(0.0, 1.0);
    for (auto& v : t.data) v = d(rng);
    return ImageBatch(std::move(t));
}

} // namespace

TEST_CASE("deterministic initialization from the seed") {
    CodecConfig cfg;
    CodecModel a(cfg), b(cfg);
    for (const auto& name : a.param_names())
        CHECK(a.param(name).value().data == b.param(name).value().data);

    CodecConfig other = cfg;
    other.seed = cfg.seed + 1;
    CodecModel c(other);
    bool any_diff = false;
    for (const auto& name : a.param_names())
        if (a.param(name).value().data != c.param(name).value().data) any_diff = true;
    CHECK(any_diff);
    // seed does not change the architecture hash
    CHECK(a.config_hash() == c.config_hash());
}

TEST_CASE("decoder exposes four indexable blocks") {
    CodecModel m((CodecConfig()));
    CHECK(m.decoder_block_count() == 4);
    long sum = 0;
    for (int b = 0; b < 4; ++b) sum += m.count_params_block(b);
    long dec_total = 0;
    for (const auto& n : m.param_names())
        if (n.rfind("dec.", 0) == 0) dec_total += static_cast<long>(m.param(n).value().size());
    CHECK(sum == dec_total);
    CHECK_THROWS(m.count_params_block(4));
}

TEST_CASE("parameter counts match layer-shape arithmetic") {
    CodecConfig cfg;
    cfg.base_channels = 16;
    cfg.latent_channels = 24;
    cfg.hyper_channels = 12;
    cfg.kernel = 5;
    CodecModel m(cfg);

    // one 5x5 conv block, 16->16 with bias
    const long b1 = (5L * 5 * 16 + 1) * 16;
    CHECK(m.count_params({"enc.1.weight", "enc.1.bias"}) == b1);

    // full analytic total
    auto conv = [](long in, long out, long k) { return (k * k * in + 1) * out; };
    long expect = conv(3, 16, 5) + conv(16, 16, 5) * 2 + conv(16, 24, 5)    // encoder
                  + conv(24, 12, 3) + conv(12, 12, 5) * 2                    // hyper encoder
                  + conv(12, 12, 5) * 2 + conv(12, 48, 3)                    // hyper decoder
                  + conv(24, 16, 5) + conv(16, 16, 5) * 2 + conv(16, 3, 5)   // decoder
                  + 12 + 12;                                                 // factorized prior
    CHECK(m.count_params() == expect);

    // a 3x3 conv block example: (3*3*64+1)*64
    CHECK((3L * 3 * 64 + 1) * 64 == 36928);
}

TEST_CASE("coded output is in range with expected latent geometry") {
    CodecModel m((CodecConfig()));
    ImageBatch img = random_image(256, 256, 5);
    auto rng = make_rng(1, 0, RngPurpose::noise);
    CodedGraph g = m.forward(Var::constant(img.data), CodingMode::training, &rng);
    CHECK(g.reconstruction.value().h == 256);
    CHECK(g.reconstruction.value().w == 256);
    CHECK(g.reconstruction.value().min_value() >= 0.0);
    CHECK(g.reconstruction.value().max_value() <= 1.0);
    CHECK(g.latent.value().h == 16);
    CHECK(g.latent.value().w == 16);
    CHECK(g.bpp.item() > 0.0);

    Tensor odd(1, 3, 100, 100, 0.5);
    CHECK_THROWS(m.forward(Var::constant(odd), CodingMode::evaluation));
}

TEST_CASE("code_image pads arbitrary sizes and reports original pixel count") {
    CodecModel m((CodecConfig()));
    ImageBatch img = random_image(200, 300, 6);
    CodedImage out = code_image(m, img, CodingMode::evaluation);
    CHECK(out.reconstruction.height() == 200);
    CHECK(out.reconstruction.width() == 300);
    CHECK(out.rate.num_pixels == 200 * 300);
    CHECK(out.rate.bpp > 0.0);

    // determinism of the evaluation path
    CodedImage again = code_image(m, img, CodingMode::evaluation);
    CHECK(out.rate.bpp == again.rate.bpp);
    CHECK(out.reconstruction.data.data == again.reconstruction.data.data);
}

TEST_CASE("freeze specs mark exactly the right parameters") {
    CodecModel m((CodecConfig()));

    auto names = m.apply_freeze(FreezeSpec{FreezeMode::decoder_only, 0});
    for (const auto& n : names) CHECK(n.rfind("dec.", 0) == 0);
    CHECK(names.size() == 8); // 4 blocks x (weight, bias)

    names = m.apply_freeze(FreezeSpec{FreezeMode::encoder_only, 0});
    bool has_enc = false, has_hyper_enc = false;
    for (const auto& n : names) {
        CHECK((n.rfind("enc.", 0) == 0 || n.rfind("hyper_enc.", 0) == 0));
        has_enc = has_enc || n.rfind("enc.", 0) == 0;
        has_hyper_enc = has_hyper_enc || n.rfind("hyper_enc.", 0) == 0;
    }
    CHECK(has_enc);
    CHECK(has_hyper_enc);

    names = m.apply_freeze(FreezeSpec{FreezeMode::single_decoder_block, 2});
    REQUIRE(names.size() == 2);
    CHECK(names[0] == "dec.2.weight");
    CHECK(names[1] == "dec.2.bias");

    CHECK_THROWS(m.apply_freeze(FreezeSpec{FreezeMode::single_decoder_block, 9}));

    names = m.apply_freeze(FreezeSpec{FreezeMode::none, 0});
    CHECK(names.size() == m.param_names().size());
}

TEST_CASE("checkpoint round trip is byte stable and hash checked") {
    auto dir = work_dir("ckpt");
    CodecModel m((CodecConfig()));
    Checkpoint ck = Checkpoint::from_model(m, R"({"note":"t"})");
    const std::string p1 = (dir / "a.ntc").string();
    const std::string p2 = (dir / "b.ntc").string();
    ck.save(p1);
    Checkpoint loaded = Checkpoint::load(p1);
    loaded.save(p2);

    std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
    std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(s1 == s2);

    // restores values
    CodecConfig cfg2;
    cfg2.seed = 99;
    CodecModel other(cfg2);
    loaded.restore_into(other);
    for (const auto& name : m.param_names())
        CHECK(other.param(name).value().data == m.param(name).value().data);

    // architecture mismatch refused
    CodecConfig narrow;
    narrow.base_channels = 8;
    CodecModel incompatible(narrow);
    CHECK_THROWS_WITH_AS(loaded.restore_into(incompatible), doctest::Contains("hash mismatch"),
                         std::runtime_error);
}

TEST_CASE("freeze spec parse round trip") {
    CHECK(FreezeSpec::parse("none").mode == FreezeMode::none);
    CHECK(FreezeSpec::parse("encoder_only").mode == FreezeMode::encoder_only);
    CHECK(FreezeSpec::parse("decoder_only").mode == FreezeMode::decoder_only);
    FreezeSpec s = FreezeSpec::parse("single_decoder_block:3");
    CHECK(s.mode == FreezeMode::single_decoder_block);
    CHECK(s.block_index == 3);
    CHECK(FreezeSpec::parse(s.to_string()).block_index == 3);
    CHECK_THROWS(FreezeSpec::parse("sideways"));
}
