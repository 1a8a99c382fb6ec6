#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "core/corpus.hpp"
#include "core/image.hpp"
#include "core/png_io.hpp"

using namespace negtune;
namespace fs = std::filesystem;

namespace {

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

TEST_CASE("png round trip is lossless for 8-bit data") {
    auto dir = work_dir("png");
    PngImage img;
    img.width = 95;
    img.height = 63;
    img.rgb.resize(static_cast<size_t>(95) * 63 * 3);
    std::mt19937_64 rng(3);
    for (auto& b : img.rgb) b = static_cast<uint8_t>(rng());
    write_png((dir / "t.png").string(), img);
    PngImage back = read_png((dir / "t.png").string());
    CHECK(back.width == img.width);
    CHECK(back.height == img.height);
    CHECK(back.rgb == img.rgb);
}

TEST_CASE("corpus manifest is lexicographic and deterministic") {
    auto dir = work_dir("corpus");
    save_image((dir / "b.png").string(), random_image(8, 8, 1));
    save_image((dir / "a.png").string(), random_image(8, 8, 2));
    save_image((dir / "c.png").string(), random_image(8, 8, 3));

    CorpusManifest m = load_corpus(dir.string(), Split::test);
    REQUIRE(m.entries.size() == 3);
    CHECK(m.entries[0] == "a.png");
    CHECK(m.entries[1] == "b.png");
    CHECK(m.entries[2] == "c.png");

    CorpusManifest m2 = load_corpus(dir.string(), Split::test);
    CHECK(m.entries == m2.entries);
    CHECK(manifest_digest(m) == manifest_digest(m2));

    // json round trip
    CorpusManifest m3 = manifest_from_json(manifest_to_json(m));
    CHECK(m3.entries == m.entries);
    CHECK(m3.root_path == m.root_path);
}

TEST_CASE("empty corpus and undecodable entries") {
    auto dir = work_dir("corpus_bad");
    CHECK_THROWS_WITH_AS(load_corpus(dir.string(), Split::train), doctest::Contains("empty corpus"),
                         std::runtime_error);
    CHECK_THROWS(load_corpus((dir / "missing").string(), Split::train));

    // one good file, one corrupt: corrupt is skipped with a warning
    save_image((dir / "ok.png").string(), random_image(8, 8, 4));
    std::ofstream bad(dir / "bad.png", std::ios::binary);
    bad << "not a png";
    bad.close();
    CorpusManifest m = load_corpus(dir.string(), Split::train);
    REQUIRE(m.entries.size() == 1);
    CHECK(m.entries[0] == "ok.png");
}

TEST_CASE("random crop determinism and bounds") {
    ImageBatch img = random_image(300, 400, 7);
    ImageBatch c1 = random_crop(img, 256, 42);
    ImageBatch c2 = random_crop(img, 256, 42);
    CHECK(c1.data.data == c2.data.data);
    CHECK(c1.height() == 256);
    CHECK(c1.width() == 256);

    // identity case: only one valid offset
    ImageBatch exact = random_image(256, 256, 8);
    ImageBatch c3 = random_crop(exact, 256, 1);
    CHECK(c3.data.data == exact.data.data);

    CHECK_THROWS_WITH_AS(random_crop(random_image(100, 100, 9), 256, 0),
                         doctest::Contains("too small"), std::invalid_argument);

    // offsets stay within the valid range and vary with the seed
    bool seen_nonzero = false;
    for (uint64_t s = 0; s < 32; ++s) {
        ImageBatch c = random_crop(img, 256, s);
        // crop contents must be a contiguous window of the source
        double first = c.data.at(0, 0, 0, 0);
        bool found = false;
        for (int top = 0; top <= 44 && !found; ++top)
            for (int left = 0; left <= 144 && !found; ++left)
                if (img.data.at(0, 0, top, left) == first) {
                    bool all = true;
                    for (int i = 0; i < 16 && all; ++i)
                        for (int j = 0; j < 16 && all; ++j)
                            all = img.data.at(0, 0, top + i, left + j) == c.data.at(0, 0, i, j);
                    if (all) {
                        found = true;
                        if (top != 0 || left != 0) seen_nonzero = true;
                    }
                }
        CHECK(found);
    }
    CHECK(seen_nonzero);
}

TEST_CASE("yuv conversion anchors and round trip") {
    Tensor t(1, 3, 1, 3);
    // white, black, pure red
    t.at(0, 0, 0, 0) = 1.0; t.at(0, 1, 0, 0) = 1.0; t.at(0, 2, 0, 0) = 1.0;
    t.at(0, 0, 0, 1) = 0.0; t.at(0, 1, 0, 1) = 0.0; t.at(0, 2, 0, 1) = 0.0;
    t.at(0, 0, 0, 2) = 1.0; t.at(0, 1, 0, 2) = 0.0; t.at(0, 2, 0, 2) = 0.0;
    YuvImage yuv = rgb_to_yuv(ImageBatch(std::move(t)));

    CHECK(yuv.y.data[0] == doctest::Approx(1.0));
    CHECK(yuv.u.data[0] == doctest::Approx(0.5));
    CHECK(yuv.v.data[0] == doctest::Approx(0.5));
    CHECK(yuv.y.data[1] == doctest::Approx(0.0));
    CHECK(yuv.u.data[1] == doctest::Approx(0.5));
    CHECK(yuv.v.data[1] == doctest::Approx(0.5));
    CHECK(yuv.y.data[2] == doctest::Approx(0.299));
    CHECK(yuv.u.data[2] == doctest::Approx(0.3313).epsilon(1e-3));
    CHECK(yuv.v.data[2] == doctest::Approx(1.0));

    // round trip on random in-gamut data
    ImageBatch img = random_image(16, 16, 10);
    ImageBatch back = yuv_to_rgb(rgb_to_yuv(img));
    for (size_t i = 0; i < img.data.size(); ++i)
        CHECK(back.data.data[i] == doctest::Approx(img.data.data[i]).epsilon(1e-6));
}

TEST_CASE("image batch invariants") {
    Tensor bad(1, 3, 2, 2, 0.5);
    bad.data[0] = 1.5;
    CHECK_THROWS_AS(ImageBatch{std::move(bad)}, std::invalid_argument);
    Tensor two_ch(1, 2, 2, 2, 0.5);
    CHECK_THROWS_AS(ImageBatch{std::move(two_ch)}, std::invalid_argument);
}
