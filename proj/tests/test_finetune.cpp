#include <doctest.h>

#include <cmath>
#include <limits>
#include <filesystem>
#include <set>
#include <random>

#include "core/finetune.hpp"
#include "core/image.hpp"
#include "core/rng.hpp"

using namespace negtune;
namespace fs = std::filesystem;

namespace {

const char* kModelPath = NEGTUNE_FIXTURES_DIR "/vmaf_model.json";

fs::path work_dir(const std::string& sub) {
    fs::path p = fs::path(NEGTUNE_WORK_DIR) / sub;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

ImageBatch scene(uint64_t seed, int side = 256) {
    Tensor t(1, 3, side, side);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int c = 0; c < 3; ++c) {
        const double fx = 1.0 + 3.0 * u(rng), fy = 1.0 + 3.0 * u(rng), ph = 6.28 * u(rng);
        for (int i = 0; i < side; ++i)
            for (int j = 0; j < side; ++j)
                t.at(0, c, i, j) =
                    0.5 + 0.3 * std::sin(fx * 6.2832 * j / side + fy * 6.2832 * i / side + ph);
    }
    std::normal_distribution<double> n(0.0, 0.01);
    for (auto& v : t.data) v = std::clamp(v + n(rng), 0.0, 1.0);
    return ImageBatch(std::move(t));
}

// tiny corpora keep these tests in seconds, not minutes
struct Corpora {
    CorpusManifest train, val;
};

Corpora mini_corpora(const fs::path& dir, int train_n = 4, int val_n = 2) {
    fs::create_directories(dir / "train");
    fs::create_directories(dir / "val");
    for (int i = 0; i < train_n; ++i)
        save_image((dir / "train" / ("t" + std::to_string(i) + ".png")).string(), scene(100 + i));
    for (int i = 0; i < val_n; ++i)
        save_image((dir / "val" / ("v" + std::to_string(i) + ".png")).string(), scene(200 + i));
    return {load_corpus((dir / "train").string(), Split::train),
            load_corpus((dir / "val").string(), Split::validation)};
}

TrainConfig quick_config(FreezeMode mode, int epochs = 1) {
    TrainConfig tc;
    tc.epochs = epochs;
    tc.batch_size = 2;
    tc.seed = 3;
    tc.weights = {1.0, 0.0, 0.0, 0.01};
    tc.scaling = {1600.0, 1.6};
    tc.freeze.mode = mode;
    return tc;
}

std::map<std::string, Tensor> snapshot(const CodecModel& m) {
    std::map<std::string, Tensor> s;
    for (const auto& n : m.param_names()) s[n] = m.param(n).value();
    return s;
}

} // namespace

TEST_CASE("frozen parameters are byte-identical after training") {
    auto dir = work_dir("freeze");
    Corpora c = mini_corpora(dir);
    VmafModel metric = VmafModel::load(kModelPath);

    struct Case {
        FreezeMode mode;
        int block;
    } cases[] = {{FreezeMode::encoder_only, 0},
                 {FreezeMode::decoder_only, 0},
                 {FreezeMode::single_decoder_block, 2}};

    for (const auto& cs : cases) {
        CodecModel model((CodecConfig()));
        auto before = snapshot(model);
        TrainConfig tc = quick_config(cs.mode);
        tc.freeze.block_index = cs.block;
        finetune(model, c.train, c.val, tc, metric);

        auto trainable = model.trainable_names();
        std::set<std::string> trainable_set(trainable.begin(), trainable.end());
        bool some_changed = false;
        for (const auto& name : model.param_names()) {
            const bool same = model.param(name).value().data == before[name].data;
            if (trainable_set.count(name)) {
                some_changed = some_changed || !same;
            } else {
                CHECK(same); // frozen: byte identical
            }
        }
        CHECK(some_changed);
    }
}

TEST_CASE("same seed reproduces identical parameters") {
    auto dir = work_dir("determinism");
    Corpora c = mini_corpora(dir);
    VmafModel metric = VmafModel::load(kModelPath);

    CodecModel a((CodecConfig())), b((CodecConfig()));
    TrainConfig tc = quick_config(FreezeMode::decoder_only);
    finetune(a, c.train, c.val, tc, metric);
    finetune(b, c.train, c.val, tc, metric);
    for (const auto& n : a.param_names())
        CHECK(a.param(n).value().data == b.param(n).value().data);
}

TEST_CASE("history audit: logged components reproduce the logged total") {
    auto dir = work_dir("audit");
    Corpora c = mini_corpora(dir);
    VmafModel metric = VmafModel::load(kModelPath);

    CodecModel model((CodecConfig()));
    TrainConfig tc = quick_config(FreezeMode::decoder_only);
    tc.weights = {0.8, 0.1, 0.1, 0.01};
    TrainHistory h = finetune(model, c.train, c.val, tc, metric);
    REQUIRE(h.epochs.size() == 1);
    for (const auto& rec : h.epochs) {
        const double recomputed =
            rec.train_mean.rate + tc.weights.lambda * (rec.train_mean.d_mse +
                                                       rec.train_mean.d_msssim +
                                                       rec.train_mean.d_vmafneg);
        CHECK(std::fabs(recomputed - rec.train_mean.total) /
                  std::max(1.0, std::fabs(rec.train_mean.total)) <
              1e-6);
        CHECK(rec.epoch == 1);
        CHECK(rec.wall_seconds > 0.0);
    }
}

TEST_CASE("resume reproduces the uninterrupted run exactly") {
    auto dir = work_dir("resume");
    Corpora c = mini_corpora(dir, 3, 1);
    VmafModel metric = VmafModel::load(kModelPath);

    // uninterrupted: 2 epochs
    CodecModel full((CodecConfig()));
    TrainConfig tc2 = quick_config(FreezeMode::decoder_only, 2);
    OptState opt_full;
    finetune(full, c.train, c.val, tc2, metric, &opt_full);

    // interrupted: 1 epoch, checkpoint, resume for 1 more
    CodecModel part((CodecConfig()));
    TrainConfig tc1 = quick_config(FreezeMode::decoder_only, 1);
    OptState opt_part;
    TrainHistory h1 = finetune(part, c.train, c.val, tc1, metric, &opt_part);

    TrainConfig tc_resume = tc1;
    tc_resume.completed_epochs = 1;
    TrainHistory h2 = finetune(part, c.train, c.val, tc_resume, metric, &opt_part);

    CHECK(h2.epochs.front().epoch == 2);
    for (const auto& n : full.param_names())
        CHECK(full.param(n).value().data == part.param(n).value().data);

    // optimizer state embedding round trip
    Checkpoint ck = Checkpoint::from_model(part, "{}");
    opt_part.embed_into(ck);
    OptState restored = OptState::extract_from(ck);
    CHECK(restored.step == opt_part.step);
    CHECK(restored.m.size() == opt_part.m.size());
}

TEST_CASE("non-finite loss aborts with the dominant component named") {
    auto dir = work_dir("diverge");
    Corpora c = mini_corpora(dir, 2, 1);
    VmafModel metric = VmafModel::load(kModelPath);

    CodecModel model((CodecConfig()));
    // poison one encoder weight so the forward pass goes non-finite
    model.param("enc.0.weight").mutable_value().data[0] = std::numeric_limits<double>::quiet_NaN();
    auto poisoned = model.param("enc.0.weight").value().data;

    TrainConfig tc = quick_config(FreezeMode::decoder_only);
    CHECK_THROWS_WITH_AS(finetune(model, c.train, c.val, tc, metric),
                         doctest::Contains("dominant component"), std::runtime_error);
    // parameters rolled back to the last epoch boundary (here: the start)
    CHECK(model.param("enc.0.weight").value().data[0] !=
          model.param("enc.0.weight").value().data[0]); // still the poisoned snapshot
    CHECK(model.param("dec.0.weight").value().data ==
          CodecModel((CodecConfig())).param("dec.0.weight").value().data);
    (void)poisoned;
}

TEST_CASE("learning rate override warns but is accepted, bad configs rejected") {
    TrainConfig tc = quick_config(FreezeMode::none);
    tc.learning_rate = 2e-4; // prints a warning
    CHECK_NOTHROW(tc.validate());
    tc.learning_rate = -1.0;
    CHECK_THROWS(tc.validate());
    tc = quick_config(FreezeMode::none);
    tc.epochs = 0;
    CHECK_THROWS(tc.validate());
    tc = quick_config(FreezeMode::none);
    tc.weights = {0.5, 0.4, 0.4, 0.01};
    CHECK_THROWS(tc.validate());
}
