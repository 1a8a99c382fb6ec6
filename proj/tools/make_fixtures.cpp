// Builds the repo's test fixtures:
//   corpora <dir> [train_n val_n test_n]    deterministic synthetic corpora
//   model <out.json>                        fitted fusion model (RBF ridge fit)
//   conformance <dir> <model.json>          10 scored reference/distorted pairs
//   baseline <corpora> <model.json> <out>   train the MSE baseline checkpoint
//
// Everything is seeded; rerunning reproduces the committed files.

#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>

#include <json.hpp>

#include "core/checkpoint.hpp"
#include "core/finetune.hpp"
#include "../tests/oracle/fixture_gen.hpp"

using namespace negtune;

namespace {

void make_baseline(const std::string& corpora, const std::string& model_path,
                   const std::string& out_path, int epochs, double lr) {
    VmafModel metric = VmafModel::load(model_path);
    CodecModel model((CodecConfig()));

    CorpusManifest train = load_corpus(corpora + "/train", Split::train);
    CorpusManifest val = load_corpus(corpora + "/val", Split::validation);

    TrainConfig tc;
    tc.epochs = epochs;
    tc.batch_size = 8;
    tc.seed = 11;
    tc.learning_rate = lr; // from-scratch pretraining converges far too slowly
                           // at the fine-tuning rate; fine-tunes keep 1e-4
    tc.weights = {1.0, 0.0, 0.0, 0.01};
    tc.scaling = {1.0, 1.0}; // unused under alpha=1
    tc.freeze.mode = FreezeMode::none;

    OptState opt;
    finetune(model, train, val, tc, metric, &opt, [](const EpochRecord& r) {
        std::printf("epoch %d: total %.4f bpp %.4f val psnr %.2f msssim %.4f vmaf %.2f (%.0fs)\n",
                    r.epoch, r.train_mean.total, r.train_mean.rate, r.validation.psnr_db,
                    r.validation.ms_ssim, r.validation.vmafneg_mean, r.wall_seconds);
        std::fflush(stdout);
    });

    nlohmann::json prov;
    prov["weights"] = {{"alpha", 1.0}, {"beta", 0.0}, {"gamma", 0.0}, {"lambda", 0.01}};
    prov["freeze"] = "none";
    prov["epochs_completed"] = epochs;
    prov["seed"] = tc.seed;
    prov["role"] = "mse baseline";
    Checkpoint ck = Checkpoint::from_model(model, prov.dump());
    opt.embed_into(ck);
    ck.save(out_path);
    std::printf("wrote %s\n", out_path.c_str());
}

} // namespace

int main(int argc, char** argv) {
    try {
        if (argc >= 3 && !std::strcmp(argv[1], "corpora")) {
            fixturegen::CorporaCounts counts;
            if (argc > 3) counts.train = std::atoi(argv[3]);
            if (argc > 4) counts.val = std::atoi(argv[4]);
            if (argc > 5) counts.test = std::atoi(argv[5]);
            fixturegen::make_corpora(argv[2], counts, true);
        } else if (argc >= 3 && !std::strcmp(argv[1], "model")) {
            VmafModel model = fixturegen::make_fusion_model();
            std::ofstream out(argv[2], std::ios::trunc);
            out << model.to_json_text() << "\n";
            std::printf("wrote %s (%zu support vectors)\n", argv[2], model.support_vectors.size());
        } else if (argc >= 4 && !std::strcmp(argv[1], "conformance")) {
            fixturegen::make_conformance(argv[2], VmafModel::load(argv[3]), true);
        } else if (argc >= 5 && !std::strcmp(argv[1], "baseline")) {
            make_baseline(argv[2], argv[3], argv[4], argc > 5 ? std::atoi(argv[5]) : 30,
                          argc > 6 ? std::atof(argv[6]) : 1e-3);
        } else {
            std::fprintf(stderr,
                         "usage: negtune_make_fixtures corpora <dir> [train val test]\n"
                         "       negtune_make_fixtures model <out.json>\n"
                         "       negtune_make_fixtures conformance <dir> <model.json>\n"
                         "       negtune_make_fixtures baseline <corpora> <model.json> <out.ckpt> "
                         "[epochs]\n");
            return 2;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
