// negtune command-line front end. All heavy lifting happens behind the C API;
// this binary only parses flags, forwards config overrides and maps status
// codes to exit codes (0 ok, 1 runtime failure, 2 configuration error).

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "negtune/negtune.h"

namespace {

struct Session {
    nt_context* ctx = nullptr;
    nt_overrides* ov = nullptr;

    Session() {
        nt_context_create(&ctx);
        nt_overrides_create(&ov);
    }
    ~Session() {
        nt_overrides_destroy(ov);
        nt_context_destroy(ctx);
    }

    int finish(nt_status rc, const char* what) {
        if (rc != NT_OK)
            std::fprintf(stderr, "negtune %s: error: %s\n", what, nt_context_errmsg(ctx));
        return static_cast<int>(rc);
    }

    void apply_sets(const std::vector<std::string>& sets) {
        for (const auto& s : sets) {
            auto eq = s.find('=');
            if (eq == std::string::npos)
                throw CLI::ValidationError("--set", "expected section.key=value, got '" + s + "'");
            nt_overrides_add(ctx, ov, s.substr(0, eq).c_str(), s.substr(eq + 1).c_str());
        }
    }
};

void add_common(CLI::App* cmd, std::string& config_path, std::vector<std::string>& sets,
                std::string& output_dir) {
    cmd->add_option("-c,--config", config_path, "run configuration file")->required();
    cmd->add_option("--set", sets, "override a config key (section.key=value), repeatable");
    cmd->add_option("-o,--output", output_dir, "output directory (overrides output.dir)");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"fine-tuning and metric-attack analysis for learned image codecs"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(nt_version()));

    std::string config_path, output_dir;
    std::vector<std::string> sets;

    auto* calibrate = app.add_subcommand("calibrate", "derive the loss scaling factors");
    add_common(calibrate, config_path, sets, output_dir);

    auto* finetune = app.add_subcommand("finetune", "run a fine-tuning experiment");
    add_common(finetune, config_path, sets, output_dir);
    std::vector<double> weights;
    std::string freeze;
    bool match_rate = false;
    finetune->add_option("--weights", weights, "alpha beta gamma")->expected(3);
    finetune->add_option("--freeze", freeze,
                         "none | encoder_only | decoder_only | single_decoder_block:<k>");
    finetune->add_flag("--match-rate", match_rate, "match the baseline bitrate by tuning lambda");

    auto* evaluate = app.add_subcommand("evaluate", "score a checkpoint on the test corpus");
    add_common(evaluate, config_path, sets, output_dir);
    std::string checkpoint, decoder_checkpoint;
    evaluate->add_option("--checkpoint", checkpoint, "checkpoint to evaluate");
    evaluate->add_option("--decoder-checkpoint", decoder_checkpoint,
                         "take decoder blocks from this checkpoint instead");

    auto* rank = app.add_subcommand("rank", "rank experiment grids and accumulate per row");
    std::vector<std::string> grids;
    std::string tie_policy = "min", rank_out = "rank.csv";
    rank->add_option("grids", grids, "grid CSV files (label + metric columns)")->required();
    rank->add_option("--tie-policy", tie_policy, "min | dense | fractional")
        ->check(CLI::IsMember({"min", "dense", "fractional"}));
    rank->add_option("-o,--output", rank_out, "output CSV");

    auto* probe = app.add_subcommand("probe-attack", "run metric attack sweeps");
    add_common(probe, config_path, sets, output_dir);

    CLI11_PARSE(app, argc, argv);

    Session s;
    try {
        s.apply_sets(sets);
    } catch (const CLI::Error& e) {
        return app.exit(e);
    }
    if (!output_dir.empty()) nt_overrides_add(s.ctx, s.ov, "output.dir", output_dir.c_str());

    if (calibrate->parsed())
        return s.finish(nt_run_calibrate_ov(s.ctx, config_path.c_str(), s.ov), "calibrate");

    if (finetune->parsed()) {
        if (!weights.empty()) {
            nt_overrides_add(s.ctx, s.ov, "loss.alpha", std::to_string(weights[0]).c_str());
            nt_overrides_add(s.ctx, s.ov, "loss.beta", std::to_string(weights[1]).c_str());
            nt_overrides_add(s.ctx, s.ov, "loss.gamma", std::to_string(weights[2]).c_str());
        }
        if (!freeze.empty()) nt_overrides_add(s.ctx, s.ov, "freeze.mode", freeze.c_str());
        if (match_rate) nt_overrides_add(s.ctx, s.ov, "ratematch.enabled", "true");
        return s.finish(nt_run_finetune_ov(s.ctx, config_path.c_str(), s.ov), "finetune");
    }

    if (evaluate->parsed()) {
        if (!checkpoint.empty())
            nt_overrides_add(s.ctx, s.ov, "codec.checkpoint", checkpoint.c_str());
        if (!decoder_checkpoint.empty())
            nt_overrides_add(s.ctx, s.ov, "codec.decoder_checkpoint", decoder_checkpoint.c_str());
        return s.finish(nt_run_evaluate_ov(s.ctx, config_path.c_str(), s.ov), "evaluate");
    }

    if (rank->parsed()) {
        std::vector<const char*> paths;
        paths.reserve(grids.size());
        for (const auto& g : grids) paths.push_back(g.c_str());
        return s.finish(nt_run_rank(s.ctx, paths.data(), static_cast<int>(paths.size()),
                                    tie_policy.c_str(), rank_out.c_str()),
                        "rank");
    }

    if (probe->parsed())
        return s.finish(nt_run_probe_ov(s.ctx, config_path.c_str(), s.ov), "probe-attack");

    return 2;
}
