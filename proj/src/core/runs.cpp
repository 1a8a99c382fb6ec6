#include "runs.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include <json.hpp>

#include "ratematch.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace negtune {

namespace {

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

void prepare_output(const RunConfig& cfg) {
    fs::create_directories(cfg.output_dir);
    write_file(cfg.output_dir + "/resolved.cfg", cfg.resolved_text());
}

VmafModel load_metric_model(const RunConfig& cfg) {
    if (cfg.vmaf_model_path.empty()) throw ConfigError("config: metric.vmaf_model is required");
    return VmafModel::load(cfg.vmaf_model_path);
}

// A checkpoint resumes its own experiment (same weights, freeze and seed):
// optimizer moments and the epoch counter carry over. Any other configuration
// starts a fresh fine-tune from the checkpoint's parameters.
bool same_experiment(const Checkpoint& ck, const RunConfig& cfg) {
    auto j = json::parse(ck.provenance_json, nullptr, false);
    if (j.is_discarded() || !j.contains("weights") || !j.contains("freeze")) return false;
    const auto& w = j["weights"];
    const LossWeights& cw = cfg.train.weights;
    return w.value("alpha", -1.0) == cw.alpha && w.value("beta", -1.0) == cw.beta &&
           w.value("gamma", -1.0) == cw.gamma && w.value("lambda", -1.0) == cw.lambda &&
           j["freeze"].get<std::string>() == cfg.train.freeze.to_string() &&
           j.value("seed", uint64_t(0)) == cfg.train.seed;
}

CodecModel build_model(const RunConfig& cfg, int* completed_epochs = nullptr,
                       OptState* opt = nullptr) {
    CodecModel model(cfg.codec);
    if (completed_epochs) *completed_epochs = 0;
    if (!cfg.checkpoint.empty()) {
        if (!fs::exists(cfg.checkpoint))
            throw ConfigError("config: checkpoint not found: " + cfg.checkpoint);
        Checkpoint ck = Checkpoint::load(cfg.checkpoint);
        ck.restore_into(model);
        if (same_experiment(ck, cfg)) {
            if (completed_epochs) {
                auto j = json::parse(ck.provenance_json, nullptr, false);
                if (!j.is_discarded() && j.contains("epochs_completed"))
                    *completed_epochs = j["epochs_completed"].get<int>();
            }
            if (opt) *opt = OptState::extract_from(ck);
        }
    }
    return model;
}

ScalingFactors resolve_scaling(const RunConfig& cfg, CodecModel& model, const VmafModel& metric) {
    if (!cfg.scaling_file.empty()) {
        std::ifstream in(cfg.scaling_file);
        if (!in) throw ConfigError("config: cannot open scaling file " + cfg.scaling_file);
        json j = json::parse(in);
        return {j.at("beta_prime").get<double>(), j.at("gamma_prime").get<double>()};
    }
    if (cfg.train.scaling.beta_prime > 0.0 && cfg.train.scaling.gamma_prime > 0.0)
        return cfg.train.scaling;
    // scaling factors come from the baseline codec on the validation corpus
    CorpusManifest val = load_corpus(cfg.val_root, Split::validation);
    return calibrate_scaling(val, model, metric);
}

std::string provenance_json(const RunConfig& cfg, int epochs_completed) {
    json j;
    j["weights"] = {{"alpha", cfg.train.weights.alpha},
                    {"beta", cfg.train.weights.beta},
                    {"gamma", cfg.train.weights.gamma},
                    {"lambda", cfg.train.weights.lambda}};
    j["scaling"] = {{"beta_prime", cfg.train.scaling.beta_prime},
                    {"gamma_prime", cfg.train.scaling.gamma_prime}};
    j["freeze"] = cfg.train.freeze.to_string();
    j["epochs_completed"] = epochs_completed;
    j["seed"] = cfg.train.seed;
    return j.dump();
}

void append_history(const std::string& path, const EpochRecord& rec, uint64_t seed) {
    json j;
    j["epoch"] = rec.epoch;
    j["train"] = {{"rate", rec.train_mean.rate},
                  {"d_mse", rec.train_mean.d_mse},
                  {"d_msssim", rec.train_mean.d_msssim},
                  {"d_vmafneg", rec.train_mean.d_vmafneg},
                  {"total", rec.train_mean.total}};
    j["val"] = {{"psnr_db", rec.validation.psnr_db},
                {"ms_ssim", rec.validation.ms_ssim},
                {"vmafneg_y", rec.validation.vmafneg_y},
                {"vmafneg_u", rec.validation.vmafneg_u},
                {"vmafneg_v", rec.validation.vmafneg_v},
                {"vmafneg_mean", rec.validation.vmafneg_mean},
                {"bpp", rec.validation.bpp}};
    j["wall_seconds"] = rec.wall_seconds;
    j["seed"] = seed;
    std::ofstream out(path, std::ios::app);
    out << j.dump() << "\n";
}

std::string run_label(const RunConfig& cfg) {
    return fs::path(cfg.output_dir).filename().string();
}

void emit_reports(const RunConfig& cfg, CodecModel& model, const VmafModel& metric,
                  const std::string& provenance) {
    CorpusManifest test = load_corpus(cfg.test_root, Split::test);
    MetricReport rep;
    if (!cfg.decoder_checkpoint.empty()) {
        if (!fs::exists(cfg.decoder_checkpoint))
            throw ConfigError("config: checkpoint not found: " + cfg.decoder_checkpoint);
        CodecModel dec_model(cfg.codec);
        Checkpoint dck = Checkpoint::load(cfg.decoder_checkpoint);
        dck.restore_into(dec_model);
        rep = evaluate_corpus_pair(model, dec_model, test, metric);
    } else {
        rep = evaluate_corpus(model, test, metric);
    }
    rep.provenance_json = provenance;
    write_report_csv(cfg.output_dir + "/report.csv", rep);
    write_summary_csv(cfg.output_dir + "/summary.csv", run_label(cfg), rep);
    // weights and scaling ride along with every report
    write_file(cfg.output_dir + "/report.provenance.json", rep.provenance_json + "\n");
}

} // namespace

void run_calibrate(const RunConfig& cfg) {
    cfg.validate();
    prepare_output(cfg);
    VmafModel metric = load_metric_model(cfg);
    CodecModel model = build_model(cfg);
    CorpusManifest val = load_corpus(cfg.val_root, Split::validation);
    ScalingFactors s = calibrate_scaling(val, model, metric);
    json j;
    j["beta_prime"] = s.beta_prime;
    j["gamma_prime"] = s.gamma_prime;
    j["corpus_digest"] = manifest_digest(val);
    write_file(cfg.output_dir + "/scaling.json", j.dump(2) + "\n");
}

void run_finetune(const RunConfig& cfg) {
    cfg.validate();
    VmafModel metric = load_metric_model(cfg);

    int completed = 0;
    OptState opt;
    CodecModel model = build_model(cfg, &completed, &opt);
    RunConfig resolved = cfg;
    resolved.train.scaling = resolve_scaling(cfg, model, metric);
    resolved.train.completed_epochs = completed;
    prepare_output(resolved);

    CorpusManifest train = load_corpus(resolved.train_root, Split::train);
    CorpusManifest val = load_corpus(resolved.val_root, Split::validation);
    CorpusManifest test = load_corpus(resolved.test_root, Split::test);

    const std::string history_path = resolved.output_dir + "/history.jsonl";
    const std::string ckpt_path = resolved.output_dir + "/checkpoint.ntc";

    auto train_once = [&](CodecModel& m, const TrainConfig& tc, OptState& state,
                          bool log) -> TrainHistory {
        return finetune(m, train, val, tc, metric, &state, [&](const EpochRecord& rec) {
            if (log) append_history(history_path, rec, tc.seed);
        });
    };

    if (resolved.ratematch_enabled && resolved.train.freeze.mode == FreezeMode::decoder_only) {
        // fixed encoder means identical bitstreams; nothing to match
        std::fprintf(stderr, "note: decoder-only fine-tuning skips rate matching\n");
    }

    if (resolved.ratematch_enabled && resolved.train.freeze.mode == FreezeMode::encoder_only) {
        const double target_bpp = evaluate_corpus(model, test, metric).means.bpp;
        const int probe_epochs =
            resolved.ratematch_probe_epochs > 0 ? resolved.ratematch_probe_epochs
                                                : resolved.train.epochs;
        std::map<std::string, Tensor> start;
        for (const auto& n : model.param_names()) start[n] = model.param(n).value();

        struct ProbeResult {
            std::map<std::string, Tensor> params;
            TrainHistory history;
        };
        std::map<double, ProbeResult> cache;
        auto runner = [&](double lam) {
            CodecModel probe_model(resolved.codec);
            for (const auto& [n, t] : start) probe_model.param(n).mutable_value() = t;
            TrainConfig tc = resolved.train;
            tc.weights.lambda = lam;
            tc.epochs = probe_epochs;
            OptState probe_opt = opt;
            ProbeResult pr;
            pr.history = train_once(probe_model, tc, probe_opt, false);
            for (const auto& n : probe_model.param_names())
                pr.params[n] = probe_model.param(n).value();
            const double bpp = evaluate_corpus(probe_model, test, metric).means.bpp;
            cache[lam] = std::move(pr);
            return bpp;
        };
        RateMatchResult rm = match_bitrate(runner, resolved.train.weights.lambda, target_bpp,
                                           resolved.ratematch_tolerance, resolved.ratematch_max_iter);
        write_file(resolved.output_dir + "/ratematch.json", rm.to_json() + "\n");
        resolved.train.weights.lambda = rm.lambda_star;
        write_file(resolved.output_dir + "/resolved.cfg", resolved.resolved_text());

        const ProbeResult& final_probe = cache.at(rm.lambda_star);
        for (const auto& [n, t] : final_probe.params) model.param(n).mutable_value() = t;
        for (const auto& rec : final_probe.history.epochs)
            append_history(history_path, rec, resolved.train.seed);

        const std::string prov = provenance_json(resolved, completed + probe_epochs);
        Checkpoint ck = Checkpoint::from_model(model, prov);
        ck.save(ckpt_path);
        emit_reports(resolved, model, metric, prov);
        return;
    }

    TrainHistory history = train_once(model, resolved.train, opt, true);
    const std::string prov = provenance_json(resolved, completed + resolved.train.epochs);
    Checkpoint ck = Checkpoint::from_model(model, prov);
    opt.embed_into(ck);
    ck.save(ckpt_path);
    emit_reports(resolved, model, metric, prov);
}

void run_evaluate(const RunConfig& cfg) {
    cfg.validate();
    prepare_output(cfg);
    VmafModel metric = load_metric_model(cfg);
    CodecModel model = build_model(cfg);
    std::string prov = "{}";
    if (!cfg.checkpoint.empty()) {
        Checkpoint ck = Checkpoint::load(cfg.checkpoint);
        if (!ck.provenance_json.empty()) prov = ck.provenance_json;
    }
    emit_reports(cfg, model, metric, prov);
}

void run_probe(const RunConfig& cfg) {
    cfg.validate();
    prepare_output(cfg);
    VmafModel metric = load_metric_model(cfg);
    CorpusManifest test = load_corpus(cfg.test_root, Split::test);

    std::vector<ProbeRow> all;
    for (const auto& name : cfg.probe_attacks) {
        AttackParams base;
        base.kind = attack_from_name(name);
        base.radius = cfg.probe_unsharp_radius;
        base.period = cfg.probe_checkerboard_period;
        base.spacing = cfg.probe_hline_spacing;
        auto rows = attack_probe(test, base.kind, cfg.probe_strengths, metric, base);
        all.insert(all.end(), rows.begin(), rows.end());
    }
    write_probe_csv(cfg.output_dir + "/probe.csv", all);
}

void run_rank(const std::vector<std::string>& grid_csvs, const std::string& tie_policy,
              const std::string& out_csv) {
    if (grid_csvs.empty()) throw ConfigError("rank: no input files");
    RankGrid grid = read_grid_csv(grid_csvs);
    if (grid.values.size() < 2) throw ConfigError("rank: need >=2 rows");
    std::vector<bool> higher(grid.col_labels.size(), true); // metric columns are higher-better
    RankTable table = rank_accumulate(grid, higher, tie_policy_from_name(tie_policy));
    write_rank_csv(out_csv, table);
}

} // namespace negtune
