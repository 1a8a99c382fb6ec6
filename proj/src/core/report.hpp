#pragma once

#include <optional>
#include <string>
#include <vector>

#include "codec.hpp"
#include "corpus.hpp"
#include "metrics/vmaf.hpp"

namespace negtune {

struct MetricRow {
    std::string image_id;
    double psnr_db = 0.0, ms_ssim = 0.0;
    double vmafneg_y = 0.0, vmafneg_u = 0.0, vmafneg_v = 0.0, vmafneg_mean = 0.0;
    double bpp = 0.0;
};

struct MetricReport {
    std::vector<MetricRow> rows;
    MetricRow means; // image_id = "mean"
    std::string provenance_json;
};

MetricReport evaluate_corpus(CodecModel& model, const CorpusManifest& corpus,
                             const VmafModel& metric_model);
// Mixed deployment: latents from the encoder-side model, reconstruction from
// the decoder-side model.
MetricReport evaluate_corpus_pair(CodecModel& encoder_side, CodecModel& decoder_side,
                                  const CorpusManifest& corpus, const VmafModel& metric_model);

// column order is part of the external contract
void write_report_csv(const std::string& path, const MetricReport& report);
// single summary row, for rank-table assembly
void write_summary_csv(const std::string& path, const std::string& label,
                       const MetricReport& report);

// ---- rank accumulation ----

enum class TiePolicy { min_competition, dense, fractional };
TiePolicy tie_policy_from_name(const std::string& name);
const char* tie_policy_name(TiePolicy p);

struct RankGrid {
    std::vector<std::string> row_labels;
    std::vector<std::string> col_labels;
    std::vector<std::vector<double>> values; // rows x cols
};

struct RankTable {
    RankGrid grid;
    std::vector<std::vector<double>> ranks; // integer except under fractional ties
    std::vector<double> accumulated;        // per row
    TiePolicy policy = TiePolicy::min_competition;
};

// higher_better per column; NaN anywhere is an error.
RankTable rank_accumulate(const RankGrid& grid, const std::vector<bool>& higher_better,
                          TiePolicy policy);

RankGrid read_grid_csv(const std::vector<std::string>& paths);
void write_rank_csv(const std::string& path, const RankTable& table);

// ---- block sensitivity ----

struct BlockSensitivityRow {
    int block_index = 0;
    double psnr_db = 0.0;
    double vmafneg_y = 0.0;
    double params_m = 0.0; // unrounded
    double delta_psnr_per_mparam = 0.0;
};

std::vector<BlockSensitivityRow> block_sensitivity(
    double baseline_psnr_db, const std::vector<BlockSensitivityRow>& block_rows);

// ---- metric attack probe ----

enum class AttackKind { unsharp, checkerboard, hline };
AttackKind attack_from_name(const std::string& name);
const char* attack_name(AttackKind k);

struct AttackParams {
    AttackKind kind = AttackKind::unsharp;
    double amount = 0.0;    // unsharp strength / additive amplitude
    double radius = 1.0;    // unsharp blur sigma
    int period = 2;         // checkerboard cell size
    int spacing = 8;        // hline row spacing
};

ImageBatch apply_attack(const ImageBatch& img, const AttackParams& p);

struct ProbeRow {
    std::string image_id;
    std::string attack;
    double strength = 0.0;
    double delta_psnr = 0.0;
    double delta_vmaf_y = 0.0, delta_vmaf_u = 0.0, delta_vmaf_v = 0.0, delta_vmaf_mean = 0.0;
    bool divergence = false; // vmaf up while psnr down
};

// Deltas are against the image's own self-scores (identity pair).
std::vector<ProbeRow> attack_probe(const CorpusManifest& corpus, AttackKind kind,
                                   const std::vector<double>& strengths,
                                   const VmafModel& metric_model, const AttackParams& base);

void write_probe_csv(const std::string& path, const std::vector<ProbeRow>& rows);

} // namespace negtune
