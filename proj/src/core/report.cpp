#include "report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "metrics/mse_psnr.hpp"
#include "metrics/ms_ssim.hpp"

namespace negtune {

namespace {

MetricRow score_pair(const std::string& id, const ImageBatch& ref, const ImageBatch& dist,
                     double bpp, const VmafModel& metric_model) {
    MetricRow r;
    r.image_id = id;
    r.psnr_db = psnr_db(ref, dist);
    r.ms_ssim = ms_ssim(ref, dist).value;
    VmafScores s = vmaf_neg(ref, dist, metric_model);
    r.vmafneg_y = s.y;
    r.vmafneg_u = s.u;
    r.vmafneg_v = s.v;
    r.vmafneg_mean = s.mean;
    r.bpp = bpp;
    return r;
}

MetricRow mean_row(const std::vector<MetricRow>& rows) {
    MetricRow m;
    m.image_id = "mean";
    for (const auto& r : rows) {
        m.psnr_db += r.psnr_db;
        m.ms_ssim += r.ms_ssim;
        m.vmafneg_y += r.vmafneg_y;
        m.vmafneg_u += r.vmafneg_u;
        m.vmafneg_v += r.vmafneg_v;
        m.vmafneg_mean += r.vmafneg_mean;
        m.bpp += r.bpp;
    }
    const double n = static_cast<double>(rows.size());
    m.psnr_db /= n;
    m.ms_ssim /= n;
    m.vmafneg_y /= n;
    m.vmafneg_u /= n;
    m.vmafneg_v /= n;
    m.vmafneg_mean /= n;
    m.bpp /= n;
    return m;
}

void check_finite(const MetricRow& r) {
    for (double v : {r.psnr_db, r.ms_ssim, r.vmafneg_y, r.vmafneg_u, r.vmafneg_v, r.vmafneg_mean, r.bpp})
        if (!std::isfinite(v)) throw std::runtime_error("report: non-finite metric for " + r.image_id);
}

} // namespace

MetricReport evaluate_corpus(CodecModel& model, const CorpusManifest& corpus,
                             const VmafModel& metric_model) {
    return evaluate_corpus_pair(model, model, corpus, metric_model);
}

MetricReport evaluate_corpus_pair(CodecModel& encoder_side, CodecModel& decoder_side,
                                  const CorpusManifest& corpus, const VmafModel& metric_model) {
    MetricReport rep;
    const bool same = &encoder_side == &decoder_side;
    for (size_t i = 0; i < corpus.size(); ++i) {
        ImageBatch img = load_entry(corpus, i);
        CodedImage coded;
        if (same) {
            coded = code_image(encoder_side, img, CodingMode::evaluation);
        } else {
            // latents (and thus the rate) come from the encoder-side model
            coded = code_image_pair(encoder_side, decoder_side, img);
        }
        MetricRow row = score_pair(corpus.entries[i], img, coded.reconstruction, coded.rate.bpp,
                                   metric_model);
        check_finite(row);
        rep.rows.push_back(row);
    }
    rep.means = mean_row(rep.rows);
    return rep;
}

namespace {
void write_row(std::ostream& out, const MetricRow& r) {
    out << r.image_id << ',' << r.psnr_db << ',' << r.ms_ssim << ',' << r.vmafneg_y << ','
        << r.vmafneg_u << ',' << r.vmafneg_v << ',' << r.vmafneg_mean << ',' << r.bpp << '\n';
}
} // namespace

void write_report_csv(const std::string& path, const MetricReport& report) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("report: cannot write " + path);
    out.precision(10);
    out << "image_id,psnr_db,ms_ssim,vmafneg_y,vmafneg_u,vmafneg_v,vmafneg_mean,bpp\n";
    for (const auto& r : report.rows) write_row(out, r);
    write_row(out, report.means);
}

void write_summary_csv(const std::string& path, const std::string& label,
                       const MetricReport& report) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("report: cannot write " + path);
    out.precision(10);
    out << "label,psnr_db,ms_ssim,vmafneg_y,vmafneg_u,vmafneg_v,vmafneg_mean,bpp\n";
    const MetricRow& m = report.means;
    out << label << ',' << m.psnr_db << ',' << m.ms_ssim << ',' << m.vmafneg_y << ','
        << m.vmafneg_u << ',' << m.vmafneg_v << ',' << m.vmafneg_mean << ',' << m.bpp << '\n';
}

// ---- rank accumulation ----

TiePolicy tie_policy_from_name(const std::string& name) {
    if (name == "min") return TiePolicy::min_competition;
    if (name == "dense") return TiePolicy::dense;
    if (name == "fractional") return TiePolicy::fractional;
    throw std::invalid_argument("unknown tie policy: " + name);
}

const char* tie_policy_name(TiePolicy p) {
    switch (p) {
        case TiePolicy::min_competition: return "min";
        case TiePolicy::dense: return "dense";
        case TiePolicy::fractional: return "fractional";
    }
    return "?";
}

RankTable rank_accumulate(const RankGrid& grid, const std::vector<bool>& higher_better,
                          TiePolicy policy) {
    const size_t rows = grid.values.size();
    if (rows < 2) throw std::invalid_argument("rank: need >=2 rows");
    const size_t cols = grid.values[0].size();
    if (higher_better.size() != cols) throw std::invalid_argument("rank: direction flags mismatch");
    for (const auto& r : grid.values) {
        if (r.size() != cols) throw std::invalid_argument("rank: ragged grid");
        for (double v : r)
            if (std::isnan(v)) throw std::invalid_argument("rank: NaN in grid");
    }

    RankTable table;
    table.grid = grid;
    table.policy = policy;
    table.ranks.assign(rows, std::vector<double>(cols, 0.0));
    table.accumulated.assign(rows, 0.0);

    for (size_t c = 0; c < cols; ++c) {
        std::vector<size_t> idx(rows);
        std::iota(idx.begin(), idx.end(), 0);
        const bool hb = higher_better[c];
        std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
            return hb ? grid.values[a][c] > grid.values[b][c]
                      : grid.values[a][c] < grid.values[b][c];
        });
        size_t pos = 0;
        double dense_rank = 0.0;
        while (pos < rows) {
            size_t tie_end = pos;
            while (tie_end + 1 < rows &&
                   grid.values[idx[tie_end + 1]][c] == grid.values[idx[pos]][c])
                ++tie_end;
            dense_rank += 1.0;
            double rank_value = 0.0;
            switch (policy) {
                case TiePolicy::min_competition: rank_value = static_cast<double>(pos + 1); break;
                case TiePolicy::dense: rank_value = dense_rank; break;
                case TiePolicy::fractional:
                    rank_value = (static_cast<double>(pos + 1) + static_cast<double>(tie_end + 1)) / 2.0;
                    break;
            }
            for (size_t k = pos; k <= tie_end; ++k) table.ranks[idx[k]][c] = rank_value;
            pos = tie_end + 1;
        }
    }
    for (size_t r = 0; r < rows; ++r)
        table.accumulated[r] = std::accumulate(table.ranks[r].begin(), table.ranks[r].end(), 0.0);
    return table;
}

RankGrid read_grid_csv(const std::vector<std::string>& paths) {
    RankGrid grid;
    bool have_header = false;
    for (const auto& path : paths) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("rank: cannot open " + path);
        std::string line;
        bool first = true;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::vector<std::string> cells;
            std::stringstream ls(line);
            std::string cell;
            while (std::getline(ls, cell, ',')) cells.push_back(cell);
            if (first) {
                first = false;
                std::vector<std::string> cols(cells.begin() + 1, cells.end());
                if (!have_header) {
                    grid.col_labels = cols;
                    have_header = true;
                } else if (cols != grid.col_labels) {
                    throw std::runtime_error("rank: column mismatch in " + path);
                }
                continue;
            }
            if (cells.size() != grid.col_labels.size() + 1)
                throw std::runtime_error("rank: ragged row in " + path);
            grid.row_labels.push_back(cells[0]);
            std::vector<double> vals;
            for (size_t i = 1; i < cells.size(); ++i) vals.push_back(std::stod(cells[i]));
            grid.values.push_back(std::move(vals));
        }
    }
    return grid;
}

void write_rank_csv(const std::string& path, const RankTable& table) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("rank: cannot write " + path);
    out.precision(10);
    out << "label";
    for (const auto& c : table.grid.col_labels) out << ',' << c << ",rank_" << c;
    out << ",accum_rank\n";
    for (size_t r = 0; r < table.grid.values.size(); ++r) {
        out << table.grid.row_labels[r];
        for (size_t c = 0; c < table.grid.col_labels.size(); ++c)
            out << ',' << table.grid.values[r][c] << ',' << table.ranks[r][c];
        out << ',' << table.accumulated[r] << '\n';
    }
}

// ---- block sensitivity ----

std::vector<BlockSensitivityRow> block_sensitivity(
    double baseline_psnr_db, const std::vector<BlockSensitivityRow>& block_rows) {
    if (block_rows.empty()) throw std::invalid_argument("block_sensitivity: no rows");
    std::vector<BlockSensitivityRow> out = block_rows;
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.block_index < b.block_index; });
    for (auto& r : out) {
        if (!(r.params_m > 0.0))
            throw std::invalid_argument("block_sensitivity: parameter count must be positive");
        r.delta_psnr_per_mparam = (r.psnr_db - baseline_psnr_db) / r.params_m;
    }
    return out;
}

// ---- attacks ----

AttackKind attack_from_name(const std::string& name) {
    if (name == "unsharp") return AttackKind::unsharp;
    if (name == "checkerboard") return AttackKind::checkerboard;
    if (name == "hline") return AttackKind::hline;
    throw std::invalid_argument("unknown attack: " + name);
}

const char* attack_name(AttackKind k) {
    switch (k) {
        case AttackKind::unsharp: return "unsharp";
        case AttackKind::checkerboard: return "checkerboard";
        case AttackKind::hline: return "hline";
    }
    return "?";
}

namespace {

Tensor gaussian_blur_value(const Tensor& x, double sigma) {
    const int half = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    const int taps = 2 * half + 1;
    Tensor row(1, 1, 1, taps), col(1, 1, taps, 1);
    double sum = 0.0;
    for (int i = 0; i < taps; ++i) {
        const double d = i - half;
        row.data[i] = std::exp(-d * d / (2.0 * sigma * sigma));
        sum += row.data[i];
    }
    for (auto& v : row.data) v /= sum;
    col.data = row.data;
    // channel-independent separable blur with reflect borders
    Tensor merged(x.n * x.c, 1, x.h, x.w);
    merged.data = x.data;
    Tensor padded = pad_reflect(merged, half, half, half, half);
    Tensor h = conv2d(padded, row, {}, 1, 0);
    Tensor out = conv2d(h, col, {}, 1, 0);
    Tensor back(x.n, x.c, x.h, x.w);
    back.data = out.data;
    return back;
}

} // namespace

ImageBatch apply_attack(const ImageBatch& img, const AttackParams& p) {
    Tensor out = img.data;
    switch (p.kind) {
        case AttackKind::unsharp: {
            if (p.amount == 0.0) break;
            Tensor blurred = gaussian_blur_value(img.data, p.radius);
            for (size_t i = 0; i < out.data.size(); ++i)
                out.data[i] += p.amount * (img.data.data[i] - blurred.data[i]);
            break;
        }
        case AttackKind::checkerboard: {
            const int period = std::max(1, p.period);
            for (int n = 0; n < out.n; ++n)
                for (int c = 0; c < out.c; ++c)
                    for (int i = 0; i < out.h; ++i)
                        for (int j = 0; j < out.w; ++j) {
                            const int phase = ((i / period) + (j / period)) % 2;
                            out.at(n, c, i, j) += phase ? p.amount : -p.amount;
                        }
            break;
        }
        case AttackKind::hline: {
            const int spacing = std::max(1, p.spacing);
            for (int n = 0; n < out.n; ++n)
                for (int c = 0; c < out.c; ++c)
                    for (int i = 0; i < out.h; i += spacing)
                        for (int j = 0; j < out.w; ++j) out.at(n, c, i, j) += p.amount;
            break;
        }
    }
    for (auto& v : out.data) v = std::clamp(v, 0.0, 1.0);
    ImageBatch res;
    res.data = std::move(out);
    res.bit_depth_src = img.bit_depth_src;
    return res;
}

std::vector<ProbeRow> attack_probe(const CorpusManifest& corpus, AttackKind kind,
                                   const std::vector<double>& strengths,
                                   const VmafModel& metric_model, const AttackParams& base) {
    std::vector<ProbeRow> rows;
    for (size_t i = 0; i < corpus.size(); ++i) {
        ImageBatch img = load_entry(corpus, i);
        const double self_psnr = psnr_db(img, img);
        VmafScores self = vmaf_neg(img, img, metric_model);
        for (double s : strengths) {
            AttackParams p = base;
            p.kind = kind;
            p.amount = s;
            ImageBatch attacked = apply_attack(img, p);
            ProbeRow row;
            row.image_id = corpus.entries[i];
            row.attack = attack_name(kind);
            row.strength = s;
            row.delta_psnr = psnr_db(img, attacked) - self_psnr;
            VmafScores v = vmaf_neg(img, attacked, metric_model);
            row.delta_vmaf_y = v.y - self.y;
            row.delta_vmaf_u = v.u - self.u;
            row.delta_vmaf_v = v.v - self.v;
            row.delta_vmaf_mean = v.mean - self.mean;
            row.divergence = row.delta_vmaf_mean > 0.0 && row.delta_psnr < 0.0;
            rows.push_back(row);
        }
    }
    return rows;
}

void write_probe_csv(const std::string& path, const std::vector<ProbeRow>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("probe: cannot write " + path);
    out.precision(10);
    out << "image_id,attack,strength,delta_psnr,delta_vmaf_y,delta_vmaf_u,delta_vmaf_v,"
           "delta_vmaf_mean,divergence\n";
    for (const auto& r : rows)
        out << r.image_id << ',' << r.attack << ',' << r.strength << ',' << r.delta_psnr << ','
            << r.delta_vmaf_y << ',' << r.delta_vmaf_u << ',' << r.delta_vmaf_v << ','
            << r.delta_vmaf_mean << ',' << (r.divergence ? 1 : 0) << '\n';
}

} // namespace negtune
