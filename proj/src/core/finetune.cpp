#include "finetune.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "metrics/mse_psnr.hpp"
#include "metrics/ms_ssim.hpp"
#include "rng.hpp"

namespace negtune {

using ad::Var;

void TrainConfig::validate() const {
    if (epochs < 1) throw std::invalid_argument("train config: epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("train config: batch_size must be >= 1");
    if (crop < kMinMetricSide)
        throw std::invalid_argument("train config: crop below metric minimum");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("train config: bad learning rate");
    if (learning_rate != kFixedLearningRate)
        std::fprintf(stderr,
                     "warning: learning rate %.2g overrides the fixed protocol value %.2g\n",
                     learning_rate, kFixedLearningRate);
    weights.validate();
    if (!(scaling.beta_prime > 0.0) || !(scaling.gamma_prime > 0.0))
        throw std::invalid_argument("train config: scaling factors must be positive");
}

void OptState::embed_into(Checkpoint& ck) const {
    for (const auto& [name, t] : m) ck.arrays["opt.m." + name] = t;
    for (const auto& [name, t] : v) ck.arrays["opt.v." + name] = t;
    Tensor step_t = Tensor::scalar(static_cast<double>(step));
    ck.arrays["opt.step"] = step_t;
}

OptState OptState::extract_from(const Checkpoint& ck) {
    OptState s;
    for (const auto& [name, t] : ck.arrays) {
        if (name.rfind("opt.m.", 0) == 0) s.m[name.substr(6)] = t;
        else if (name.rfind("opt.v.", 0) == 0) s.v[name.substr(6)] = t;
        else if (name == "opt.step") s.step = static_cast<long>(t.item());
    }
    return s;
}

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

struct Adam {
    OptState& state;
    double lr;

    void step(CodecModel& model, const std::vector<std::string>& trainable, double clip_norm) {
        // global-norm clip over the trainable set
        double norm_sq = 0.0;
        for (const auto& name : trainable) {
            const auto& g = model.param(name).grad().data;
            for (double v : g) norm_sq += v * v;
        }
        const double norm = std::sqrt(norm_sq);
        const double scale = (clip_norm > 0.0 && norm > clip_norm) ? clip_norm / norm : 1.0;

        ++state.step;
        const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.step));
        const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.step));
        for (const auto& name : trainable) {
            Var& p = model.param(name);
            Tensor& m = state.m[name];
            Tensor& v = state.v[name];
            if (m.size() == 0) m = Tensor(p.value().n, p.value().c, p.value().h, p.value().w);
            if (v.size() == 0) v = Tensor(p.value().n, p.value().c, p.value().h, p.value().w);
            auto& pv = p.mutable_value().data;
            const auto& g = p.grad().data;
            for (size_t i = 0; i < pv.size(); ++i) {
                const double gi = g[i] * scale;
                m.data[i] = kAdamBeta1 * m.data[i] + (1.0 - kAdamBeta1) * gi;
                v.data[i] = kAdamBeta2 * v.data[i] + (1.0 - kAdamBeta2) * gi * gi;
                pv[i] -= lr * (m.data[i] / bc1) / (std::sqrt(v.data[i] / bc2) + kAdamEps);
            }
        }
    }
};

const char* dominant_component(const LossBreakdown& b) {
    if (!std::isfinite(b.rate)) return "rate";
    double m = std::fabs(b.d_mse), s = std::fabs(b.d_msssim), v = std::fabs(b.d_vmafneg);
    if (!std::isfinite(b.d_mse) || (m >= s && m >= v)) return "mse";
    if (!std::isfinite(b.d_msssim) || s >= v) return "msssim";
    return "vmafneg";
}

} // namespace

ValidationStats evaluate_validation(CodecModel& model, const CorpusManifest& val,
                                    const VmafModel& metric_model) {
    ValidationStats acc;
    for (size_t i = 0; i < val.size(); ++i) {
        ImageBatch img = load_entry(val, i);
        CodedImage coded = code_image(model, img, CodingMode::evaluation);
        acc.psnr_db += psnr_db(img, coded.reconstruction);
        acc.ms_ssim += ms_ssim(img, coded.reconstruction).value;
        VmafScores s = vmaf_neg(img, coded.reconstruction, metric_model);
        acc.vmafneg_y += s.y;
        acc.vmafneg_u += s.u;
        acc.vmafneg_v += s.v;
        acc.vmafneg_mean += s.mean;
        acc.bpp += coded.rate.bpp;
    }
    const double n = static_cast<double>(val.size());
    acc.psnr_db /= n;
    acc.ms_ssim /= n;
    acc.vmafneg_y /= n;
    acc.vmafneg_u /= n;
    acc.vmafneg_v /= n;
    acc.vmafneg_mean /= n;
    acc.bpp /= n;
    return acc;
}

TrainHistory finetune(CodecModel& model, const CorpusManifest& train, const CorpusManifest& val,
                      const TrainConfig& cfg, const VmafModel& metric_model, OptState* opt_state,
                      const std::function<void(const EpochRecord&)>& on_epoch) {
    cfg.validate();
    if (train.size() == 0 || val.size() == 0)
        throw std::invalid_argument("finetune: empty corpus");
    if (cfg.crop % model.downsample_factor() != 0)
        throw std::invalid_argument("finetune: crop must be a multiple of the downsampling factor");

    const std::vector<std::string> trainable = model.apply_freeze(cfg.freeze);
    if (trainable.empty()) throw std::invalid_argument("finetune: freeze spec leaves nothing trainable");

    OptState local_state;
    OptState& opt = opt_state ? *opt_state : local_state;
    Adam adam{opt, cfg.learning_rate};

    TrainHistory history;
    history.seed = cfg.seed;

    // epoch-boundary snapshot for the divergence abort path
    auto snapshot = [&model] {
        std::map<std::string, Tensor> snap;
        for (const auto& n : model.param_names()) snap[n] = model.param(n).value();
        return snap;
    };
    auto restore = [&model](const std::map<std::string, Tensor>& snap) {
        for (const auto& [n, t] : snap) model.param(n).mutable_value() = t;
    };
    std::map<std::string, Tensor> last_good = snapshot();

    for (int e = cfg.completed_epochs; e < cfg.completed_epochs + cfg.epochs; ++e) {
        const auto epoch_start = std::chrono::steady_clock::now();
        auto shuffle_rng = make_rng(cfg.seed, static_cast<uint64_t>(e), RngPurpose::shuffle);
        auto noise_rng = make_rng(cfg.seed, static_cast<uint64_t>(e), RngPurpose::noise);

        std::vector<size_t> order(train.size());
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        LossBreakdown epoch_sum;
        long steps = 0;
        size_t pos = 0;
        while (pos < order.size()) {
            const size_t batch_end = std::min(pos + static_cast<size_t>(cfg.batch_size), order.size());
            const int batch_n = static_cast<int>(batch_end - pos);
            LossBreakdown step_sum;
            // batch assembled as single-image passes with gradient
            // accumulation; summation order is fixed, so results are
            // deterministic
            for (size_t bi = pos; bi < batch_end; ++bi) {
                ImageBatch img = load_entry(train, order[bi]);
                const uint64_t crop_seed =
                    cfg.seed ^ (0x517cc1b727220a95ULL * (e + 1)) ^ (order[bi] * 0x2545f4914f6cdd1dULL);
                ImageBatch patch = img.height() == cfg.crop && img.width() == cfg.crop
                                       ? img
                                       : random_crop(img, cfg.crop, crop_seed);
                CodedGraph coded = model.forward(Var::constant(patch.data), CodingMode::training,
                                                 &noise_rng);
                MixedLossGraph loss = mixed_loss_g(Var::constant(patch.data), coded.reconstruction,
                                                   coded.bpp, cfg.weights, cfg.scaling, metric_model);
                LossBreakdown b = loss.values();
                if (!std::isfinite(b.total)) {
                    restore(last_good);
                    throw std::runtime_error(
                        std::string("finetune: non-finite loss, aborted at last epoch boundary "
                                    "(dominant component: ") +
                        dominant_component(b) + ")");
                }
                ad::backward(loss.total * (1.0 / batch_n));
                step_sum.rate += b.rate;
                step_sum.d_mse += b.d_mse;
                step_sum.d_msssim += b.d_msssim;
                step_sum.d_vmafneg += b.d_vmafneg;
                step_sum.total += b.total;
            }
            adam.step(model, trainable, cfg.grad_clip_norm);
            for (const auto& name : trainable) model.param(name).zero_grad();

            epoch_sum.rate += step_sum.rate / batch_n;
            epoch_sum.d_mse += step_sum.d_mse / batch_n;
            epoch_sum.d_msssim += step_sum.d_msssim / batch_n;
            epoch_sum.d_vmafneg += step_sum.d_vmafneg / batch_n;
            epoch_sum.total += step_sum.total / batch_n;
            ++steps;
            pos = batch_end;
        }

        EpochRecord rec;
        rec.epoch = e + 1;
        rec.train_mean.rate = epoch_sum.rate / steps;
        rec.train_mean.d_mse = epoch_sum.d_mse / steps;
        rec.train_mean.d_msssim = epoch_sum.d_msssim / steps;
        rec.train_mean.d_vmafneg = epoch_sum.d_vmafneg / steps;
        rec.train_mean.total = epoch_sum.total / steps;
        rec.validation = evaluate_validation(model, val, metric_model);
        rec.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_start).count();
        history.epochs.push_back(rec);
        last_good = snapshot();
        if (on_epoch) on_epoch(rec);
    }
    return history;
}

} // namespace negtune
