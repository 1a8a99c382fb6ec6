#include "codec.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "rng.hpp"

namespace negtune {

using ad::Var;

std::string CodecConfig::canonical_string() const {
    std::ostringstream os;
    os << "hyperprior-v1|base=" << base_channels << "|latent=" << latent_channels
       << "|hyper=" << hyper_channels << "|kernel=" << kernel;
    return os.str();
}

uint64_t CodecConfig::config_hash() const {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : canonical_string()) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string FreezeSpec::to_string() const {
    switch (mode) {
        case FreezeMode::none: return "none";
        case FreezeMode::encoder_only: return "encoder_only";
        case FreezeMode::decoder_only: return "decoder_only";
        case FreezeMode::single_decoder_block:
            return "single_decoder_block:" + std::to_string(block_index);
    }
    return "?";
}

FreezeSpec FreezeSpec::parse(const std::string& text) {
    FreezeSpec s;
    if (text == "none") {
        s.mode = FreezeMode::none;
    } else if (text == "encoder_only" || text == "encoder") {
        s.mode = FreezeMode::encoder_only;
    } else if (text == "decoder_only" || text == "decoder") {
        s.mode = FreezeMode::decoder_only;
    } else if (text.rfind("single_decoder_block:", 0) == 0) {
        s.mode = FreezeMode::single_decoder_block;
        s.block_index = std::stoi(text.substr(text.find(':') + 1));
    } else {
        throw std::invalid_argument("unknown freeze spec: " + text);
    }
    return s;
}

CodecModel::ConvParam CodecModel::make_conv(const std::string& name, int in_ch, int out_ch,
                                            int kh, int kw, std::mt19937_64& rng,
                                            bool transposed) {
    // weight layout: conv (oc,ic,kh,kw); transposed (ic,oc,kh,kw)
    Tensor w = transposed ? Tensor(in_ch, out_ch, kh, kw) : Tensor(out_ch, in_ch, kh, kw);
    const double fan_in = static_cast<double>(in_ch) * kh * kw;
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
    for (auto& v : w.data) v = dist(rng);
    Tensor b(1, out_ch, 1, 1);
    ConvParam p;
    p.name = name;
    p.weight = Var::leaf(std::move(w));
    p.bias = Var::leaf(std::move(b));
    register_param(name + ".weight", p.weight);
    register_param(name + ".bias", p.bias);
    return p;
}

void CodecModel::register_param(const std::string& name, Var v) {
    params_.emplace(name, v);
    param_order_.push_back(name);
}

CodecModel::CodecModel(const CodecConfig& config) : config_(config) {
    if (config.base_channels < 1 || config.latent_channels < 1 || config.hyper_channels < 1)
        throw std::invalid_argument("codec config: channel counts must be positive");
    if (config.kernel != 3 && config.kernel != 5)
        throw std::invalid_argument("codec config: kernel must be 3 or 5");

    auto rng = make_rng(config.seed, 0, RngPurpose::init);
    const int N = config.base_channels, M = config.latent_channels, H = config.hyper_channels;
    const int k = config.kernel;

    enc_.push_back(make_conv("enc.0", 3, N, k, k, rng, false));
    enc_.push_back(make_conv("enc.1", N, N, k, k, rng, false));
    enc_.push_back(make_conv("enc.2", N, N, k, k, rng, false));
    enc_.push_back(make_conv("enc.3", N, M, k, k, rng, false));

    hyper_enc_.push_back(make_conv("hyper_enc.0", M, H, 3, 3, rng, false));
    hyper_enc_.push_back(make_conv("hyper_enc.1", H, H, k, k, rng, false));
    hyper_enc_.push_back(make_conv("hyper_enc.2", H, H, k, k, rng, false));

    hyper_dec_.push_back(make_conv("hyper_dec.0", H, H, k, k, rng, true));
    hyper_dec_.push_back(make_conv("hyper_dec.1", H, H, k, k, rng, true));
    hyper_dec_.push_back(make_conv("hyper_dec.2", H, 2 * M, 3, 3, rng, false));

    dec_.push_back(make_conv("dec.0", M, N, k, k, rng, true));
    dec_.push_back(make_conv("dec.1", N, N, k, k, rng, true));
    dec_.push_back(make_conv("dec.2", N, N, k, k, rng, true));
    dec_.push_back(make_conv("dec.3", N, 3, k, k, rng, true));

    entropy_loc_ = Var::leaf(Tensor(1, H, 1, 1));
    entropy_log_scale_ = Var::leaf(Tensor(1, H, 1, 1));
    register_param("entropy.loc", entropy_loc_);
    register_param("entropy.log_scale", entropy_log_scale_);
}

Var& CodecModel::param(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::invalid_argument("unknown parameter: " + name);
    return it->second;
}

const Var& CodecModel::param(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::invalid_argument("unknown parameter: " + name);
    return it->second;
}

namespace {

constexpr double kLeakySlope = 0.01;
constexpr double kMinLikelihood = 1e-9;
constexpr double kLogScaleClampLo = -6.0;
constexpr double kLogScaleClampHi = 6.0;

Tensor uniform_noise_like(const Tensor& t, std::mt19937_64& rng) {
    Tensor n(t.n, t.c, t.h, t.w);
    std::uniform_real_distribution<double> d(-0.5, 0.5);
    for (auto& v : n.data) v = d(rng);
    return n;
}

Tensor round_tensor(const Tensor& t) {
    Tensor r = t;
    for (auto& v : r.data) v = std::round(v);
    return r;
}

// standard normal CDF
Var gauss_cdf(const Var& x) { return (erf_v(x * (1.0 / 1.4142135623730951)) + 1.0) * 0.5; }

} // namespace

CodedGraph CodecModel::forward(const Var& x, CodingMode mode, std::mt19937_64* noise_rng) {
    const Tensor& xv = x.value();
    if (xv.c != 3) throw std::invalid_argument("codec forward: need 3 channels");
    if (xv.h % downsample_factor() != 0 || xv.w % downsample_factor() != 0)
        throw std::invalid_argument("codec forward: sides must be multiples of " +
                                    std::to_string(downsample_factor()));
    if (mode == CodingMode::training && noise_rng == nullptr)
        throw std::invalid_argument("codec forward: training mode needs a noise source");

    const int k = config_.kernel;
    const int pad = k / 2;

    // analysis transform
    Var y = x;
    for (size_t i = 0; i < enc_.size(); ++i) {
        y = ad::conv2d_v(y, enc_[i].weight, enc_[i].bias, 2, pad);
        if (i + 1 < enc_.size()) y = leaky_relu(y, kLeakySlope);
    }

    // hyper analysis
    Var z = ad::conv2d_v(y, hyper_enc_[0].weight, hyper_enc_[0].bias, 1, 1);
    z = leaky_relu(z, kLeakySlope);
    z = ad::conv2d_v(z, hyper_enc_[1].weight, hyper_enc_[1].bias, 2, pad);
    z = leaky_relu(z, kLeakySlope);
    z = ad::conv2d_v(z, hyper_enc_[2].weight, hyper_enc_[2].bias, 2, pad);

    // quantization relaxation: additive uniform noise in training, rounding at
    // evaluation (latent rounding is mean-centered)
    Var z_hat;
    if (mode == CodingMode::training) {
        z_hat = z + Var::constant(uniform_noise_like(z.value(), *noise_rng));
    } else {
        z_hat = z + Var::constant([&] {
            Tensor d = round_tensor(z.value());
            for (size_t i = 0; i < d.data.size(); ++i) d.data[i] -= z.value().data[i];
            return d;
        }());
    }

    // hyper synthesis -> per-element Gaussian parameters for y
    Var hp = ad::conv_transpose2d_v(z_hat, hyper_dec_[0].weight, hyper_dec_[0].bias, 2, pad, 1);
    hp = leaky_relu(hp, kLeakySlope);
    hp = ad::conv_transpose2d_v(hp, hyper_dec_[1].weight, hyper_dec_[1].bias, 2, pad, 1);
    hp = leaky_relu(hp, kLeakySlope);
    hp = ad::conv2d_v(hp, hyper_dec_[2].weight, hyper_dec_[2].bias, 1, 1);
    const int M = config_.latent_channels;
    Var mu = ad::slice_channels(hp, 0, M);
    Var sigma = exp_v(clamp(ad::slice_channels(hp, M, M), kLogScaleClampLo, kLogScaleClampHi));

    Var y_hat;
    if (mode == CodingMode::training) {
        y_hat = y + Var::constant(uniform_noise_like(y.value(), *noise_rng));
    } else {
        Tensor centered = y.value();
        const Tensor& muv = mu.value();
        for (size_t i = 0; i < centered.data.size(); ++i)
            centered.data[i] = std::round(centered.data[i] - muv.data[i]) + muv.data[i] -
                               y.value().data[i];
        y_hat = y + Var::constant(centered);
    }

    // conditional Gaussian likelihood of y_hat
    Var upper = gauss_cdf((y_hat + 0.5 - mu) / sigma);
    Var lower = gauss_cdf((y_hat - 0.5 - mu) / sigma);
    Var p_y = clamp_min(upper - lower, kMinLikelihood);

    // factorized logistic likelihood of z_hat
    Var scale = exp_v(clamp(entropy_log_scale_, kLogScaleClampLo, kLogScaleClampHi));
    Var inv_scale = pow_const(scale, -1.0);
    Var zc = add_cvec(z_hat, neg(entropy_loc_));
    Var pz_hi = sigmoid(mul_cvec(zc + 0.5, inv_scale));
    Var pz_lo = sigmoid(mul_cvec(zc - 0.5, inv_scale));
    Var p_z = clamp_min(pz_hi - pz_lo, kMinLikelihood);

    CodedGraph out;
    out.latent = y_hat;
    out.reconstruction = decode_latent(y_hat);
    const long pixels = static_cast<long>(xv.n) * xv.h * xv.w;
    out.bpp = rate_bpp_g({p_y, p_z}, pixels);
    return out;
}

Var CodecModel::decode_latent(const Var& y_hat) {
    const int pad = config_.kernel / 2;
    Var r = y_hat;
    for (size_t i = 0; i < dec_.size(); ++i) {
        r = ad::conv_transpose2d_v(r, dec_[i].weight, dec_[i].bias, 2, pad, 1);
        if (i + 1 < dec_.size()) r = leaky_relu(r, kLeakySlope);
    }
    return sigmoid(r);
}

CodedImage code_image(CodecModel& model, const ImageBatch& img, CodingMode mode) {
    ad::NoGradGuard guard;
    const int f = model.downsample_factor();
    const int H = img.height(), W = img.width();
    const int ph = (f - H % f) % f;
    const int pw = (f - W % f) % f;

    Tensor padded = ph || pw ? pad_reflect(img.data, 0, ph, 0, pw) : img.data;
    CodedGraph g = model.forward(Var::constant(padded), mode, nullptr);

    CodedImage out;
    Tensor rec = ph || pw ? crop(g.reconstruction.value(), 0, 0, H, W) : g.reconstruction.value();
    for (auto& v : rec.data) v = std::clamp(v, 0.0, 1.0);
    out.reconstruction = ImageBatch(std::move(rec));
    // rate is reported against the original pixel count
    const long px = static_cast<long>(img.batch()) * H * W;
    const long padded_px = static_cast<long>(img.batch()) * (H + ph) * (W + pw);
    out.rate.num_pixels = px;
    out.rate.total_bits = g.bpp.item() * static_cast<double>(padded_px);
    out.rate.bpp = out.rate.total_bits / static_cast<double>(px);
    return out;
}

CodedImage code_image_pair(CodecModel& encoder_side, CodecModel& decoder_side,
                           const ImageBatch& img) {
    if (encoder_side.config_hash() != decoder_side.config_hash())
        throw std::invalid_argument("code_image_pair: architecture mismatch");
    ad::NoGradGuard guard;
    const int f = encoder_side.downsample_factor();
    const int H = img.height(), W = img.width();
    const int ph = (f - H % f) % f;
    const int pw = (f - W % f) % f;
    Tensor padded = ph || pw ? pad_reflect(img.data, 0, ph, 0, pw) : img.data;

    CodedGraph g = encoder_side.forward(Var::constant(padded), CodingMode::evaluation, nullptr);
    Var rec_var = decoder_side.decode_latent(g.latent);

    CodedImage out;
    Tensor rec = ph || pw ? crop(rec_var.value(), 0, 0, H, W) : rec_var.value();
    for (auto& v : rec.data) v = std::clamp(v, 0.0, 1.0);
    out.reconstruction = ImageBatch(std::move(rec));
    const long px = static_cast<long>(img.batch()) * H * W;
    const long padded_px = static_cast<long>(img.batch()) * (H + ph) * (W + pw);
    out.rate.num_pixels = px;
    out.rate.total_bits = g.bpp.item() * static_cast<double>(padded_px);
    out.rate.bpp = out.rate.total_bits / static_cast<double>(px);
    return out;
}

std::vector<std::string> CodecModel::apply_freeze(const FreezeSpec& spec) {
    if (spec.mode == FreezeMode::single_decoder_block &&
        (spec.block_index < 0 || spec.block_index >= decoder_block_count()))
        throw std::invalid_argument("freeze: decoder block index out of range");

    auto starts_with = [](const std::string& s, const std::string& prefix) {
        return s.rfind(prefix, 0) == 0;
    };
    std::vector<std::string> trainable;
    for (const auto& name : param_order_) {
        bool on = false;
        switch (spec.mode) {
            case FreezeMode::none:
                on = true;
                break;
            case FreezeMode::encoder_only:
                on = starts_with(name, "enc.") || starts_with(name, "hyper_enc.");
                break;
            case FreezeMode::decoder_only:
                on = starts_with(name, "dec.");
                break;
            case FreezeMode::single_decoder_block:
                on = starts_with(name, "dec." + std::to_string(spec.block_index) + ".");
                break;
        }
        auto& p = params_.at(name);
        p.node()->requires_grad = on;
        if (on) trainable.push_back(name);
    }
    return trainable;
}

std::vector<std::string> CodecModel::trainable_names() const {
    std::vector<std::string> out;
    for (const auto& name : param_order_)
        if (params_.at(name).requires_grad()) out.push_back(name);
    return out;
}

long CodecModel::count_params() const { return count_params(param_order_); }

long CodecModel::count_params(const std::vector<std::string>& names) const {
    long total = 0;
    for (const auto& n : names) total += static_cast<long>(param(n).value().size());
    return total;
}

long CodecModel::count_params_block(int decoder_block) const {
    if (decoder_block < 0 || decoder_block >= decoder_block_count())
        throw std::invalid_argument("count_params_block: index out of range");
    const std::string prefix = "dec." + std::to_string(decoder_block) + ".";
    long total = 0;
    for (const auto& n : param_order_)
        if (n.rfind(prefix, 0) == 0) total += static_cast<long>(param(n).value().size());
    return total;
}

} // namespace negtune
