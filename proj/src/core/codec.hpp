#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "autodiff.hpp"
#include "image.hpp"
#include "loss.hpp"

namespace negtune {

// Scale-hyperprior toy codec: 4 strided conv encoder blocks, hyper pair
// (conditional Gaussian over the latent, factorized logistic over the hyper
// latent), 4 transposed-conv decoder blocks ending in a sigmoid.
struct CodecConfig {
    int base_channels = 16;
    int latent_channels = 24;
    int hyper_channels = 12;
    int kernel = 5;
    uint64_t seed = 7;
    double quality_lambda = 0.01; // lambda the model is (to be) trained with

    std::string canonical_string() const; // architecture only, excludes seed
    uint64_t config_hash() const;
};

enum class FreezeMode { none, encoder_only, decoder_only, single_decoder_block };

struct FreezeSpec {
    FreezeMode mode = FreezeMode::none;
    int block_index = 0; // for single_decoder_block

    std::string to_string() const;
    static FreezeSpec parse(const std::string& text);
};

enum class CodingMode { training, evaluation };

struct CodedImage {
    ImageBatch reconstruction;
    RateEstimate rate;
};

struct CodedGraph {
    ad::Var reconstruction; // (N,3,H,W) in [0,1]
    ad::Var bpp;            // scalar
    ad::Var latent;         // quantized (or noise-relaxed) latent fed to the decoder
};

class CodecModel {
public:
    explicit CodecModel(const CodecConfig& config);

    const CodecConfig& config() const { return config_; }
    uint64_t config_hash() const { return config_.config_hash(); }

    // ordered (name, parameter) pairs; names are stable across runs
    const std::vector<std::string>& param_names() const { return param_order_; }
    ad::Var& param(const std::string& name);
    const ad::Var& param(const std::string& name) const;

    int decoder_block_count() const { return 4; }
    int encoder_block_count() const { return 4; }

    // Forward pass on a [0,1] RGB batch whose sides are multiples of the
    // downsampling factor. noise_rng supplies the training relaxation.
    CodedGraph forward(const ad::Var& x, CodingMode mode, std::mt19937_64* noise_rng = nullptr);

    // Synthesis transform alone, for decoding a latent produced elsewhere.
    ad::Var decode_latent(const ad::Var& y_hat);

    // Pads to the downsampling multiple (reflect), crops after decode; rate
    // uses the original pixel count.
    friend CodedImage code_image(CodecModel& model, const ImageBatch& img, CodingMode mode);

    int downsample_factor() const { return 64; } // 16 from the encoder, 4 from the hyper pair

    // Marks the selected subset trainable and everything else frozen;
    // returns the trainable names.
    std::vector<std::string> apply_freeze(const FreezeSpec& spec);
    std::vector<std::string> trainable_names() const;

    long count_params() const;
    long count_params(const std::vector<std::string>& names) const;
    long count_params_block(int decoder_block) const;
    static double params_in_millions(long count) { return count / 1e6; }

private:
    struct ConvParam {
        std::string name;
        ad::Var weight;
        ad::Var bias;
    };

    ConvParam make_conv(const std::string& name, int in_ch, int out_ch, int kh, int kw,
                        std::mt19937_64& rng, bool transposed);
    void register_param(const std::string& name, ad::Var v);

    CodecConfig config_;
    std::vector<ConvParam> enc_, dec_, hyper_enc_, hyper_dec_;
    ad::Var entropy_loc_, entropy_log_scale_; // factorized prior over the hyper latent
    std::map<std::string, ad::Var> params_;
    std::vector<std::string> param_order_;
};

CodedImage code_image(CodecModel& model, const ImageBatch& img, CodingMode mode);

// Mixed deployment: latents and rate from the encoder-side model,
// reconstruction from the decoder-side model. Architectures must match.
CodedImage code_image_pair(CodecModel& encoder_side, CodecModel& decoder_side,
                           const ImageBatch& img);

} // namespace negtune
