#pragma once

#include <vector>

#include "autodiff.hpp"
#include "corpus.hpp"
#include "image.hpp"
#include "metrics/vmaf.hpp"

namespace negtune {

class CodecModel;

// Distortion mix for the rate-distortion objective. alpha weights MSE (0-255
// scale), beta weights (1 - MS-SSIM), gamma weights (100 - VMAF NEG mean);
// they must sum to one. lambda trades distortion against rate.
struct LossWeights {
    double alpha = 1.0;
    double beta = 0.0;
    double gamma = 0.0;
    double lambda = 0.01;

    void validate() const; // throws on violated invariants
};

// Per-codec scale alignment of the reversed metrics onto the MSE range,
// frozen after calibration.
struct ScalingFactors {
    double beta_prime = 1.0;
    double gamma_prime = 1.0;
};

struct RateEstimate {
    double total_bits = 0.0; // negative log2-likelihood of all latent symbols
    long num_pixels = 0;
    double bpp = 0.0;
};

struct LossBreakdown {
    double rate = 0.0; // bpp
    double d_mse = 0.0;
    double d_msssim = 0.0;
    double d_vmafneg = 0.0;
    double total = 0.0; // rate + lambda * (d_mse + d_msssim + d_vmafneg)
};

// total_bits = -sum log2(p) over every likelihood tensor; bpp = bits/pixels.
ad::Var rate_bpp_g(const std::vector<ad::Var>& likelihoods, long num_pixels);
RateEstimate rate_bpp(const std::vector<Tensor>& likelihoods, long num_pixels);

struct MixedLossGraph {
    ad::Var total;
    ad::Var rate;
    ad::Var d_mse, d_msssim, d_vmafneg; // undefined when the weight is zero
    LossBreakdown values() const;
};

// Metric terms whose weight is exactly zero are skipped, which keeps the
// single-metric reduction identities exact.
MixedLossGraph mixed_loss_g(const ad::Var& ref, const ad::Var& dist, const ad::Var& bpp,
                            const LossWeights& w, const ScalingFactors& s, const VmafModel& model);

LossBreakdown mixed_loss(const ImageBatch& ref, const ImageBatch& dist, const RateEstimate& rate,
                         const LossWeights& w, const ScalingFactors& s, const VmafModel& model);

// Ratio-of-means calibration. Throws "degenerate calibration" when a corpus
// reconstructs perfectly on any term.
ScalingFactors calibrate_from_stats(double mean_mse255, double mean_one_minus_msssim,
                                    double mean_vmaf_deficit);
ScalingFactors calibrate_scaling(const CorpusManifest& validation, CodecModel& codec,
                                 const VmafModel& model);

} // namespace negtune
