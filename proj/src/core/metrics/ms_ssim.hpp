#pragma once

#include "../autodiff.hpp"
#include "../image.hpp"
#include "metric_value.hpp"

namespace negtune {

// 5-scale structural similarity, 11-tap Gaussian window (sigma 1.5), standard
// scale weights, valid-window convolution, unit data range. Inputs must be at
// least kMinMetricSide on each side.
ad::Var ms_ssim_g(const ad::Var& ref, const ad::Var& dist);

MetricValue ms_ssim(const ImageBatch& ref, const ImageBatch& dist, bool with_grad = false);

} // namespace negtune
