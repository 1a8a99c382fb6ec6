#pragma once

#include "../autodiff.hpp"
#include "../image.hpp"
#include "metric_value.hpp"

namespace negtune {

// MSE on the 0-255 scale: 255^2 * mean((ref-dist)^2). The loss weighting and
// the published scaling factors are only mutually consistent on this scale.
ad::Var mse255_g(const ad::Var& ref, const ad::Var& dist);

MetricValue mse255(const ImageBatch& ref, const ImageBatch& dist, bool with_grad = false);

constexpr double kPsnrCapDb = 100.0; // zero-error cap, keeps reports finite

double psnr_db(const ImageBatch& ref, const ImageBatch& dist);
double psnr_from_mse255(double mse);

} // namespace negtune
