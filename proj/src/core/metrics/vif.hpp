#pragma once

#include <array>

#include "../autodiff.hpp"

namespace negtune {

// Pixel-domain visual information fidelity, four dyadic scales with Gaussian
// windows of 17/9/5/3 taps (sigma = width/5) and noise variance 2.0 on the
// 0-255 scale. egl caps the local gain term in the numerator before
// aggregation; 1.0 is the no-enhancement-gain configuration, infinity the
// unlimited one. Planes are (1,1,H,W) scaled to 0-255.
std::array<ad::Var, 4> vif_features_g(const ad::Var& ref_plane, const ad::Var& dist_plane,
                                      double egl);

} // namespace negtune
