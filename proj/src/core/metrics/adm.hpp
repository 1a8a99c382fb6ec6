#pragma once

#include "../autodiff.hpp"

namespace negtune {

// Detail-loss metric: 4-scale db2 wavelet decomposition, decoupling of the
// distorted detail bands into restored + additive parts, CSF weighting,
// contrast masking by the additive part, and a ratio of L3 norms. egl caps
// the decoupling gain when the bands are angularly aligned; 1.0 is the
// no-enhancement-gain configuration, infinity restores the distorted band
// outright. Plane shape (1,1,H,W), 0-255 scale.
ad::Var adm_feature_g(const ad::Var& ref_plane, const ad::Var& dist_plane, double egl);

} // namespace negtune
