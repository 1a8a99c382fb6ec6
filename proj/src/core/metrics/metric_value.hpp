#pragma once

#include <optional>

#include "../tensor.hpp"

namespace negtune {

// Scalar metric plus, when requested, its gradient with respect to the
// distorted image (same shape as the input batch).
struct MetricValue {
    double value = 0.0;
    std::optional<Tensor> gradient;
};

} // namespace negtune
