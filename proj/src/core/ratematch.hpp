#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace negtune {

struct RateMatchResult {
    double lambda_star = 0.0;
    double achieved_bpp = 0.0;
    double target_bpp = 0.0;
    double deviation = 0.0; // fraction, signed
    int iterations = 0;     // bisection steps
    std::vector<std::pair<double, double>> trace; // every probed (lambda, mean bpp)

    std::string to_json() const;
};

// Bisection on log(lambda) after a geometric bracket expansion around the
// baseline lambda. The rate response direction is detected from the probes;
// a non-monotone response inside the final bracket aborts. The runner must be
// deterministic in lambda.
RateMatchResult match_bitrate(const std::function<double(double)>& bpp_of_lambda,
                              double baseline_lambda, double target_bpp, double tol = 0.01,
                              int max_iter = 40);

} // namespace negtune
