#include "ratematch.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace negtune {

std::string RateMatchResult::to_json() const {
    nlohmann::json j;
    j["lambda_star"] = lambda_star;
    j["achieved_bpp"] = achieved_bpp;
    j["target_bpp"] = target_bpp;
    j["deviation"] = deviation;
    j["iterations"] = iterations;
    nlohmann::json tr = nlohmann::json::array();
    for (const auto& [l, b] : trace) tr.push_back({{"lambda", l}, {"bpp", b}});
    j["trace"] = tr;
    return j.dump(2);
}

RateMatchResult match_bitrate(const std::function<double(double)>& bpp_of_lambda,
                              double baseline_lambda, double target_bpp, double tol,
                              int max_iter) {
    if (!(target_bpp > 0.0)) throw std::invalid_argument("match_bitrate: target bpp must be positive");
    if (!(baseline_lambda > 0.0)) throw std::invalid_argument("match_bitrate: lambda must be positive");
    if (!(tol > 0.0)) throw std::invalid_argument("unreachable tolerance (tol must be positive)");

    RateMatchResult res;
    res.target_bpp = target_bpp;

    auto probe = [&](double lam) {
        const double bpp = bpp_of_lambda(lam);
        res.trace.emplace_back(lam, bpp);
        return bpp;
    };
    auto rel_dev = [&](double bpp) { return (bpp - target_bpp) / target_bpp; };
    auto finish = [&](double lam, double bpp) {
        res.lambda_star = lam;
        res.achieved_bpp = bpp;
        res.deviation = rel_dev(bpp);
        return res;
    };

    double lam0 = baseline_lambda;
    double bpp0 = probe(lam0);
    if (std::fabs(rel_dev(bpp0)) <= tol) return finish(lam0, bpp0);

    // direction of the rate response, from a second probe
    double lam1 = lam0 * 2.0;
    double bpp1 = probe(lam1);
    if (std::fabs(rel_dev(bpp1)) <= tol) return finish(lam1, bpp1);
    const bool increasing = bpp1 >= bpp0;

    // geometric expansion until the target is bracketed
    double lo_lam = lam0, lo_bpp = bpp0, hi_lam = lam1, hi_bpp = bpp1;
    if (lo_lam > hi_lam) {
        std::swap(lo_lam, hi_lam);
        std::swap(lo_bpp, hi_bpp);
    }
    auto below = [&](double bpp) { return bpp < target_bpp; };
    int expansions = 0;
    while (below(lo_bpp) == below(hi_bpp)) {
        if (++expansions > max_iter)
            throw std::runtime_error("match_bitrate: non-monotone or out-of-range rate response" +
                                     std::string(" (bracket not found); probes: ") +
                                     std::to_string(res.trace.size()));
        const bool need_higher_bpp = below(lo_bpp); // both sides under target
        const bool grow_lambda = need_higher_bpp == increasing;
        if (grow_lambda) {
            lo_lam = hi_lam;
            lo_bpp = hi_bpp;
            hi_lam *= 2.0;
            hi_bpp = probe(hi_lam);
            if (std::fabs(rel_dev(hi_bpp)) <= tol) return finish(hi_lam, hi_bpp);
        } else {
            hi_lam = lo_lam;
            hi_bpp = lo_bpp;
            lo_lam *= 0.5;
            lo_bpp = probe(lo_lam);
            if (std::fabs(rel_dev(lo_bpp)) <= tol) return finish(lo_lam, lo_bpp);
        }
    }

    // bisection on log lambda
    double best_lam = std::fabs(rel_dev(lo_bpp)) < std::fabs(rel_dev(hi_bpp)) ? lo_lam : hi_lam;
    double best_bpp = std::fabs(rel_dev(lo_bpp)) < std::fabs(rel_dev(hi_bpp)) ? lo_bpp : hi_bpp;
    for (int it = 0; it < max_iter; ++it) {
        const double mid_lam = std::exp(0.5 * (std::log(lo_lam) + std::log(hi_lam)));
        const double mid_bpp = probe(mid_lam);
        ++res.iterations;
        if (std::fabs(rel_dev(mid_bpp)) < std::fabs(rel_dev(best_bpp))) {
            best_lam = mid_lam;
            best_bpp = mid_bpp;
        }
        if (std::fabs(rel_dev(mid_bpp)) <= tol) return finish(mid_lam, mid_bpp);

        // a monotone response keeps the midpoint between the bracket values
        if (mid_bpp < std::min(lo_bpp, hi_bpp) - 1e-12 ||
            mid_bpp > std::max(lo_bpp, hi_bpp) + 1e-12)
            throw std::runtime_error(
                "match_bitrate: non-monotone or out-of-range rate response inside bracket");

        if ((mid_bpp < target_bpp) == increasing) {
            lo_lam = mid_lam;
            lo_bpp = mid_bpp;
        } else {
            hi_lam = mid_lam;
            hi_bpp = mid_bpp;
        }
    }
    std::ostringstream os;
    os << "match_bitrate: no convergence in " << max_iter << " bisections; best probe lambda="
       << best_lam << " bpp=" << best_bpp;
    throw std::runtime_error(os.str());
}

} // namespace negtune
