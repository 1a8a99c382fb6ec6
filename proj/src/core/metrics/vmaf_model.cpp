#include "vmaf_model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

using nlohmann::json;

namespace negtune {

const std::array<const char*, kVmafFeatureCount> kVmafFeatureNames = {
    "VMAF_feature_adm2_score",      "VMAF_feature_motion2_score",
    "VMAF_feature_vif_scale0_score", "VMAF_feature_vif_scale1_score",
    "VMAF_feature_vif_scale2_score", "VMAF_feature_vif_scale3_score",
};

namespace {

void parse_libsvm_text(const std::string& text, VmafModel& m) {
    std::istringstream in(text);
    std::string line;
    int total_sv = -1;
    bool in_sv = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (in_sv) {
            std::istringstream ls(line);
            double coef;
            if (!(ls >> coef)) throw std::runtime_error("vmaf model: bad SV line");
            std::array<double, kVmafFeatureCount> sv{};
            std::string tok;
            while (ls >> tok) {
                auto colon = tok.find(':');
                if (colon == std::string::npos) throw std::runtime_error("vmaf model: bad SV token");
                int idx = std::stoi(tok.substr(0, colon));
                if (idx < 1 || idx > kVmafFeatureCount)
                    throw std::runtime_error("vmaf model: SV index out of range");
                sv[idx - 1] = std::stod(tok.substr(colon + 1));
            }
            m.dual_coef.push_back(coef);
            m.support_vectors.push_back(sv);
            continue;
        }
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "svm_type") {
            std::string v;
            ls >> v;
            if (v != "nu_svr") throw std::runtime_error("vmaf model: svm_type must be nu_svr");
        } else if (key == "kernel_type") {
            std::string v;
            ls >> v;
            if (v != "rbf") throw std::runtime_error("vmaf model: kernel_type must be rbf");
        } else if (key == "gamma") {
            ls >> m.svr_gamma;
        } else if (key == "rho") {
            ls >> m.svr_rho;
        } else if (key == "total_sv") {
            ls >> total_sv;
        } else if (key == "nr_class" || key == "nu" || key == "degree" || key == "coef0") {
            // accepted, unused
        } else if (key == "SV") {
            in_sv = true;
        } else {
            throw std::runtime_error("vmaf model: unknown libsvm key " + key);
        }
    }
    if (total_sv >= 0 && static_cast<int>(m.support_vectors.size()) != total_sv)
        throw std::runtime_error("vmaf model: SV count mismatch");
    if (m.support_vectors.empty()) throw std::runtime_error("vmaf model: no support vectors");
}

} // namespace

VmafModel VmafModel::from_json_text(const std::string& text) {
    json j = json::parse(text);
    const json& d = j.at("model_dict");

    if (d.at("model_type").get<std::string>() != "LIBSVMNUSVR")
        throw std::runtime_error("vmaf model: unsupported model_type");
    if (d.at("norm_type").get<std::string>() != "linear_rescale")
        throw std::runtime_error("vmaf model: unsupported norm_type");

    auto names = d.at("feature_names").get<std::vector<std::string>>();
    if (names.size() != kVmafFeatureCount)
        throw std::runtime_error("vmaf model: expected 6 features");
    for (int i = 0; i < kVmafFeatureCount; ++i)
        if (names[i] != kVmafFeatureNames[i])
            throw std::runtime_error("vmaf model: unknown feature name " + names[i]);

    VmafModel m;
    m.slopes = d.at("slopes").get<std::vector<double>>();
    m.intercepts = d.at("intercepts").get<std::vector<double>>();
    if (m.slopes.size() != kVmafFeatureCount + 1 || m.intercepts.size() != kVmafFeatureCount + 1)
        throw std::runtime_error("vmaf model: slopes/intercepts must have 7 entries");

    if (d.contains("score_clip") && !d.at("score_clip").is_null()) {
        auto clip = d.at("score_clip").get<std::vector<double>>();
        if (clip.size() != 2) throw std::runtime_error("vmaf model: bad score_clip");
        m.score_clip_lo = clip[0];
        m.score_clip_hi = clip[1];
    }

    if (d.contains("feature_opts_dicts") && !d.at("feature_opts_dicts").is_null()) {
        const json& opts = d.at("feature_opts_dicts");
        if (opts.size() != kVmafFeatureCount)
            throw std::runtime_error("vmaf model: feature_opts_dicts size mismatch");
        for (const auto& o : opts) {
            if (o.contains("vif_enhn_gain_limit")) {
                const double v = o.at("vif_enhn_gain_limit").get<double>();
                if (v < 1.0) throw std::runtime_error("vmaf model: enhancement gain limit must be >= 1");
                m.vif_egl = v;
            }
            if (o.contains("adm_enhn_gain_limit")) {
                const double v = o.at("adm_enhn_gain_limit").get<double>();
                if (v < 1.0) throw std::runtime_error("vmaf model: enhancement gain limit must be >= 1");
                m.adm_egl = v;
            }
        }
    }

    parse_libsvm_text(d.at("model").get<std::string>(), m);
    return m;
}

VmafModel VmafModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("vmaf model: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

std::string VmafModel::to_json_text() const {
    std::ostringstream svm;
    svm.precision(17);
    svm << "svm_type nu_svr\nkernel_type rbf\ngamma " << svr_gamma << "\nrho " << svr_rho
        << "\ntotal_sv " << support_vectors.size() << "\nSV\n";
    for (size_t i = 0; i < support_vectors.size(); ++i) {
        svm << dual_coef[i];
        for (int k = 0; k < kVmafFeatureCount; ++k) svm << " " << (k + 1) << ":" << support_vectors[i][k];
        svm << "\n";
    }

    json opts = json::array();
    for (int i = 0; i < kVmafFeatureCount; ++i) {
        json o = json::object();
        std::string n = kVmafFeatureNames[i];
        if (n.find("vif") != std::string::npos) o["vif_enhn_gain_limit"] = vif_egl;
        if (n.find("adm") != std::string::npos) o["adm_enhn_gain_limit"] = adm_egl;
        opts.push_back(o);
    }

    json d;
    d["model_type"] = "LIBSVMNUSVR";
    d["norm_type"] = "linear_rescale";
    d["feature_names"] = std::vector<std::string>(kVmafFeatureNames.begin(), kVmafFeatureNames.end());
    d["slopes"] = slopes;
    d["intercepts"] = intercepts;
    d["score_clip"] = std::vector<double>{score_clip_lo, score_clip_hi};
    d["feature_opts_dicts"] = opts;
    d["model"] = svm.str();
    json j;
    j["model_dict"] = d;
    return j.dump(2);
}

double VmafModel::predict_raw(const std::array<double, kVmafFeatureCount>& features) const {
    std::array<double, kVmafFeatureCount> x{};
    for (int i = 0; i < kVmafFeatureCount; ++i)
        x[i] = slopes[i + 1] * features[i] + intercepts[i + 1];
    double pred = -svr_rho;
    for (size_t j = 0; j < support_vectors.size(); ++j) {
        double dist_sq = 0.0;
        for (int i = 0; i < kVmafFeatureCount; ++i) {
            const double diff = x[i] - support_vectors[j][i];
            dist_sq += diff * diff;
        }
        pred += dual_coef[j] * std::exp(-svr_gamma * dist_sq);
    }
    return (pred - intercepts[0]) / slopes[0];
}

ad::Var svr_fuse_g(const std::array<ad::Var, kVmafFeatureCount>& features, const VmafModel& model) {
    std::array<double, kVmafFeatureCount> raw{};
    for (int i = 0; i < kVmafFeatureCount; ++i) {
        if (!features[i].value().is_scalar())
            throw std::invalid_argument("svr_fuse: features must be scalars");
        raw[i] = features[i].item();
    }
    const double unclipped = model.predict_raw(raw);
    const double score =
        std::min(model.score_clip_hi, std::max(model.score_clip_lo, unclipped));

    std::vector<ad::Var> parents(features.begin(), features.end());
    const bool clipped = unclipped < model.score_clip_lo || unclipped > model.score_clip_hi;
    // model copied into the closure so the tape never outlives its coefficients
    return ad::make_op(Tensor::scalar(score), parents, [raw, clipped, model](ad::Node& n) {
        if (clipped) return; // pinned scores have zero gradient
        std::array<double, kVmafFeatureCount> x{};
        for (int i = 0; i < kVmafFeatureCount; ++i)
            x[i] = model.slopes[i + 1] * raw[i] + model.intercepts[i + 1];
        std::array<double, kVmafFeatureCount> dpred{};
        for (size_t j = 0; j < model.support_vectors.size(); ++j) {
            double dist_sq = 0.0;
            for (int i = 0; i < kVmafFeatureCount; ++i) {
                const double diff = x[i] - model.support_vectors[j][i];
                dist_sq += diff * diff;
            }
            const double kern = model.dual_coef[j] * std::exp(-model.svr_gamma * dist_sq);
            for (int i = 0; i < kVmafFeatureCount; ++i)
                dpred[i] += kern * -2.0 * model.svr_gamma * (x[i] - model.support_vectors[j][i]);
        }
        const double g = n.grad.data[0];
        for (int i = 0; i < kVmafFeatureCount; ++i)
            if (n.parents[i]->requires_grad)
                n.parents[i]->grad_ref().data[0] +=
                    g * dpred[i] * model.slopes[i + 1] / model.slopes[0];
    });
}

} // namespace negtune
