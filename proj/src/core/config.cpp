#include "config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace negtune {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    size_t b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
    try {
        size_t used = 0;
        double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument("");
        return d;
    } catch (...) {
        throw ConfigError("config: bad number for " + key + ": '" + v + "'");
    }
}

long to_long(const std::string& key, const std::string& v) {
    try {
        size_t used = 0;
        long l = std::stol(v, &used);
        if (used != v.size()) throw std::invalid_argument("");
        return l;
    } catch (...) {
        throw ConfigError("config: bad integer for " + key + ": '" + v + "'");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config: bad boolean for " + key + ": '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

} // namespace

void RunConfig::set_key(const std::string& dotted_key, const std::string& value) {
    const std::string& k = dotted_key;
    const std::string v = trim(value);

    if (k == "corpus.train_root") train_root = v;
    else if (k == "corpus.val_root") val_root = v;
    else if (k == "corpus.test_root") test_root = v;
    else if (k == "codec.base_channels") codec.base_channels = static_cast<int>(to_long(k, v));
    else if (k == "codec.latent_channels") codec.latent_channels = static_cast<int>(to_long(k, v));
    else if (k == "codec.hyper_channels") codec.hyper_channels = static_cast<int>(to_long(k, v));
    else if (k == "codec.kernel") codec.kernel = static_cast<int>(to_long(k, v));
    else if (k == "codec.seed") codec.seed = static_cast<uint64_t>(to_long(k, v));
    else if (k == "codec.checkpoint") checkpoint = v;
    else if (k == "codec.decoder_checkpoint") decoder_checkpoint = v;
    else if (k == "metric.vmaf_model") vmaf_model_path = v;
    else if (k == "train.epochs") train.epochs = static_cast<int>(to_long(k, v));
    else if (k == "train.learning_rate") train.learning_rate = to_double(k, v);
    else if (k == "train.crop") train.crop = static_cast<int>(to_long(k, v));
    else if (k == "train.batch_size") train.batch_size = static_cast<int>(to_long(k, v));
    else if (k == "train.seed") train.seed = static_cast<uint64_t>(to_long(k, v));
    else if (k == "train.grad_clip_norm") train.grad_clip_norm = to_double(k, v);
    else if (k == "loss.alpha") train.weights.alpha = to_double(k, v);
    else if (k == "loss.beta") train.weights.beta = to_double(k, v);
    else if (k == "loss.gamma") train.weights.gamma = to_double(k, v);
    else if (k == "loss.lambda") train.weights.lambda = to_double(k, v);
    else if (k == "loss.beta_prime") train.scaling.beta_prime = to_double(k, v);
    else if (k == "loss.gamma_prime") train.scaling.gamma_prime = to_double(k, v);
    else if (k == "loss.scaling_file") scaling_file = v;
    else if (k == "freeze.mode") {
        FreezeSpec parsed = FreezeSpec::parse(v == "single_decoder_block"
                                                  ? v + ":" + std::to_string(train.freeze.block_index)
                                                  : v);
        train.freeze.mode = parsed.mode;
        if (parsed.mode == FreezeMode::single_decoder_block && v.find(':') != std::string::npos)
            train.freeze.block_index = parsed.block_index;
    } else if (k == "freeze.block_index") train.freeze.block_index = static_cast<int>(to_long(k, v));
    else if (k == "ratematch.enabled") ratematch_enabled = to_bool(k, v);
    else if (k == "ratematch.tolerance") ratematch_tolerance = to_double(k, v);
    else if (k == "ratematch.max_iter") ratematch_max_iter = static_cast<int>(to_long(k, v));
    else if (k == "ratematch.probe_epochs") ratematch_probe_epochs = static_cast<int>(to_long(k, v));
    else if (k == "probe.attacks") probe_attacks = split_list(v);
    else if (k == "probe.strengths") {
        probe_strengths.clear();
        for (const auto& s : split_list(v)) probe_strengths.push_back(to_double(k, s));
    } else if (k == "probe.unsharp_radius") probe_unsharp_radius = to_double(k, v);
    else if (k == "probe.checkerboard_period") probe_checkerboard_period = static_cast<int>(to_long(k, v));
    else if (k == "probe.hline_spacing") probe_hline_spacing = static_cast<int>(to_long(k, v));
    else if (k == "output.dir") output_dir = v;
    else throw ConfigError("config: unknown key '" + k + "'");
}

RunConfig RunConfig::parse_text(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config: bad section header at line " + std::to_string(lineno));
            section = line.substr(1, line.size() - 2);
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: expected key = value at line " + std::to_string(lineno));
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (section.empty()) throw ConfigError("config: key outside any section: " + key);
        cfg.set_key(section + "." + key, value);
    }

    // the output root is the only environment knob
    if (const char* root = std::getenv("NEGTUNE_OUTPUT_ROOT")) {
        if (!cfg.output_dir.empty() && cfg.output_dir.front() != '/')
            cfg.output_dir = std::string(root) + "/" + cfg.output_dir;
    }
    return cfg;
}

RunConfig RunConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_text(ss.str());
}

std::string RunConfig::resolved_text() const {
    std::ostringstream os;
    os.precision(17);
    os << "[corpus]\n"
       << "train_root = " << train_root << "\n"
       << "val_root = " << val_root << "\n"
       << "test_root = " << test_root << "\n\n";
    os << "[codec]\n"
       << "base_channels = " << codec.base_channels << "\n"
       << "latent_channels = " << codec.latent_channels << "\n"
       << "hyper_channels = " << codec.hyper_channels << "\n"
       << "kernel = " << codec.kernel << "\n"
       << "seed = " << codec.seed << "\n"
       << "checkpoint = " << checkpoint << "\n"
       << "decoder_checkpoint = " << decoder_checkpoint << "\n\n";
    os << "[metric]\n"
       << "vmaf_model = " << vmaf_model_path << "\n\n";
    os << "[train]\n"
       << "epochs = " << train.epochs << "\n"
       << "learning_rate = " << train.learning_rate << "\n"
       << "crop = " << train.crop << "\n"
       << "batch_size = " << train.batch_size << "\n"
       << "seed = " << train.seed << "\n"
       << "grad_clip_norm = " << train.grad_clip_norm << "\n\n";
    os << "[loss]\n"
       << "alpha = " << train.weights.alpha << "\n"
       << "beta = " << train.weights.beta << "\n"
       << "gamma = " << train.weights.gamma << "\n"
       << "lambda = " << train.weights.lambda << "\n"
       << "beta_prime = " << train.scaling.beta_prime << "\n"
       << "gamma_prime = " << train.scaling.gamma_prime << "\n"
       << "scaling_file = " << scaling_file << "\n\n";
    os << "[freeze]\n"
       << "mode = " << (train.freeze.mode == FreezeMode::single_decoder_block
                            ? "single_decoder_block"
                            : train.freeze.to_string())
       << "\n"
       << "block_index = " << train.freeze.block_index << "\n\n";
    os << "[ratematch]\n"
       << "enabled = " << (ratematch_enabled ? "true" : "false") << "\n"
       << "tolerance = " << ratematch_tolerance << "\n"
       << "max_iter = " << ratematch_max_iter << "\n"
       << "probe_epochs = " << ratematch_probe_epochs << "\n\n";
    os << "[probe]\n"
       << "attacks = ";
    for (size_t i = 0; i < probe_attacks.size(); ++i)
        os << (i ? "," : "") << probe_attacks[i];
    os << "\nstrengths = ";
    for (size_t i = 0; i < probe_strengths.size(); ++i)
        os << (i ? "," : "") << probe_strengths[i];
    os << "\nunsharp_radius = " << probe_unsharp_radius << "\n"
       << "checkerboard_period = " << probe_checkerboard_period << "\n"
       << "hline_spacing = " << probe_hline_spacing << "\n\n";
    os << "[output]\n"
       << "dir = " << output_dir << "\n";
    return os.str();
}

void RunConfig::validate() const {
    try {
        train.weights.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (vmaf_model_path.empty()) throw ConfigError("config: metric.vmaf_model is required");
    if (output_dir.empty()) throw ConfigError("config: output.dir is required");
}

} // namespace negtune
