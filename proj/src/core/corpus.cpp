#include "corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

#include <json.hpp>

#include "png_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace negtune {

const char* split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::validation: return "validation";
        case Split::test: return "test";
    }
    return "?";
}

Split split_from_name(const std::string& name) {
    if (name == "train") return Split::train;
    if (name == "validation" || name == "val") return Split::validation;
    if (name == "test") return Split::test;
    throw std::invalid_argument("unknown split: " + name);
}

std::string CorpusManifest::entry_path(size_t i) const {
    return (fs::path(root_path) / entries.at(i)).string();
}

CorpusManifest load_corpus(const std::string& root, Split split) {
    if (!fs::is_directory(root))
        throw std::invalid_argument("corpus root does not exist: " + root);

    std::vector<std::string> candidates;
    for (const auto& e : fs::directory_iterator(root)) {
        if (!e.is_regular_file()) continue;
        if (e.path().extension() == ".png") candidates.push_back(e.path().filename().string());
    }
    std::sort(candidates.begin(), candidates.end());

    CorpusManifest m;
    m.root_path = root;
    m.split = split;
    for (const auto& name : candidates) {
        try {
            read_png((fs::path(root) / name).string());
            m.entries.push_back(name);
        } catch (const std::exception& ex) {
            std::fprintf(stderr, "warning: skipping undecodable %s: %s\n", name.c_str(), ex.what());
        }
    }
    if (m.entries.empty()) throw std::runtime_error("empty corpus: " + root);
    return m;
}

ImageBatch load_entry(const CorpusManifest& m, size_t index) {
    return load_image(m.entry_path(index));
}

std::string manifest_to_json(const CorpusManifest& m) {
    json j;
    j["root"] = m.root_path;
    j["split"] = split_name(m.split);
    j["entries"] = m.entries;
    return j.dump(2);
}

CorpusManifest manifest_from_json(const std::string& json_text) {
    json j = json::parse(json_text);
    CorpusManifest m;
    m.root_path = j.at("root").get<std::string>();
    m.split = split_from_name(j.at("split").get<std::string>());
    m.entries = j.at("entries").get<std::vector<std::string>>();
    if (m.entries.empty()) throw std::runtime_error("empty corpus manifest");
    return m;
}

std::string manifest_digest(const CorpusManifest& m) {
    // FNV-1a over the ordered entry names
    uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        h ^= '\n';
        h *= 1099511628211ULL;
    };
    for (const auto& e : m.entries) mix(e);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace negtune
