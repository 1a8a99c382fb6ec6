#pragma once

#include <string>
#include <vector>

#include "image.hpp"

namespace negtune {

enum class Split { train, validation, test };

const char* split_name(Split s);
Split split_from_name(const std::string& name);

struct CorpusManifest {
    std::string root_path;
    std::vector<std::string> entries; // relative paths, lexicographic
    Split split = Split::train;

    size_t size() const { return entries.size(); }
    std::string entry_path(size_t i) const;
};

// Scans root for decodable PNGs, lexicographically ordered. Undecodable files
// are skipped with a warning on stderr; an empty result is an error.
CorpusManifest load_corpus(const std::string& root, Split split);

ImageBatch load_entry(const CorpusManifest& m, size_t index);

std::string manifest_to_json(const CorpusManifest& m);
CorpusManifest manifest_from_json(const std::string& json_text);

// Digest of the manifest contents, used to stamp calibration outputs.
std::string manifest_digest(const CorpusManifest& m);

} // namespace negtune
