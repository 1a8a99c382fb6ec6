#pragma once

#include <map>
#include <string>

#include "codec.hpp"

namespace negtune {

// Single-file container with named double arrays, an architecture hash and a
// free-form provenance JSON. Load-then-save is byte stable. Arrays prefixed
// "opt." carry optimizer state and are ignored by the codec loader.
struct Checkpoint {
    static constexpr uint32_t kVersion = 1;

    uint64_t config_hash = 0;
    std::string provenance_json; // loss weights, epochs, seed, ...
    std::map<std::string, Tensor> arrays;

    static Checkpoint from_model(const CodecModel& model, const std::string& provenance);
    void save(const std::string& path) const;
    static Checkpoint load(const std::string& path);

    // Refuses a hash mismatch with the instantiating architecture.
    void restore_into(CodecModel& model) const;
};

} // namespace negtune
