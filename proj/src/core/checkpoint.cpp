#include "checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace negtune {

namespace {

constexpr char kMagic[8] = {'N', 'T', 'C', 'K', 'P', 'T', '0', '1'};

void write_u32(std::ostream& out, uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }
void write_u64(std::ostream& out, uint64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); }
uint32_t read_u32(std::istream& in) {
    uint32_t v;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
uint64_t read_u64(std::istream& in) {
    uint64_t v;
    in.read(reinterpret_cast<char*>(&v), 8);
    return v;
}
void write_str(std::ostream& out, const std::string& s) {
    write_u32(out, static_cast<uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}
std::string read_str(std::istream& in) {
    uint32_t len = read_u32(in);
    std::string s(len, '\0');
    in.read(s.data(), len);
    return s;
}

} // namespace

Checkpoint Checkpoint::from_model(const CodecModel& model, const std::string& provenance) {
    Checkpoint ck;
    ck.config_hash = model.config_hash();
    ck.provenance_json = provenance;
    for (const auto& name : model.param_names()) ck.arrays[name] = model.param(name).value();
    return ck;
}

void Checkpoint::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("checkpoint: cannot write " + path);
    out.write(kMagic, sizeof kMagic);
    write_u32(out, kVersion);
    write_u64(out, config_hash);
    write_str(out, provenance_json);
    write_u32(out, static_cast<uint32_t>(arrays.size()));
    for (const auto& [name, t] : arrays) { // std::map keeps a stable byte order
        write_str(out, name);
        write_u32(out, static_cast<uint32_t>(t.n));
        write_u32(out, static_cast<uint32_t>(t.c));
        write_u32(out, static_cast<uint32_t>(t.h));
        write_u32(out, static_cast<uint32_t>(t.w));
        out.write(reinterpret_cast<const char*>(t.data.data()),
                  static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    }
    if (!out) throw std::runtime_error("checkpoint: short write to " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("checkpoint: bad magic in " + path);
    uint32_t version = read_u32(in);
    if (version != kVersion)
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
    Checkpoint ck;
    ck.config_hash = read_u64(in);
    ck.provenance_json = read_str(in);
    uint32_t count = read_u32(in);
    for (uint32_t i = 0; i < count; ++i) {
        std::string name = read_str(in);
        int n = static_cast<int>(read_u32(in));
        int c = static_cast<int>(read_u32(in));
        int h = static_cast<int>(read_u32(in));
        int w = static_cast<int>(read_u32(in));
        Tensor t(n, c, h, w);
        in.read(reinterpret_cast<char*>(t.data.data()),
                static_cast<std::streamsize>(t.data.size() * sizeof(double)));
        ck.arrays.emplace(std::move(name), std::move(t));
    }
    if (!in) throw std::runtime_error("checkpoint: truncated file " + path);
    return ck;
}

void Checkpoint::restore_into(CodecModel& model) const {
    if (config_hash != model.config_hash())
        throw std::runtime_error("checkpoint: architecture hash mismatch");
    for (const auto& name : model.param_names()) {
        auto it = arrays.find(name);
        if (it == arrays.end()) throw std::runtime_error("checkpoint: missing array " + name);
        ad::Var& p = model.param(name);
        if (!p.value().same_shape(it->second))
            throw std::runtime_error("checkpoint: shape mismatch for " + name);
        p.mutable_value() = it->second;
    }
}

} // namespace negtune
