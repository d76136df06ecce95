#include "inknet/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace inknet::tensornet {

namespace {

constexpr char kMagic[8] = {'S', 'S', 'M', 'P', 'N', 'E', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in, const std::string& field) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        throw ConfigError("checkpoint: truncated at " + field);
    return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 |
           std::uint32_t(b[3]) << 24;
}

std::string get_bytes(std::istream& in, std::size_t n, const std::string& field) {
    std::string s(n, '\0');
    if (!in.read(s.data(), std::streamsize(n)))
        throw ConfigError("checkpoint: truncated at " + field);
    return s;
}

}  // namespace

void save_checkpoint(const CheckpointData& ckpt, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open " + path + " for writing");
    out.write(kMagic, 8);
    put_u32(out, kVersion);

    std::string manifest;
    for (const auto& [k, v] : ckpt.manifest) {
        if (v.find('\n') != std::string::npos)
            throw ConfigError("checkpoint: manifest value for " + k + " contains newline");
        manifest += k;
        manifest += '=';
        manifest += v;
        manifest += '\n';
    }
    put_u32(out, std::uint32_t(manifest.size()));
    out.write(manifest.data(), std::streamsize(manifest.size()));

    put_u32(out, std::uint32_t(ckpt.tensors.size()));
    for (const auto& [name, t] : ckpt.tensors) {
        put_u32(out, std::uint32_t(name.size()));
        out.write(name.data(), std::streamsize(name.size()));
        put_u32(out, std::uint32_t(t.c));
        put_u32(out, std::uint32_t(t.h));
        put_u32(out, std::uint32_t(t.w));
        out.write(reinterpret_cast<const char*>(t.v.data()),
                  std::streamsize(t.v.size() * sizeof(float)));
    }
    if (!out) throw ConfigError("checkpoint: write failed for " + path);
}

CheckpointData load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path);
    char magic[8];
    if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
        throw ConfigError("checkpoint: bad magic in " + path);
    const std::uint32_t version = get_u32(in, "version");
    if (version != kVersion)
        throw ConfigError("checkpoint: unsupported version " + std::to_string(version));

    CheckpointData ckpt;
    const std::uint32_t mlen = get_u32(in, "manifest length");
    const std::string manifest = get_bytes(in, mlen, "manifest");
    std::size_t pos = 0;
    while (pos < manifest.size()) {
        const std::size_t nl = manifest.find('\n', pos);
        const std::string line = manifest.substr(pos, nl - pos);
        pos = nl == std::string::npos ? manifest.size() : nl + 1;
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("checkpoint: bad manifest line: " + line);
        ckpt.manifest[line.substr(0, eq)] = line.substr(eq + 1);
    }

    const std::uint32_t count = get_u32(in, "tensor count");
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t nlen = get_u32(in, "tensor name length");
        const std::string name = get_bytes(in, nlen, "tensor name");
        const int c = int(get_u32(in, name + ".c"));
        const int h = int(get_u32(in, name + ".h"));
        const int w = int(get_u32(in, name + ".w"));
        Tensor<float> t(c, h, w);
        if (!in.read(reinterpret_cast<char*>(t.v.data()),
                     std::streamsize(t.v.size() * sizeof(float))))
            throw ConfigError("checkpoint: truncated at " + name + " values");
        ckpt.tensors.emplace_back(name, std::move(t));
    }
    return ckpt;
}

}  // namespace inknet::tensornet
