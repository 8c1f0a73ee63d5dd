#include "urlab/snapshot.hpp"

#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "urlab/errors.hpp"

namespace urlab::nn {

namespace {

constexpr char kMagic[8] = {'M', 'L', 'P', 'S', 'N', 'A', 'P', '1'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }
void write_u64(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); }

std::uint32_t read_u32(std::istream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    if (!in) throw MissingArtifact("snapshot: truncated stream");
    return v;
}

std::uint64_t read_u64(std::istream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 8);
    if (!in) throw MissingArtifact("snapshot: truncated stream");
    return v;
}

void write_floats(std::ostream& out, const std::vector<float>& v) {
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)));
}

void read_floats(std::istream& in, std::vector<float>& v) {
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)));
    if (!in) throw MissingArtifact("snapshot: truncated parameter block");
}

}  // namespace

void save_mlp(std::ostream& out, const Mlp<float>& net) {
    out.write(kMagic, 8);
    write_u32(out, kVersion);
    const auto sizes = net.layer_sizes();
    write_u32(out, static_cast<std::uint32_t>(sizes.size()));
    for (int s : sizes) write_u32(out, static_cast<std::uint32_t>(s));
    for (const auto& l : net.layers()) {
        const std::uint8_t code = static_cast<std::uint8_t>(l.act);
        out.write(reinterpret_cast<const char*>(&code), 1);
    }
    for (const auto& l : net.layers()) {
        write_floats(out, l.weight);
        write_floats(out, l.bias);
    }
}

Mlp<float> load_mlp(std::istream& in) {
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0) throw MissingArtifact("snapshot: bad magic");
    const std::uint32_t version = read_u32(in);
    if (version != kVersion) throw MissingArtifact("snapshot: unsupported version " + std::to_string(version));
    const std::uint32_t n_sizes = read_u32(in);
    if (n_sizes < 2 || n_sizes > 64) throw MissingArtifact("snapshot: implausible layer count");
    std::vector<int> sizes(n_sizes);
    for (auto& s : sizes) s = static_cast<int>(read_u32(in));
    std::vector<Activation> acts(n_sizes - 1);
    for (auto& a : acts) {
        std::uint8_t code = 0;
        in.read(reinterpret_cast<char*>(&code), 1);
        if (!in || code > 2) throw MissingArtifact("snapshot: bad activation code");
        a = static_cast<Activation>(code);
    }
    Mlp<float> net(sizes, acts, 0);
    for (auto& l : net.layers()) {
        read_floats(in, l.weight);
        read_floats(in, l.bias);
    }
    return net;
}

void save_mlp_file(const std::filesystem::path& path, const Mlp<float>& net) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw MissingArtifact("cannot open for writing: " + path.string());
    save_mlp(out, net);
}

Mlp<float> load_mlp_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingArtifact("cannot open: " + path.string());
    return load_mlp(in);
}

void save_adam(std::ostream& out, const AdamOptimizer<float>& opt) {
    write_u64(out, opt.step_count());
    for (const auto& mo : opt.moments()) {
        write_floats(out, mo.m_weight);
        write_floats(out, mo.v_weight);
        write_floats(out, mo.m_bias);
        write_floats(out, mo.v_bias);
    }
}

void load_adam(std::istream& in, AdamOptimizer<float>& opt) {
    opt.set_step_count(read_u64(in));
    for (auto& mo : opt.moments()) {
        read_floats(in, mo.m_weight);
        read_floats(in, mo.v_weight);
        read_floats(in, mo.m_bias);
        read_floats(in, mo.v_bias);
    }
}

}  // namespace urlab::nn
