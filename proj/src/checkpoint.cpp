#include "fignet/model/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "fignet/common.hpp"

namespace fignet {

namespace {

constexpr char kMagic[8] = {'F', 'N', 'C', 'K', '0', '0', '0', '1'};

void put_u64(std::ostream& out, std::uint64_t v) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(buf, 8);
}

std::uint64_t get_u64(std::istream& in, const std::string& path) {
    char buf[8];
    if (!in.read(buf, 8)) throw LoadError("truncated checkpoint: " + path);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
    return v;
}

}  // namespace

const nn::MatF& Checkpoint::tensor(const std::string& name) const {
    const auto it = tensors.find(name);
    if (it == tensors.end()) throw LoadError("checkpoint is missing tensor: " + name);
    return it->second;
}

void save_checkpoint(const std::string& path, const std::string& header_json,
                     const nn::ParamRefs<float>& params) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw LoadError("cannot open for writing: " + path);
    out.write(kMagic, sizeof(kMagic));
    put_u64(out, header_json.size());
    out.write(header_json.data(), static_cast<std::streamsize>(header_json.size()));
    put_u64(out, params.size());
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (const auto* p : params) {
        put_u64(out, p->name.size());
        out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
        put_u64(out, static_cast<std::uint64_t>(p->w.rows()));
        put_u64(out, static_cast<std::uint64_t>(p->w.cols()));
        const auto bytes = static_cast<std::size_t>(p->w.size()) * sizeof(float);
        out.write(reinterpret_cast<const char*>(p->w.data()), static_cast<std::streamsize>(bytes));
        hash = fnv1a64(p->w.data(), bytes, hash);
    }
    put_u64(out, hash);
    if (!out) throw LoadError("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("cannot open: " + path);
    char magic[8];
    if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
        throw LoadError("not a checkpoint file: " + path);
    Checkpoint ckpt;
    const auto header_len = get_u64(in, path);
    ckpt.header_json.resize(header_len);
    if (!in.read(ckpt.header_json.data(), static_cast<std::streamsize>(header_len)))
        throw LoadError("truncated checkpoint header: " + path);
    const auto count = get_u64(in, path);
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto name_len = get_u64(in, path);
        std::string name(name_len, '\0');
        if (!in.read(name.data(), static_cast<std::streamsize>(name_len)))
            throw LoadError("truncated tensor name in: " + path);
        const auto rows = get_u64(in, path);
        const auto cols = get_u64(in, path);
        nn::MatF m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        const auto bytes = static_cast<std::size_t>(rows) * cols * sizeof(float);
        if (!in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(bytes)))
            throw LoadError("truncated tensor data for '" + name + "' in: " + path);
        hash = fnv1a64(m.data(), bytes, hash);
        ckpt.tensors.emplace(std::move(name), std::move(m));
    }
    if (get_u64(in, path) != hash) throw LoadError("checkpoint hash mismatch: " + path);
    return ckpt;
}

void apply_checkpoint(const Checkpoint& ckpt, const nn::ParamRefs<float>& params) {
    for (auto* p : params) {
        const nn::MatF& src = ckpt.tensor(p->name);
        if (src.rows() != p->w.rows() || src.cols() != p->w.cols())
            throw LoadError("tensor '" + p->name + "' has shape " + std::to_string(src.rows()) + "x" +
                            std::to_string(src.cols()) + ", expected " + std::to_string(p->w.rows()) +
                            "x" + std::to_string(p->w.cols()));
        p->w = src;
    }
}

}  // namespace fignet
