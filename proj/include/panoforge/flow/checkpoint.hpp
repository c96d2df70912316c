#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "panoforge/common.hpp"
#include "panoforge/flow/lora.hpp"

// Checkpoint container: flat little-endian binary. Header is a 4-byte
// magic "PFCK", u32 version, u32 layer count; each layer stores
// u32 name length, name bytes, u32 ndim, u32 dims, then float32 data.

namespace panoforge::flow {

struct NamedTensor {
    std::string name;
    std::vector<uint32_t> shape;
    std::vector<double> data;

    size_t numel() const {
        size_t n = 1;
        for (uint32_t d : shape) n *= d;
        return n;
    }
};

namespace detail {

template <typename T>
void write_le(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_le(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const std::vector<NamedTensor>& tensors) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open " + path);
    out.write("PFCK", 4);
    detail::write_le<uint32_t>(out, 1);  // version
    detail::write_le<uint32_t>(out, uint32_t(tensors.size()));
    for (const auto& t : tensors) {
        if (t.numel() != t.data.size()) throw DataError("tensor shape does not match data size");
        detail::write_le<uint32_t>(out, uint32_t(t.name.size()));
        out.write(t.name.data(), std::streamsize(t.name.size()));
        detail::write_le<uint32_t>(out, uint32_t(t.shape.size()));
        for (uint32_t d : t.shape) detail::write_le<uint32_t>(out, d);
        for (double v : t.data) detail::write_le<float>(out, float(v));
    }
    if (!out) throw DataError("failed writing " + path);
}

inline std::vector<NamedTensor> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    char magic[4] = {};
    in.read(magic, 4);
    if (std::memcmp(magic, "PFCK", 4) != 0) throw DataError("bad checkpoint magic in " + path);
    const uint32_t version = detail::read_le<uint32_t>(in);
    if (version != 1) throw DataError("unsupported checkpoint version");
    const uint32_t count = detail::read_le<uint32_t>(in);
    std::vector<NamedTensor> tensors(count);
    for (auto& t : tensors) {
        const uint32_t name_len = detail::read_le<uint32_t>(in);
        t.name.resize(name_len);
        in.read(t.name.data(), name_len);
        const uint32_t ndim = detail::read_le<uint32_t>(in);
        t.shape.resize(ndim);
        for (auto& d : t.shape) d = detail::read_le<uint32_t>(in);
        t.data.resize(t.numel());
        for (auto& v : t.data) v = double(detail::read_le<float>(in));
        if (!in) throw DataError("truncated checkpoint " + path);
    }
    return tensors;
}

inline const NamedTensor* find_tensor(const std::vector<NamedTensor>& ts, const std::string& name) {
    for (const auto& t : ts)
        if (t.name == name) return &t;
    return nullptr;
}

// Folds LoRA tensors ("<layer>.A", "<layer>.B", "<layer>.alpha") into the
// matching base weights: W <- W + (alpha/rank) B A. Tensors without a
// matching adapter pass through unchanged.
inline std::vector<NamedTensor> merge_lora_checkpoint(const std::vector<NamedTensor>& base,
                                                      const std::vector<NamedTensor>& lora) {
    std::vector<NamedTensor> merged = base;
    for (auto& t : merged) {
        const NamedTensor* a = find_tensor(lora, t.name + ".A");
        const NamedTensor* b = find_tensor(lora, t.name + ".B");
        if (!a || !b) continue;
        const NamedTensor* al = find_tensor(lora, t.name + ".alpha");
        if (t.shape.size() != 2 || a->shape.size() != 2 || b->shape.size() != 2)
            throw DataError("LoRA merge expects rank-2 tensors for " + t.name);
        const uint32_t d_out = t.shape[0], d_in = t.shape[1];
        const uint32_t rank = a->shape[0];
        if (a->shape[1] != d_in || b->shape[0] != d_out || b->shape[1] != rank)
            throw DataError("LoRA adapter shapes do not match base weight " + t.name);
        const double alpha = al && !al->data.empty() ? al->data[0] : double(rank);
        const double s = alpha / double(rank);
        for (uint32_t o = 0; o < d_out; ++o)
            for (uint32_t i = 0; i < d_in; ++i) {
                double acc = 0.0;
                for (uint32_t r = 0; r < rank; ++r)
                    acc += b->data[size_t(o) * rank + r] * a->data[size_t(r) * d_in + i];
                t.data[size_t(o) * d_in + i] += s * acc;
            }
    }
    return merged;
}

}  // namespace panoforge::flow
