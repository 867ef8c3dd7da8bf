#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <vector>

#include "textad/errors.hpp"
#include "textad/nn/tensor.hpp"

namespace textad::nn {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

inline constexpr std::string_view kCheckpointMagic = "TXADCKPT";
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Named tensor as stored in a checkpoint.
struct NamedTensor {
    std::string name;
    Tensor value;
};

struct Checkpoint {
    std::string metadata;  // free-form (JSON) model description
    std::vector<NamedTensor> tensors;
};

namespace detail {
template <typename T>
void put(std::string& out, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
}

template <typename T>
T take(std::string_view bytes, std::size_t& pos) {
    if (pos + sizeof(T) > bytes.size()) throw FormatError("checkpoint truncated");
    T v;
    std::memcpy(&v, bytes.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
}
}  // namespace detail

/// Layout: magic, u32 version, u32 metadata length + bytes, u32 tensor count,
/// then per tensor: u32 name length + bytes, u32 rank (2), u64 dims, f64 values
/// (row-major, little-endian).
inline std::string serialize_checkpoint(const Checkpoint& ck) {
    std::string out(kCheckpointMagic);
    detail::put<std::uint32_t>(out, kCheckpointVersion);
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(ck.metadata.size()));
    out += ck.metadata;
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(ck.tensors.size()));
    for (const auto& t : ck.tensors) {
        detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
        out += t.name;
        detail::put<std::uint32_t>(out, 2);
        detail::put<std::uint64_t>(out, static_cast<std::uint64_t>(t.value.rows()));
        detail::put<std::uint64_t>(out, static_cast<std::uint64_t>(t.value.cols()));
        out.append(reinterpret_cast<const char*>(t.value.data()), sizeof(double) * static_cast<std::size_t>(t.value.size()));
    }
    return out;
}

inline Checkpoint parse_checkpoint(std::string_view bytes) {
    if (bytes.substr(0, kCheckpointMagic.size()) != kCheckpointMagic) throw FormatError("not a checkpoint file");
    std::size_t pos = kCheckpointMagic.size();
    if (detail::take<std::uint32_t>(bytes, pos) != kCheckpointVersion) throw FormatError("unsupported checkpoint version");
    Checkpoint ck;
    const auto meta_len = detail::take<std::uint32_t>(bytes, pos);
    if (pos + meta_len > bytes.size()) throw FormatError("checkpoint truncated");
    ck.metadata = std::string(bytes.substr(pos, meta_len));
    pos += meta_len;
    const auto count = detail::take<std::uint32_t>(bytes, pos);
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto name_len = detail::take<std::uint32_t>(bytes, pos);
        if (pos + name_len > bytes.size()) throw FormatError("checkpoint truncated");
        NamedTensor t;
        t.name = std::string(bytes.substr(pos, name_len));
        pos += name_len;
        if (detail::take<std::uint32_t>(bytes, pos) != 2) throw FormatError("checkpoint tensor rank must be 2");
        const auto rows = detail::take<std::uint64_t>(bytes, pos);
        const auto cols = detail::take<std::uint64_t>(bytes, pos);
        const std::size_t n = rows * cols * sizeof(double);
        if (pos + n > bytes.size()) throw FormatError("checkpoint truncated");
        t.value.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        std::memcpy(t.value.data(), bytes.data() + pos, n);
        pos += n;
        ck.tensors.push_back(std::move(t));
    }
    if (pos != bytes.size()) throw FormatError("trailing bytes after checkpoint");
    return ck;
}

/// Snapshot of every parameter in store order.
inline std::vector<NamedTensor> snapshot(const ParamStore& store) {
    std::vector<NamedTensor> out;
    for (const Parameter* p : store.all()) out.push_back({p->name, p->value});
    return out;
}

/// Copies stored tensors into matching parameters; names and shapes must agree exactly.
inline void restore(ParamStore& store, const std::vector<NamedTensor>& tensors) {
    auto params = store.all();
    if (params.size() != tensors.size()) throw FormatError("checkpoint tensor count differs from the model");
    for (std::size_t i = 0; i < params.size(); ++i) {
        Parameter& p = *params[i];
        const NamedTensor& t = tensors[i];
        if (p.name != t.name || p.value.rows() != t.value.rows() || p.value.cols() != t.value.cols()) {
            throw FormatError("checkpoint tensor '" + t.name + "' does not match parameter '" + p.name + "'");
        }
        p.value = t.value;
    }
}

}  // namespace textad::nn
