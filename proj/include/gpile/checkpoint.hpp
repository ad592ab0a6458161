#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "gpile/core.hpp"
#include "gpile/errors.hpp"

namespace gpile {

// Uncompressed checkpoint: header {magic "GPILE", version u32, count u64,
// bbox 6xf64} followed by one record of 11 little-endian f32 per primitive
// (mu x3, log-scale x3, quat x4, raw alpha), in list order.

inline constexpr char kCheckpointMagic[5] = {'G', 'P', 'I', 'L', 'E'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

template <typename T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw CorruptContainer("unexpected end of file");
    return v;
}

}  // namespace detail

inline void save_checkpoint(const GaussianSet& set, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw LoadError("save_checkpoint: cannot open " + path);
    out.write(kCheckpointMagic, 5);
    detail::write_pod(out, kCheckpointVersion);
    detail::write_pod(out, static_cast<std::uint64_t>(set.size()));
    const double bbox[6] = {set.bbox.min.x, set.bbox.min.y, set.bbox.min.z,
                            set.bbox.max.x, set.bbox.max.y, set.bbox.max.z};
    out.write(reinterpret_cast<const char*>(bbox), sizeof(bbox));
    for (const GaussianPrimitive& g : set.primitives) {
        const float rec[11] = {
            static_cast<float>(g.mu.x),        static_cast<float>(g.mu.y),
            static_cast<float>(g.mu.z),        static_cast<float>(g.log_scale.x),
            static_cast<float>(g.log_scale.y), static_cast<float>(g.log_scale.z),
            static_cast<float>(g.quat.w),      static_cast<float>(g.quat.x),
            static_cast<float>(g.quat.y),      static_cast<float>(g.quat.z),
            static_cast<float>(g.alpha_raw)};
        out.write(reinterpret_cast<const char*>(rec), sizeof(rec));
    }
    if (!out) throw LoadError("save_checkpoint: write failed for " + path);
}

inline GaussianSet load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("load_checkpoint: cannot open " + path);
    char magic[5];
    in.read(magic, 5);
    if (!in || std::memcmp(magic, kCheckpointMagic, 5) != 0)
        throw CorruptContainer("load_checkpoint: bad magic in " + path);
    const auto version = detail::read_pod<std::uint32_t>(in);
    if (version != kCheckpointVersion)
        throw CorruptContainer("load_checkpoint: unsupported version " +
                               std::to_string(version));
    const auto count = detail::read_pod<std::uint64_t>(in);
    double bbox[6];
    in.read(reinterpret_cast<char*>(bbox), sizeof(bbox));
    if (!in) throw CorruptContainer("load_checkpoint: truncated header");

    GaussianSet set;
    set.bbox = {{bbox[0], bbox[1], bbox[2]}, {bbox[3], bbox[4], bbox[5]}};
    set.primitives.resize(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        float rec[11];
        in.read(reinterpret_cast<char*>(rec), sizeof(rec));
        if (!in) throw CorruptContainer("load_checkpoint: truncated record " +
                                        std::to_string(i));
        GaussianPrimitive& g = set.primitives[i];
        g.mu = {rec[0], rec[1], rec[2]};
        g.log_scale = {rec[3], rec[4], rec[5]};
        g.quat = {rec[6], rec[7], rec[8], rec[9]};
        g.alpha_raw = rec[10];
    }
    return set;
}

// On-disk size of a set in this format.
inline std::uint64_t checkpoint_bytes(std::size_t count) {
    return 5 + 4 + 8 + 6 * 8 + static_cast<std::uint64_t>(count) * 11 * 4;
}

}  // namespace gpile
