#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <lzma.h>

#include "gpile/checkpoint.hpp"
#include "gpile/core.hpp"
#include "gpile/errors.hpp"
#include "gpile/morton.hpp"
#include "gpile/parallel.hpp"
#include "gpile/quant.hpp"

namespace gpile {

// Compressed container layout (all integers little-endian):
//
//   offset  size  field
//   0       5     magic "GPILC"
//   5       4     version u32 (= 1)
//   9       1     LZMA preset level u8
//   10      5     bit widths u8 x5: pos, opacity, scale, quat, morton
//   15      8     primitive count u64
//   23      48    bbox, 6 x f64 (min.xyz then max.xyz)
//   71      48    log-scale range, 6 x f64 (min.xyz then max.xyz)
//   119     80    stream table, 4 x {raw_size u64, comp_size u64, crc32 u32}
//   199     ...   payloads in table order
//
// Streams hold Morton-sorted, per-attribute quantized integers, delta-coded
// against the previous record, zig-zag mapped, packed at ceil(bits/8) bytes
// per value, and compressed as legacy LZMA ("alone") streams. Stream order:
// positions, opacities, log-scales, quaternions. CRC32 covers the
// compressed payload.

inline constexpr char kContainerMagic[5] = {'G', 'P', 'I', 'L', 'C'};
inline constexpr std::uint32_t kContainerVersion = 1;
inline constexpr std::size_t kContainerHeaderBytes = 199;

struct CompressedContainer {
    std::uint32_t version = kContainerVersion;
    std::uint8_t level = 6;
    QuantSpec spec;
    std::uint64_t count = 0;
    Bounds bbox;
    Vec3 scale_min, scale_max;

    struct Stream {
        std::uint64_t raw_size = 0;
        std::uint32_t crc = 0;
        std::vector<std::uint8_t> payload;
    };
    Stream streams[4];

    std::uint64_t total_bytes() const {
        std::uint64_t total = kContainerHeaderBytes;
        for (const Stream& s : streams) total += s.payload.size();
        return total;
    }
};

namespace detail {

inline std::vector<std::uint8_t> lzma_compress(const std::vector<std::uint8_t>& raw,
                                               std::uint8_t level, const char* stream_name) {
    lzma_options_lzma opts;
    if (lzma_lzma_preset(&opts, level))
        throw CorruptContainer(std::string("lzma: bad preset for stream ") + stream_name);
    lzma_stream strm = LZMA_STREAM_INIT;
    if (lzma_alone_encoder(&strm, &opts) != LZMA_OK)
        throw CorruptContainer(std::string("lzma: encoder init failed for stream ") +
                               stream_name);
    std::vector<std::uint8_t> out;
    out.resize(raw.size() / 2 + 256);
    strm.next_in = raw.data();
    strm.avail_in = raw.size();
    strm.next_out = out.data();
    strm.avail_out = out.size();
    lzma_ret ret;
    while ((ret = lzma_code(&strm, LZMA_FINISH)) != LZMA_STREAM_END) {
        if (ret != LZMA_OK) {
            lzma_end(&strm);
            throw CorruptContainer(std::string("lzma: compression failed for stream ") +
                                   stream_name);
        }
        if (strm.avail_out == 0) {
            const std::size_t used = out.size();
            out.resize(out.size() * 2);
            strm.next_out = out.data() + used;
            strm.avail_out = out.size() - used;
        }
    }
    out.resize(out.size() - strm.avail_out);
    lzma_end(&strm);
    return out;
}

inline std::vector<std::uint8_t> lzma_decompress(const std::vector<std::uint8_t>& comp,
                                                 std::uint64_t raw_size,
                                                 const char* stream_name) {
    lzma_stream strm = LZMA_STREAM_INIT;
    if (lzma_alone_decoder(&strm, UINT64_MAX) != LZMA_OK)
        throw CorruptContainer(std::string("lzma: decoder init failed for stream ") +
                               stream_name);
    // One scratch byte past the declared size detects oversized streams.
    std::vector<std::uint8_t> out(raw_size + 1);
    strm.next_in = comp.data();
    strm.avail_in = comp.size();
    strm.next_out = out.data();
    strm.avail_out = out.size();
    lzma_ret ret;
    do {
        ret = lzma_code(&strm, LZMA_FINISH);
        if (ret != LZMA_OK && ret != LZMA_STREAM_END) {
            lzma_end(&strm);
            throw CorruptContainer(std::string("lzma: decompression failed for stream ") +
                                   stream_name);
        }
    } while (ret != LZMA_STREAM_END && strm.avail_out > 0);
    const std::size_t produced = out.size() - strm.avail_out;
    lzma_end(&strm);
    if (ret != LZMA_STREAM_END || produced != raw_size)
        throw CorruptContainer(std::string("lzma: size mismatch for stream ") + stream_name);
    out.resize(raw_size);
    return out;
}

inline std::uint32_t crc32(const std::vector<std::uint8_t>& bytes) {
    return lzma_crc32(bytes.data(), bytes.size(), 0);
}

// Delta + zig-zag packing of b-bit values at ceil(b/8) bytes each.
inline std::vector<std::uint8_t> pack_deltas(const std::vector<std::uint32_t>& values,
                                             std::size_t components, int bits) {
    const int width = (bits + 7) / 8;
    const std::uint64_t modulus = std::uint64_t{1} << bits;
    const std::int64_t half = static_cast<std::int64_t>(modulus >> 1);
    std::vector<std::uint8_t> out;
    out.reserve(values.size() * width);
    std::vector<std::uint32_t> prev(components, 0);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const std::size_t c = i % components;
        std::int64_t s = static_cast<std::int64_t>(values[i]) -
                         static_cast<std::int64_t>(prev[c]);
        if (s < -half) s += static_cast<std::int64_t>(modulus);
        if (s >= half) s -= static_cast<std::int64_t>(modulus);
        const auto zz = static_cast<std::uint64_t>((s << 1) ^ (s >> 63));
        for (int byte = 0; byte < width; ++byte)
            out.push_back(static_cast<std::uint8_t>((zz >> (8 * byte)) & 0xff));
        prev[c] = values[i];
    }
    return out;
}

inline std::vector<std::uint32_t> unpack_deltas(const std::vector<std::uint8_t>& bytes,
                                                std::size_t count, std::size_t components,
                                                int bits, const char* stream_name) {
    const int width = (bits + 7) / 8;
    if (bytes.size() != count * components * width)
        throw CorruptContainer(std::string("container: stream size mismatch for ") +
                               stream_name);
    const std::uint64_t modulus = std::uint64_t{1} << bits;
    std::vector<std::uint32_t> values(count * components);
    std::vector<std::uint32_t> prev(components, 0);
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::uint64_t zz = 0;
        for (int byte = 0; byte < width; ++byte)
            zz |= static_cast<std::uint64_t>(bytes[i * width + byte]) << (8 * byte);
        if (zz >= modulus)
            throw CorruptContainer(std::string("container: out-of-range delta in ") +
                                   stream_name);
        const auto s = static_cast<std::int64_t>((zz >> 1) ^ (~(zz & 1) + 1));
        const std::size_t c = i % components;
        const std::uint64_t cur =
            (static_cast<std::uint64_t>(prev[c]) + static_cast<std::uint64_t>(s)) &
            (modulus - 1);
        values[i] = static_cast<std::uint32_t>(cur);
        prev[c] = values[i];
    }
    return values;
}

}  // namespace detail

inline CompressedContainer encode(const GaussianSet& set, const QuantSpec& spec = {},
                                  std::uint8_t level = 6) {
    spec.validate();
    const auto perm = morton_sort(set, spec.morton_bits);
    const GaussianSet sorted = apply_permutation(set, perm);
    const QuantizedSet q = quantize(sorted, spec);

    CompressedContainer c;
    c.level = level;
    c.spec = spec;
    c.count = q.count();
    c.bbox = q.bbox;
    c.scale_min = q.scale_min;
    c.scale_max = q.scale_max;

    struct StreamPlan {
        const std::vector<std::uint32_t>* values;
        std::size_t components;
        int bits;
        const char* name;
    };
    const StreamPlan plans[4] = {{&q.positions, 3, spec.pos_bits, "positions"},
                                 {&q.opacities, 1, spec.opacity_bits, "opacities"},
                                 {&q.log_scales, 3, spec.scale_bits, "log-scales"},
                                 {&q.quats, 4, spec.quat_bits, "quaternions"}};
    parallel_for(0, 4, [&](std::size_t s) {
        const auto raw = detail::pack_deltas(*plans[s].values, plans[s].components,
                                             plans[s].bits);
        c.streams[s].raw_size = raw.size();
        c.streams[s].payload = detail::lzma_compress(raw, level, plans[s].name);
        c.streams[s].crc = detail::crc32(c.streams[s].payload);
    });
    return c;
}

inline GaussianSet decode(const CompressedContainer& c) {
    QuantizedSet q;
    q.spec = c.spec;
    q.bbox = c.bbox;
    q.scale_min = c.scale_min;
    q.scale_max = c.scale_max;

    struct StreamPlan {
        std::vector<std::uint32_t>* values;
        std::size_t components;
        int bits;
        const char* name;
    };
    StreamPlan plans[4] = {{&q.positions, 3, c.spec.pos_bits, "positions"},
                           {&q.opacities, 1, c.spec.opacity_bits, "opacities"},
                           {&q.log_scales, 3, c.spec.scale_bits, "log-scales"},
                           {&q.quats, 4, c.spec.quat_bits, "quaternions"}};
    parallel_for(0, 4, [&](std::size_t s) {
        if (detail::crc32(c.streams[s].payload) != c.streams[s].crc)
            throw CorruptContainer(std::string("container: CRC mismatch in ") + plans[s].name);
        const auto raw = detail::lzma_decompress(c.streams[s].payload, c.streams[s].raw_size,
                                                 plans[s].name);
        *plans[s].values = detail::unpack_deltas(raw, c.count, plans[s].components,
                                                 plans[s].bits, plans[s].name);
    });
    return dequantize(q);
}

inline void save_container(const CompressedContainer& c, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw LoadError("save_container: cannot open " + path);
    out.write(kContainerMagic, 5);
    detail::write_pod(out, c.version);
    detail::write_pod(out, c.level);
    const std::uint8_t bits[5] = {
        static_cast<std::uint8_t>(c.spec.pos_bits),
        static_cast<std::uint8_t>(c.spec.opacity_bits),
        static_cast<std::uint8_t>(c.spec.scale_bits),
        static_cast<std::uint8_t>(c.spec.quat_bits),
        static_cast<std::uint8_t>(c.spec.morton_bits)};
    out.write(reinterpret_cast<const char*>(bits), 5);
    detail::write_pod(out, c.count);
    const double ranges[12] = {c.bbox.min.x,    c.bbox.min.y,    c.bbox.min.z,
                               c.bbox.max.x,    c.bbox.max.y,    c.bbox.max.z,
                               c.scale_min.x,   c.scale_min.y,   c.scale_min.z,
                               c.scale_max.x,   c.scale_max.y,   c.scale_max.z};
    out.write(reinterpret_cast<const char*>(ranges), sizeof(ranges));
    for (const auto& s : c.streams) {
        detail::write_pod(out, s.raw_size);
        detail::write_pod(out, static_cast<std::uint64_t>(s.payload.size()));
        detail::write_pod(out, s.crc);
    }
    for (const auto& s : c.streams)
        out.write(reinterpret_cast<const char*>(s.payload.data()),
                  static_cast<std::streamsize>(s.payload.size()));
    if (!out) throw LoadError("save_container: write failed for " + path);
}

inline CompressedContainer load_container(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("load_container: cannot open " + path);
    char magic[5];
    in.read(magic, 5);
    if (!in || std::memcmp(magic, kContainerMagic, 5) != 0)
        throw CorruptContainer("load_container: bad magic in " + path);
    CompressedContainer c;
    c.version = detail::read_pod<std::uint32_t>(in);
    if (c.version != kContainerVersion)
        throw CorruptContainer("load_container: unsupported version " +
                               std::to_string(c.version));
    c.level = detail::read_pod<std::uint8_t>(in);
    std::uint8_t bits[5];
    in.read(reinterpret_cast<char*>(bits), 5);
    if (!in) throw CorruptContainer("load_container: truncated header");
    c.spec.pos_bits = bits[0];
    c.spec.opacity_bits = bits[1];
    c.spec.scale_bits = bits[2];
    c.spec.quat_bits = bits[3];
    c.spec.morton_bits = bits[4];
    c.spec.validate();
    c.count = detail::read_pod<std::uint64_t>(in);
    double ranges[12];
    in.read(reinterpret_cast<char*>(ranges), sizeof(ranges));
    if (!in) throw CorruptContainer("load_container: truncated header");
    c.bbox = {{ranges[0], ranges[1], ranges[2]}, {ranges[3], ranges[4], ranges[5]}};
    c.scale_min = {ranges[6], ranges[7], ranges[8]};
    c.scale_max = {ranges[9], ranges[10], ranges[11]};
    std::uint64_t comp_sizes[4];
    for (int s = 0; s < 4; ++s) {
        c.streams[s].raw_size = detail::read_pod<std::uint64_t>(in);
        comp_sizes[s] = detail::read_pod<std::uint64_t>(in);
        c.streams[s].crc = detail::read_pod<std::uint32_t>(in);
    }
    for (int s = 0; s < 4; ++s) {
        c.streams[s].payload.resize(comp_sizes[s]);
        in.read(reinterpret_cast<char*>(c.streams[s].payload.data()),
                static_cast<std::streamsize>(comp_sizes[s]));
        if (!in) throw CorruptContainer("load_container: truncated payload");
    }
    return c;
}

struct CompressionReport {
    double vs_checkpoint = 0.0;  // checkpoint bytes / container bytes
    double vs_voxels = 0.0;      // 4 bytes per voxel / container bytes
};

inline CompressionReport report_ratio(std::uint64_t checkpoint_size,
                                      std::uint64_t container_size,
                                      std::uint64_t voxel_count) {
    if (container_size == 0)
        throw std::invalid_argument("report_ratio: zero-size container");
    CompressionReport r;
    r.vs_checkpoint = static_cast<double>(checkpoint_size) / container_size;
    r.vs_voxels = static_cast<double>(voxel_count) * 4.0 / container_size;
    return r;
}

}  // namespace gpile
