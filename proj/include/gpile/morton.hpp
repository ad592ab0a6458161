#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "gpile/core.hpp"

namespace gpile {

// Interleaves the low `bits` bits of each coordinate; x occupies the least
// significant position of each level, then y, then z.
inline std::uint64_t morton_code(std::uint32_t x, std::uint32_t y, std::uint32_t z, int bits) {
    std::uint64_t code = 0;
    for (int b = 0; b < bits; ++b) {
        code |= static_cast<std::uint64_t>((x >> b) & 1u) << (3 * b);
        code |= static_cast<std::uint64_t>((y >> b) & 1u) << (3 * b + 1);
        code |= static_cast<std::uint64_t>((z >> b) & 1u) << (3 * b + 2);
    }
    return code;
}

inline std::uint32_t quantize_unit(double u, int bits) {
    const auto levels = static_cast<double>((1u << bits) - 1);
    const double c = std::fmin(1.0, std::fmax(0.0, u));
    return static_cast<std::uint32_t>(std::lround(c * levels));
}

// Stable Z-order permutation of the set: positions normalized to the bbox,
// quantized, bit-interleaved; ties keep the original order.
inline std::vector<std::size_t> morton_sort(const GaussianSet& set, int bits = 14) {
    const Vec3 ext = set.bbox.extent();
    std::vector<std::uint64_t> codes(set.size());
    for (std::size_t i = 0; i < set.size(); ++i) {
        const Vec3 rel = set.primitives[i].mu - set.bbox.min;
        const std::uint32_t qx = quantize_unit(ext.x > 0.0 ? rel.x / ext.x : 0.0, bits);
        const std::uint32_t qy = quantize_unit(ext.y > 0.0 ? rel.y / ext.y : 0.0, bits);
        const std::uint32_t qz = quantize_unit(ext.z > 0.0 ? rel.z / ext.z : 0.0, bits);
        codes[i] = morton_code(qx, qy, qz, bits);
    }
    std::vector<std::size_t> perm(set.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::stable_sort(perm.begin(), perm.end(),
                     [&](std::size_t a, std::size_t b) { return codes[a] < codes[b]; });
    return perm;
}

inline GaussianSet apply_permutation(const GaussianSet& set,
                                     const std::vector<std::size_t>& perm) {
    GaussianSet out;
    out.bbox = set.bbox;
    out.primitives.reserve(set.size());
    for (std::size_t i : perm) out.primitives.push_back(set.primitives[i]);
    return out;
}

}  // namespace gpile
