#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "gpile/core.hpp"
#include "gpile/errors.hpp"

namespace gpile {

struct QuantSpec {
    int pos_bits = 14;      // per axis
    int opacity_bits = 12;
    int scale_bits = 12;    // applied to log-scale
    int quat_bits = 12;     // per component
    int morton_bits = 14;   // per axis, = pos_bits by default

    void validate() const {
        for (int b : {pos_bits, opacity_bits, scale_bits, quat_bits, morton_bits})
            if (b < 4 || b > 21)
                throw std::invalid_argument("QuantSpec: bit widths must be in [4, 21]");
    }
};

// Integer attribute streams plus the ranges needed to invert them.
struct QuantizedSet {
    QuantSpec spec;
    Bounds bbox;
    Vec3 scale_min, scale_max;  // observed log-scale range per axis
    std::vector<std::uint32_t> positions;   // 3 per primitive
    std::vector<std::uint32_t> opacities;   // 1 per primitive
    std::vector<std::uint32_t> log_scales;  // 3 per primitive
    std::vector<std::uint32_t> quats;       // 4 per primitive

    std::size_t count() const { return opacities.size(); }
};

namespace detail {

inline std::uint32_t quant_value(double u, int bits) {
    const auto levels = static_cast<double>((1u << bits) - 1);
    const double c = std::fmin(1.0, std::fmax(0.0, u));
    return static_cast<std::uint32_t>(std::lround(c * levels));
}

inline double dequant_value(std::uint32_t q, int bits) {
    return static_cast<double>(q) / static_cast<double>((1u << bits) - 1);
}

// Negate the quaternion when its first nonzero component is negative; q and
// -q describe the same rotation, so this pins one half-sphere.
inline Vec4 canonical_half_sphere(Vec4 q) {
    for (int d = 0; d < 4; ++d) {
        if (q[d] > 0.0) break;
        if (q[d] < 0.0) {
            q = q * -1.0;
            break;
        }
    }
    return q;
}

}  // namespace detail

inline QuantizedSet quantize(const GaussianSet& set, const QuantSpec& spec) {
    spec.validate();
    QuantizedSet q;
    q.spec = spec;
    q.bbox = set.bbox;
    const std::size_t n = set.size();
    q.positions.reserve(3 * n);
    q.opacities.reserve(n);
    q.log_scales.reserve(3 * n);
    q.quats.reserve(4 * n);

    q.scale_min = {0.0, 0.0, 0.0};
    q.scale_max = {0.0, 0.0, 0.0};
    bool first = true;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3& ls = set.primitives[i].log_scale;
        for (int d = 0; d < 3; ++d) {
            if (!std::isfinite(ls[d]))
                throw std::invalid_argument("quantize: non-finite log-scale at primitive " +
                                            std::to_string(i));
            if (first || ls[d] < q.scale_min[d]) q.scale_min[d] = ls[d];
            if (first || ls[d] > q.scale_max[d]) q.scale_max[d] = ls[d];
        }
        first = false;
    }
    // Lock min == max axes so dequantization returns the exact shared value.
    for (int d = 0; d < 3; ++d)
        if (!(q.scale_max[d] > q.scale_min[d])) q.scale_max[d] = q.scale_min[d];

    const Vec3 ext = set.bbox.extent();
    for (std::size_t i = 0; i < n; ++i) {
        const GaussianPrimitive& g = set.primitives[i];
        for (int d = 0; d < 3; ++d) {
            if (!std::isfinite(g.mu[d]) || !std::isfinite(g.quat[d]) ||
                !std::isfinite(g.alpha_raw))
                throw std::invalid_argument("quantize: non-finite parameter at primitive " +
                                            std::to_string(i));
        }
        const Vec3 rel = g.mu - set.bbox.min;
        for (int d = 0; d < 3; ++d) {
            const double e = ext[d];
            q.positions.push_back(detail::quant_value(e > 0.0 ? rel[d] / e : 0.0,
                                                      spec.pos_bits));
        }
        q.opacities.push_back(detail::quant_value(g.alpha(), spec.opacity_bits));
        for (int d = 0; d < 3; ++d) {
            const double range = q.scale_max[d] - q.scale_min[d];
            const double u = range > 0.0 ? (g.log_scale[d] - q.scale_min[d]) / range : 0.0;
            q.log_scales.push_back(detail::quant_value(u, spec.scale_bits));
        }
        // Map the stored components directly so that grid values (as produced
        // by dequantize) land back on their own integers; re-rounding a
        // renormalized grid point would not. Normalize only clearly non-unit
        // storage.
        Vec4 cq = g.quat;
        const double qn = cq.norm();
        if (!(qn > 0.0))
            throw std::invalid_argument("quantize: zero quaternion at primitive " +
                                        std::to_string(i));
        if (std::fabs(qn - 1.0) > 1e-2) cq = cq * (1.0 / qn);
        cq = detail::canonical_half_sphere(cq);
        for (int d = 0; d < 4; ++d)
            q.quats.push_back(detail::quant_value((cq[d] + 1.0) * 0.5, spec.quat_bits));
    }
    return q;
}

inline GaussianSet dequantize(const QuantizedSet& q) {
    q.spec.validate();
    const std::size_t n = q.count();
    if (q.positions.size() != 3 * n || q.log_scales.size() != 3 * n || q.quats.size() != 4 * n)
        throw CorruptContainer("dequantize: stream length mismatch");
    auto check = [](std::uint32_t v, int bits, const char* stream) {
        if (v >= (1u << bits))
            throw CorruptContainer(std::string("dequantize: out-of-range integer in ") +
                                   stream + " stream");
    };

    GaussianSet set;
    set.bbox = q.bbox;
    set.primitives.resize(n);
    const Vec3 ext = q.bbox.extent();
    for (std::size_t i = 0; i < n; ++i) {
        GaussianPrimitive& g = set.primitives[i];
        for (int d = 0; d < 3; ++d) {
            const std::uint32_t v = q.positions[3 * i + d];
            check(v, q.spec.pos_bits, "position");
            g.mu[d] = q.bbox.min[d] + detail::dequant_value(v, q.spec.pos_bits) * ext[d];
        }
        check(q.opacities[i], q.spec.opacity_bits, "opacity");
        g.alpha_raw = alpha_activation_inverse(
            detail::dequant_value(q.opacities[i], q.spec.opacity_bits));
        for (int d = 0; d < 3; ++d) {
            const std::uint32_t v = q.log_scales[3 * i + d];
            check(v, q.spec.scale_bits, "log-scale");
            g.log_scale[d] = q.scale_min[d] + detail::dequant_value(v, q.spec.scale_bits) *
                                                  (q.scale_max[d] - q.scale_min[d]);
        }
        // Stored as the exact grid values; the unit-norm invariant holds
        // through the read accessor, and the values re-quantize to the same
        // integers (fixed point).
        Vec4 quat;
        for (int d = 0; d < 4; ++d) {
            const std::uint32_t v = q.quats[4 * i + d];
            check(v, q.spec.quat_bits, "quaternion");
            quat[d] = detail::dequant_value(v, q.spec.quat_bits) * 2.0 - 1.0;
        }
        g.quat = quat.norm() > 0.0 ? quat : Vec4{1.0, 0.0, 0.0, 0.0};
    }
    return set;
}

}  // namespace gpile
