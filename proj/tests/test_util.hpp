#pragma once

#include <cmath>

#include "gpile/core.hpp"
#include "gpile/rng.hpp"

namespace gpile::testing {

inline GaussianPrimitive random_primitive(Rng& rng, const Bounds& bbox,
                                          double scale_lo = 0.5, double scale_hi = 2.0) {
    GaussianPrimitive g;
    g.mu = rng.uniform_in_box(bbox.min, bbox.max);
    for (int d = 0; d < 3; ++d)
        g.log_scale[d] = std::log(rng.uniform(scale_lo, scale_hi));
    g.quat = rng.unit_quaternion();
    g.alpha_raw = alpha_activation_inverse(rng.uniform(0.2, 0.9));
    return g;
}

inline Mat3 random_spd(Rng& rng, double scale_lo = 0.5, double scale_hi = 2.0) {
    Vec3 s{rng.uniform(scale_lo, scale_hi), rng.uniform(scale_lo, scale_hi),
           rng.uniform(scale_lo, scale_hi)};
    return covariance_from_scale_rotation(s, rng.unit_quaternion());
}

inline SlicePose random_pose(Rng& rng, int width = 24, int height = 24) {
    SlicePose pose;
    pose.rotation = quat_to_rotation(rng.unit_quaternion());
    pose.translation = {rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
    pose.width = width;
    pose.height = height;
    pose.pixel_spacing = {1.0, 1.0};
    pose.principal_point = {width / 2.0, height / 2.0};
    return pose;
}

}  // namespace gpile::testing
