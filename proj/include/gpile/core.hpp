#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "gpile/errors.hpp"
#include "gpile/vec.hpp"

namespace gpile {

// ---------------------------------------------------------------------------
// Parameter activations. Scales live in log space and intensities in logit
// space so the optimizer can take unconstrained steps; reads go through the
// activations below and always satisfy the domain invariants (positive
// scale, alpha in [0,1]).
// ---------------------------------------------------------------------------

inline double alpha_activation(double raw) { return 1.0 / (1.0 + std::exp(-raw)); }

inline double alpha_activation_inverse(double a) {
    const double eps = 1e-12;
    a = std::fmin(1.0 - eps, std::fmax(eps, a));
    return std::log(a / (1.0 - a));
}

// d(exposed alpha)/d(raw alpha)
inline double alpha_activation_grad(double exposed) { return exposed * (1.0 - exposed); }

// One optimizable primitive: position, log-scale, quaternion, raw intensity.
struct GaussianPrimitive {
    Vec3 mu;         // world units
    Vec3 log_scale;  // log of per-axis extent, world units
    Vec4 quat;       // orientation, (w,x,y,z); normalized on read
    double alpha_raw = 0.0;

    Vec3 scale() const {
        return {std::exp(log_scale.x), std::exp(log_scale.y), std::exp(log_scale.z)};
    }
    Vec4 rotation() const {
        const double n = quat.norm();
        if (!(n > 0.0)) throw std::invalid_argument("GaussianPrimitive: zero-norm quaternion");
        return quat * (1.0 / n);
    }
    double alpha() const { return alpha_activation(alpha_raw); }
};

struct Bounds {
    Vec3 min, max;

    Vec3 extent() const { return max - min; }
    bool degenerate() const {
        return !(max.x > min.x) || !(max.y > min.y) || !(max.z > min.z);
    }
    Vec3 clamp(const Vec3& p) const {
        return {std::fmin(max.x, std::fmax(min.x, p.x)),
                std::fmin(max.y, std::fmax(min.y, p.y)),
                std::fmin(max.z, std::fmax(min.z, p.z))};
    }
};

// Scene: ordered primitive list plus the world-space bounding box. The list
// order is the canonical serialization order. Positions are clamped into
// bbox whenever they are written through set_position.
struct GaussianSet {
    std::vector<GaussianPrimitive> primitives;
    Bounds bbox;

    std::size_t size() const { return primitives.size(); }

    void set_position(std::size_t i, const Vec3& p) { primitives[i].mu = bbox.clamp(p); }
};

// Rigid world-to-camera transform for one slice plus its pixel geometry.
// The imaging (focused) plane is z_c = 0.
struct SlicePose {
    Mat3 rotation;      // R_c, orthonormal, det +1
    Vec3 translation;   // t, world units
    int width = 0, height = 0;
    Vec2 pixel_spacing;    // world units per pixel
    Vec2 principal_point;  // pixels

    // Pixel (i, j) center in camera-plane world units.
    Vec2 pixel_center(int i, int j) const {
        return {(static_cast<double>(i) - principal_point.x) * pixel_spacing.x,
                (static_cast<double>(j) - principal_point.y) * pixel_spacing.y};
    }

    void validate() const {
        if (width < 1 || height < 1)
            throw std::invalid_argument("SlicePose: width/height must be >= 1");
        if (!(pixel_spacing.x > 0.0) || !(pixel_spacing.y > 0.0))
            throw std::invalid_argument("SlicePose: pixel_spacing must be positive");
        const Mat3 rrt = rotation.mul(rotation.transpose());
        const Mat3 eye = Mat3::identity();
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                if (std::fabs(rrt.m[i][j] - eye.m[i][j]) > 1e-9)
                    throw std::invalid_argument("SlicePose: rotation not orthonormal");
        if (std::fabs(rotation.det() - 1.0) > 1e-9)
            throw std::invalid_argument("SlicePose: rotation must have det +1");
    }
};

// Spatially invariant Gaussian PSF. sigma_z is the slice-thickness
// parameter that defines the focal zone.
struct PsfSpec {
    double sigma_x = 1.0, sigma_y = 1.0, sigma_z = 1.0;

    void validate() const {
        if (!(sigma_x > 0.0) || !(sigma_y > 0.0) || !(sigma_z > 0.0) ||
            !std::isfinite(sigma_x) || !std::isfinite(sigma_y) || !std::isfinite(sigma_z))
            throw std::invalid_argument("PsfSpec: sigmas must be positive and finite");
    }
};

// Dense scalar volume. data is z-major (slice index varies slowest):
// data[(k*Y + j)*X + i]. origin is the world position of voxel (0,0,0)'s
// center; spacing.z is the inter-slice step delta_z.
struct VolumeGrid {
    int dims[3] = {0, 0, 0};  // X, Y, Z
    Vec3 spacing{1.0, 1.0, 1.0};
    Vec3 origin{0.0, 0.0, 0.0};
    std::vector<double> data;

    std::size_t voxel_count() const {
        return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
    }
    double at(int i, int j, int k) const {
        return data[(static_cast<std::size_t>(k) * dims[1] + j) * dims[0] + i];
    }
    double& at(int i, int j, int k) {
        return data[(static_cast<std::size_t>(k) * dims[1] + j) * dims[0] + i];
    }
    Vec3 voxel_center(int i, int j, int k) const {
        return origin + Vec3{i * spacing.x, j * spacing.y, k * spacing.z};
    }
    // Outer bounds of the voxel cells.
    Bounds world_bounds() const {
        return {origin - spacing * 0.5,
                origin + Vec3{(dims[0] - 0.5) * spacing.x, (dims[1] - 0.5) * spacing.y,
                              (dims[2] - 0.5) * spacing.z}};
    }

    void validate() const {
        if (dims[0] < 1 || dims[1] < 1 || dims[2] < 1)
            throw std::invalid_argument("VolumeGrid: dims must be >= 1");
        if (!(spacing.x > 0.0) || !(spacing.y > 0.0) || !(spacing.z > 0.0))
            throw std::invalid_argument("VolumeGrid: spacing must be positive");
        if (data.size() != voxel_count())
            throw std::invalid_argument("VolumeGrid: data length mismatch");
        for (double v : data)
            if (!std::isfinite(v) || v < 0.0 || v > 1.0)
                throw std::invalid_argument("VolumeGrid: samples must be finite in [0,1]");
    }
};

// ---------------------------------------------------------------------------
// Covariance algebra
// ---------------------------------------------------------------------------

// Sigma = R S S^T R^T with S = diag(mod * s).
inline Mat3 covariance_from_scale_rotation(const Vec3& scale, const Vec4& quat,
                                           double mod = 1.0) {
    if (!(scale.x > 0.0) || !(scale.y > 0.0) || !(scale.z > 0.0) || !(mod > 0.0))
        throw std::invalid_argument("covariance_from_scale_rotation: scale and mod must be > 0");
    const Mat3 r = quat_to_rotation(quat);
    const double sx = mod * scale.x, sy = mod * scale.y, sz = mod * scale.z;
    const Mat3 s2 = Mat3::diag(sx * sx, sy * sy, sz * sz);
    return r.mul(s2).mul(r.transpose());
}

// (mu_c, Sigma_c) = (R_c mu + t, R_c Sigma R_c^T)
inline void world_to_camera(const Vec3& mu, const Mat3& sigma, const SlicePose& pose,
                            Vec3& mu_c, Mat3& sigma_c) {
    mu_c = pose.rotation.mul(mu) + pose.translation;
    sigma_c = pose.rotation.mul(sigma).mul(pose.rotation.transpose());
}

// Inverse of an SPD covariance with a conditioning floor: when the condition
// number exceeds 1e12 the diagonal is lifted by 1e-9 * trace/3 first.
inline Mat3 invert_covariance(const Mat3& sigma) {
    double ev[3];
    sigma.sym_eigenvalues(ev);
    Mat3 s = sigma;
    if (!(ev[0] > 0.0) || ev[2] / ev[0] > 1e12) {
        const double eps = 1e-9 * sigma.trace() / 3.0;
        if (!(eps > 0.0))
            throw DegenerateCovariance("invert_covariance: non-positive covariance");
        for (int i = 0; i < 3; ++i) s.m[i][i] += eps;
        s.sym_eigenvalues(ev);
        if (!(ev[0] > 0.0))
            throw DegenerateCovariance("invert_covariance: covariance not SPD after floor");
    }
    return s.inverse();
}

// Camera pose of slice k in an axis-aligned stack: R_c = I and the focused
// plane z_c = 0 coincides with the slice's voxel centers.
inline SlicePose slice_pose_for_index(const VolumeGrid& vol, int k) {
    SlicePose pose;
    pose.rotation = Mat3::identity();
    pose.translation = (vol.origin + Vec3{0.0, 0.0, k * vol.spacing.z}) * -1.0;
    pose.width = vol.dims[0];
    pose.height = vol.dims[1];
    pose.pixel_spacing = {vol.spacing.x, vol.spacing.y};
    pose.principal_point = {0.0, 0.0};
    return pose;
}

}  // namespace gpile
