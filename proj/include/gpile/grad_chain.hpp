#pragma once

#include <cmath>

#include "gpile/core.hpp"
#include "gpile/vec.hpp"

namespace gpile {

// Per-primitive loss gradients with respect to the stored parameters, in
// GaussianSet order. Culled primitives keep exact zeros.
struct GaussianGradients {
    std::vector<Vec3> d_mu;
    std::vector<Vec3> d_log_scale;
    std::vector<Vec4> d_quat;
    std::vector<double> d_alpha_raw;

    explicit GaussianGradients(std::size_t n = 0)
        : d_mu(n), d_log_scale(n), d_quat(n), d_alpha_raw(n, 0.0) {}

    std::size_t size() const { return d_alpha_raw.size(); }
};

namespace detail {

// dL/dq-hat for R = quat_to_rotation(q-hat), q-hat unit, scalar-first.
inline Vec4 rotation_backward(const Vec4& q, const Mat3& dl_dr) {
    const double w = q.w, x = q.x, y = q.y, z = q.z;
    const auto& g = dl_dr.m;
    Vec4 out;
    out.w = 2.0 * (-z * g[0][1] + y * g[0][2] + z * g[1][0] - x * g[1][2] - y * g[2][0] +
                   x * g[2][1]);
    out.x = 2.0 * (y * g[0][1] + z * g[0][2] + y * g[1][0] - 2.0 * x * g[1][1] -
                   w * g[1][2] + z * g[2][0] + w * g[2][1] - 2.0 * x * g[2][2]);
    out.y = 2.0 * (-2.0 * y * g[0][0] + x * g[0][1] + w * g[0][2] + x * g[1][0] +
                   z * g[1][2] - w * g[2][0] + z * g[2][1] - 2.0 * y * g[2][2]);
    out.z = 2.0 * (-2.0 * z * g[0][0] - w * g[0][1] + x * g[0][2] + w * g[1][0] -
                   2.0 * z * g[1][1] + y * g[1][2] + x * g[2][0] + y * g[2][1]);
    return out;
}

}  // namespace detail

// Chains dL/dSigma (world space, free-matrix convention) through
// Sigma = R S S^T R^T and the storage activations into gradients for
// log-scale and the raw (unnormalized) quaternion. The normalization
// Jacobian removes the component along q, so <d_quat, quat> = 0.
inline void chain_world_covariance(const GaussianPrimitive& prim, const Mat3& dl_dsigma,
                                   double mod, Vec3& d_log_scale, Vec4& d_quat) {
    const Vec4 q = prim.rotation();
    const Mat3 r = quat_to_rotation(q);
    const Vec3 s = prim.scale();
    const double ms[3] = {mod * s.x, mod * s.y, mod * s.z};

    // M = R diag(mod*s); Sigma = M M^T; dL/dM = (dL/dSigma + dL/dSigma^T) M.
    Mat3 sym2 = dl_dsigma + dl_dsigma.transpose();
    Mat3 m;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) m.m[i][j] = r.m[i][j] * ms[j];
    const Mat3 dl_dm = sym2.mul(m);

    for (int j = 0; j < 3; ++j) {
        double acc = 0.0;
        for (int i = 0; i < 3; ++i) acc += r.m[i][j] * dl_dm.m[i][j];
        // d/d(log s_j) = s_j * d/ds_j, and d(mod*s_j)/ds_j = mod.
        d_log_scale[j] = acc * mod * s[j];
    }

    Mat3 dl_dr;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) dl_dr.m[i][j] = dl_dm.m[i][j] * ms[j];
    const Vec4 dq = detail::rotation_backward(q, dl_dr);

    const double raw_norm = prim.quat.norm();
    const double along = dq.dot(q);
    d_quat = (dq - q * along) * (1.0 / raw_norm);
}

}  // namespace gpile
