#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "gpile/core.hpp"
#include "gpile/errors.hpp"
#include "gpile/grad_chain.hpp"
#include "gpile/image.hpp"
#include "gpile/parallel.hpp"
#include "gpile/render.hpp"

namespace gpile {

// Screen-space statistics consumed by adaptive density control: per
// primitive, the norm of this slice's dL/dmu_2d and whether the primitive
// was observed (survived the cull with a live footprint).
struct ScreenGradStats {
    std::vector<double> mu2d_grad_norm;
    std::vector<std::uint8_t> observed;
    std::vector<Vec3> world_pos_grad;

    explicit ScreenGradStats(std::size_t n = 0)
        : mu2d_grad_norm(n, 0.0), observed(n, 0), world_pos_grad(n) {}
};

namespace detail {

// Per-primitive pixel-loop accumulators: dL/d(alpha_tilde), dL/d(mu_2d) and
// dL/d(conic), summed over the pixels the primitive touches.
struct PixelAccum {
    double a_tilde = 0.0;
    Vec2 d_mu2d{};
    double c_xx = 0.0, c_xy = 0.0, c_yy = 0.0;

    void add(const PixelAccum& o) {
        a_tilde += o.a_tilde;
        d_mu2d = d_mu2d + o.d_mu2d;
        c_xx += o.c_xx;
        c_xy += o.c_xy;
        c_yy += o.c_yy;
    }
};

// Camera-space gradients for one primitive given its pixel-loop sums.
struct CameraBackward {
    double d_alpha = 0.0;      // w.r.t. exposed alpha
    double d_opacity = 0.0;    // w.r.t. opacity_r
    Mat2 dl_dcov2d;            // w.r.t. Sigma_2d, symmetric
    Vec3 dl_dmu_c;
    Mat3 dl_dsigma_c;          // w.r.t. Sigma_c, symmetric
};

inline CameraBackward camera_space_backward(const PreparedGaussian& p,
                                            const PixelAccum& acc) {
    CameraBackward out;
    const double sqrt_det = std::sqrt(p.det2);
    out.d_alpha = acc.a_tilde * p.opacity_r / sqrt_det;
    out.d_opacity = acc.a_tilde * p.alpha / sqrt_det;
    const double d_det = acc.a_tilde * p.alpha * p.opacity_r * (-0.5) / (p.det2 * sqrt_det);

    // Conic and determinant contributions, then lift 2x2 -> 3x3.
    const Mat2 dl_dconic{acc.c_xx, acc.c_xy, acc.c_xy, acc.c_yy};
    const Mat2 cm = p.conic.mul(dl_dconic).mul(p.conic);
    out.dl_dcov2d = cm * -1.0 + p.conic * (d_det * p.det2);

    Mat3 g_sigma_e;
    g_sigma_e.m[0][0] = out.dl_dcov2d.a;
    g_sigma_e.m[0][1] = out.dl_dcov2d.b;
    g_sigma_e.m[1][0] = out.dl_dcov2d.c;
    g_sigma_e.m[1][1] = out.dl_dcov2d.d;
    const Vec3 g_mu_e{acc.d_mu2d.x, acc.d_mu2d.y, 0.0};

    // Opacity modulation: Q = mu_c^T A mu_c - mu_e^T Sigma_e^-1 mu_e with
    // mu_e = Sigma_e A mu_c reduces to dQ/dA = delta delta^T and
    // dQ/dmu_c = 2 A delta, delta = mu_c - mu_e.
    const double g_q = out.d_opacity * (-0.5) * p.opacity_r;
    const Vec3 delta = p.mu_c - p.mu_e;
    const Mat3& a = p.sigma_c_inv;

    out.dl_dmu_c = a.mul(p.sigma_e.mul(g_mu_e)) + a.mul(delta) * (2.0 * g_q);
    Mat3 dl_da = Mat3::outer(p.sigma_e.mul(g_mu_e), delta) + Mat3::outer(delta, delta) * g_q -
                 p.sigma_e.mul(g_sigma_e).mul(p.sigma_e);
    // Symmetrize: Sigma_c is symmetric and the symmetric part is what chains on.
    dl_da = (dl_da + dl_da.transpose()) * 0.5;
    out.dl_dsigma_c = a.mul(dl_da).mul(a) * -1.0;
    return out;
}

}  // namespace detail

// Analytic backward through the focus-aware pipeline for one slice. dl_di
// must match the rendered image shape. Pixel contributions are reduced in
// tile-major order, which keeps the result bitwise reproducible regardless
// of thread count.
inline GaussianGradients backward_prepared(const GaussianSet& set,
                                           const std::vector<PreparedGaussian>& prep,
                                           const SlicePose& pose, const SliceImage& dl_di,
                                           const RasterConfig& cfg,
                                           ScreenGradStats* stats = nullptr) {
    if (dl_di.width != pose.width || dl_di.height != pose.height)
        throw std::invalid_argument("backward_slice: gradient image shape mismatch");

    detail::TileGrid grid(pose, prep, cfg.tile_size);

    // Stage 1: pixel sums per (tile, primitive) pair, tiles in parallel.
    std::vector<std::vector<detail::PixelAccum>> partials(grid.lists.size());
    parallel_for(0, grid.lists.size(), [&](std::size_t t) {
        const auto& list = grid.lists[t];
        if (list.empty()) return;
        partials[t].resize(list.size());
        const int tx = static_cast<int>(t) % grid.tiles_x;
        const int ty = static_cast<int>(t) / grid.tiles_x;
        const int x0 = tx * grid.tile, x1 = std::min(pose.width, x0 + grid.tile);
        const int y0 = ty * grid.tile, y1 = std::min(pose.height, y0 + grid.tile);
        for (std::size_t li = 0; li < list.size(); ++li) {
            const PreparedGaussian& p = prep[list[li]];
            detail::PixelAccum acc;
            const int ax0 = std::max(x0, p.lo_x), ax1 = std::min(x1 - 1, p.hi_x);
            const int ay0 = std::max(y0, p.lo_y), ay1 = std::min(y1 - 1, p.hi_y);
            for (int j = ay0; j <= ay1; ++j) {
                for (int i = ax0; i <= ax1; ++i) {
                    const double gi = dl_di.at(i, j);
                    if (gi == 0.0) continue;
                    const Vec2 d = pose.pixel_center(i, j) - p.mu_2d;
                    const Vec2 cd = p.conic.mul(d);
                    const double g = std::exp(-0.5 * (d.x * cd.x + d.y * cd.y));
                    acc.a_tilde += gi * g;
                    const double w = p.alpha_tilde * g * gi;
                    acc.d_mu2d = acc.d_mu2d + cd * w;
                    acc.c_xx += w * (-0.5) * d.x * d.x;
                    acc.c_xy += w * (-0.5) * d.x * d.y;
                    acc.c_yy += w * (-0.5) * d.y * d.y;
                }
            }
            partials[t][li] = acc;
        }
    });

    // Stage 2: deterministic merge, tile order.
    std::vector<detail::PixelAccum> total(prep.size());
    for (std::size_t t = 0; t < grid.lists.size(); ++t)
        for (std::size_t li = 0; li < grid.lists[t].size(); ++li)
            total[grid.lists[t][li]].add(partials[t][li]);

    // Stage 3: chain each primitive back to world parameters, in parallel.
    GaussianGradients grads(set.size());
    if (stats) *stats = ScreenGradStats(set.size());
    const Mat3 rct = pose.rotation.transpose();
    parallel_for(0, prep.size(), [&](std::size_t pi) {
        const PreparedGaussian& p = prep[pi];
        const GaussianPrimitive& prim = set.primitives[p.index];
        const detail::CameraBackward cb = detail::camera_space_backward(p, total[pi]);

        const Vec3 dl_dmu = rct.mul(cb.dl_dmu_c);
        const Mat3 dl_dsigma = rct.mul(cb.dl_dsigma_c).mul(pose.rotation);

        Vec3 d_ls;
        Vec4 d_q;
        chain_world_covariance(prim, dl_dsigma, cfg.scale_modifier, d_ls, d_q);

        grads.d_mu[p.index] = dl_dmu;
        grads.d_log_scale[p.index] = d_ls;
        grads.d_quat[p.index] = d_q;
        grads.d_alpha_raw[p.index] = cb.d_alpha * alpha_activation_grad(p.alpha);

        if (stats) {
            stats->mu2d_grad_norm[p.index] = total[pi].d_mu2d.norm();
            stats->observed[p.index] = 1;
            stats->world_pos_grad[p.index] = dl_dmu;
        }
    });

    for (std::size_t i = 0; i < grads.size(); ++i) {
        const bool finite = std::isfinite(grads.d_alpha_raw[i]) &&
                            std::isfinite(grads.d_mu[i].x + grads.d_mu[i].y + grads.d_mu[i].z) &&
                            std::isfinite(grads.d_log_scale[i].x + grads.d_log_scale[i].y +
                                          grads.d_log_scale[i].z) &&
                            std::isfinite(grads.d_quat[i].w + grads.d_quat[i].x +
                                          grads.d_quat[i].y + grads.d_quat[i].z);
        if (!finite)
            throw NumericFailure("backward_slice: non-finite gradient for primitive " +
                                 std::to_string(i));
    }
    return grads;
}

inline GaussianGradients backward_slice(const GaussianSet& set, const SlicePose& pose,
                                        const PsfSpec& psf, const SliceImage& dl_di,
                                        const RasterConfig& cfg = {},
                                        ScreenGradStats* stats = nullptr) {
    psf.validate();
    const auto prep = prepare_gaussians(set, pose, psf, cfg);
    return backward_prepared(set, prep, pose, dl_di, cfg, stats);
}

}  // namespace gpile
