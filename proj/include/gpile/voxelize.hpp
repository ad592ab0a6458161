#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "gpile/core.hpp"
#include "gpile/errors.hpp"
#include "gpile/grad_chain.hpp"
#include "gpile/parallel.hpp"

namespace gpile {

struct VoxelizerConfig {
    int dims[3] = {0, 0, 0};
    Vec3 spacing{1.0, 1.0, 1.0};
    Vec3 origin{0.0, 0.0, 0.0};
    int tile_dims[3] = {8, 8, 8};
    double support_sigmas = 3.0;
    double scale_modifier = 1.0;

    void validate() const {
        if (dims[0] < 1 || dims[1] < 1 || dims[2] < 1)
            throw std::invalid_argument("VoxelizerConfig: dims must be >= 1");
        if (tile_dims[0] < 1 || tile_dims[1] < 1 || tile_dims[2] < 1)
            throw std::invalid_argument("VoxelizerConfig: tile_dims must be >= 1");
        if (!(support_sigmas > 0.0))
            throw std::invalid_argument("VoxelizerConfig: support_sigmas must be > 0");
        if (!(spacing.x > 0.0) || !(spacing.y > 0.0) || !(spacing.z > 0.0))
            throw std::invalid_argument("VoxelizerConfig: spacing must be positive");
        const std::size_t voxels =
            static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
        if (voxels > (std::size_t{1} << 31))
            throw std::invalid_argument("VoxelizerConfig: refusing > 2^31 voxels");
    }
};

namespace detail {

struct VoxelPrim {
    std::uint32_t index;
    double alpha;
    Vec3 mu;
    Mat3 sigma_inv;
    int lo[3], hi[3];  // inclusive voxel index bounds of the support AABB
};

// World covariance, support AABB from the diagonal bound
// mu +- support_sigmas * sqrt(diag(Sigma)), voxel index ranges.
inline std::vector<VoxelPrim> prepare_voxel_prims(const GaussianSet& set,
                                                  const VoxelizerConfig& cfg) {
    std::vector<VoxelPrim> prims(set.size());
    std::vector<std::uint8_t> keep(set.size(), 0);
    parallel_for(0, set.size(), [&](std::size_t i) {
        const GaussianPrimitive& g = set.primitives[i];
        VoxelPrim p;
        p.index = static_cast<std::uint32_t>(i);
        p.alpha = g.alpha();
        p.mu = g.mu;
        const Mat3 sigma =
            covariance_from_scale_rotation(g.scale(), g.quat, cfg.scale_modifier);
        p.sigma_inv = invert_covariance(sigma);
        bool inside = true;
        for (int d = 0; d < 3; ++d) {
            const double half = cfg.support_sigmas * std::sqrt(sigma.m[d][d]);
            const double lo_w = p.mu[d] - half, hi_w = p.mu[d] + half;
            const double o = cfg.origin[d], s = d == 0 ? cfg.spacing.x
                                                        : (d == 1 ? cfg.spacing.y : cfg.spacing.z);
            p.lo[d] = std::max(0, static_cast<int>(std::ceil((lo_w - o) / s)));
            p.hi[d] = std::min(cfg.dims[d] - 1, static_cast<int>(std::floor((hi_w - o) / s)));
            if (p.lo[d] > p.hi[d]) inside = false;
        }
        if (!inside) return;
        prims[i] = p;
        keep[i] = 1;
    });
    std::vector<VoxelPrim> out;
    out.reserve(set.size());
    for (std::size_t i = 0; i < set.size(); ++i)
        if (keep[i]) out.push_back(prims[i]);
    return out;
}

struct VoxelTiles {
    int n[3];  // tile counts per axis
    std::vector<std::vector<std::uint32_t>> lists;

    VoxelTiles(const VoxelizerConfig& cfg, const std::vector<VoxelPrim>& prims) {
        for (int d = 0; d < 3; ++d) n[d] = (cfg.dims[d] + cfg.tile_dims[d] - 1) / cfg.tile_dims[d];
        lists.resize(static_cast<std::size_t>(n[0]) * n[1] * n[2]);
        for (std::uint32_t pi = 0; pi < prims.size(); ++pi) {
            const VoxelPrim& p = prims[pi];
            const int tx0 = p.lo[0] / cfg.tile_dims[0], tx1 = p.hi[0] / cfg.tile_dims[0];
            const int ty0 = p.lo[1] / cfg.tile_dims[1], ty1 = p.hi[1] / cfg.tile_dims[1];
            const int tz0 = p.lo[2] / cfg.tile_dims[2], tz1 = p.hi[2] / cfg.tile_dims[2];
            for (int tz = tz0; tz <= tz1; ++tz)
                for (int ty = ty0; ty <= ty1; ++ty)
                    for (int tx = tx0; tx <= tx1; ++tx)
                        lists[(static_cast<std::size_t>(tz) * n[1] + ty) * n[0] + tx]
                            .push_back(pi);
        }
    }
};

}  // namespace detail

// sigma(x) = sum_i alpha_i exp(-1/2 (x - mu_i)^T Sigma_i^-1 (x - mu_i)) at
// voxel centers. Culling is per tile: a primitive contributes to every voxel
// of each tile its support AABB touches. Tiles write disjoint output regions
// and run in parallel.
inline VolumeGrid voxelize(const GaussianSet& set, const VoxelizerConfig& cfg) {
    cfg.validate();
    VolumeGrid vol;
    vol.dims[0] = cfg.dims[0];
    vol.dims[1] = cfg.dims[1];
    vol.dims[2] = cfg.dims[2];
    vol.spacing = cfg.spacing;
    vol.origin = cfg.origin;
    vol.data.assign(vol.voxel_count(), 0.0);

    const auto prims = detail::prepare_voxel_prims(set, cfg);
    detail::VoxelTiles tiles(cfg, prims);

    parallel_for(0, tiles.lists.size(), [&](std::size_t t) {
        const auto& list = tiles.lists[t];
        if (list.empty()) return;
        const int tx = static_cast<int>(t % tiles.n[0]);
        const int ty = static_cast<int>((t / tiles.n[0]) % tiles.n[1]);
        const int tz = static_cast<int>(t / (static_cast<std::size_t>(tiles.n[0]) * tiles.n[1]));
        const int x0 = tx * cfg.tile_dims[0], x1 = std::min(cfg.dims[0], x0 + cfg.tile_dims[0]);
        const int y0 = ty * cfg.tile_dims[1], y1 = std::min(cfg.dims[1], y0 + cfg.tile_dims[1]);
        const int z0 = tz * cfg.tile_dims[2], z1 = std::min(cfg.dims[2], z0 + cfg.tile_dims[2]);
        for (std::uint32_t pi : list) {
            const detail::VoxelPrim& p = prims[pi];
            for (int k = z0; k < z1; ++k)
                for (int j = y0; j < y1; ++j)
                    for (int i = x0; i < x1; ++i) {
                        const Vec3 d = vol.voxel_center(i, j, k) - p.mu;
                        const double q = d.dot(p.sigma_inv.mul(d));
                        vol.at(i, j, k) += p.alpha * std::exp(-0.5 * q);
                    }
        }
    });
    for (double& v : vol.data) v = std::fmax(0.0, v);
    return vol;
}

// Gradients of sum_x dL/dV(x) * sigma(x) with respect to the stored
// parameters, truncated to the same support as the forward pass.
inline GaussianGradients voxelize_backward(const GaussianSet& set, const VoxelizerConfig& cfg,
                                           const VolumeGrid& dl_dv) {
    cfg.validate();
    for (int d = 0; d < 3; ++d)
        if (dl_dv.dims[d] != cfg.dims[d])
            throw std::invalid_argument("voxelize_backward: gradient volume shape mismatch");

    const auto prims = detail::prepare_voxel_prims(set, cfg);
    detail::VoxelTiles tiles(cfg, prims);

    struct Accum {
        double d_alpha = 0.0;
        Vec3 d_mu{};
        Mat3 d_sigma_inv{};
    };
    std::vector<std::vector<Accum>> partials(tiles.lists.size());
    VolumeGrid centers;  // reuse geometry helpers
    centers.dims[0] = cfg.dims[0];
    centers.dims[1] = cfg.dims[1];
    centers.dims[2] = cfg.dims[2];
    centers.spacing = cfg.spacing;
    centers.origin = cfg.origin;

    parallel_for(0, tiles.lists.size(), [&](std::size_t t) {
        const auto& list = tiles.lists[t];
        if (list.empty()) return;
        partials[t].resize(list.size());
        const int tx = static_cast<int>(t % tiles.n[0]);
        const int ty = static_cast<int>((t / tiles.n[0]) % tiles.n[1]);
        const int tz = static_cast<int>(t / (static_cast<std::size_t>(tiles.n[0]) * tiles.n[1]));
        const int x0 = tx * cfg.tile_dims[0], x1 = std::min(cfg.dims[0], x0 + cfg.tile_dims[0]);
        const int y0 = ty * cfg.tile_dims[1], y1 = std::min(cfg.dims[1], y0 + cfg.tile_dims[1]);
        const int z0 = tz * cfg.tile_dims[2], z1 = std::min(cfg.dims[2], z0 + cfg.tile_dims[2]);
        for (std::size_t li = 0; li < list.size(); ++li) {
            const detail::VoxelPrim& p = prims[list[li]];
            Accum acc;
            for (int k = z0; k < z1; ++k)
                for (int j = y0; j < y1; ++j)
                    for (int i = x0; i < x1; ++i) {
                        const double g = dl_dv.at(i, j, k);
                        if (g == 0.0) continue;
                        const Vec3 d = centers.voxel_center(i, j, k) - p.mu;
                        const Vec3 sd = p.sigma_inv.mul(d);
                        const double e = std::exp(-0.5 * d.dot(sd));
                        acc.d_alpha += g * e;
                        const double w = g * p.alpha * e;
                        acc.d_mu += sd * w;
                        for (int r = 0; r < 3; ++r)
                            for (int c = 0; c < 3; ++c)
                                acc.d_sigma_inv.m[r][c] += w * (-0.5) * d[r] * d[c];
                    }
            partials[t][li] = acc;
        }
    });

    std::vector<Accum> total(prims.size());
    for (std::size_t t = 0; t < tiles.lists.size(); ++t)
        for (std::size_t li = 0; li < tiles.lists[t].size(); ++li) {
            Accum& dst = total[tiles.lists[t][li]];
            const Accum& src = partials[t][li];
            dst.d_alpha += src.d_alpha;
            dst.d_mu += src.d_mu;
            dst.d_sigma_inv = dst.d_sigma_inv + src.d_sigma_inv;
        }

    GaussianGradients grads(set.size());
    parallel_for(0, prims.size(), [&](std::size_t pi) {
        const detail::VoxelPrim& p = prims[pi];
        const GaussianPrimitive& prim = set.primitives[p.index];
        const Accum& acc = total[pi];
        // Free-matrix identity Sigma^-1 -> Sigma, then symmetrize.
        Mat3 dl_dsigma = p.sigma_inv.mul(acc.d_sigma_inv).mul(p.sigma_inv) * -1.0;
        dl_dsigma = (dl_dsigma + dl_dsigma.transpose()) * 0.5;
        Vec3 d_ls;
        Vec4 d_q;
        chain_world_covariance(prim, dl_dsigma, cfg.scale_modifier, d_ls, d_q);
        grads.d_mu[p.index] = acc.d_mu;
        grads.d_log_scale[p.index] = d_ls;
        grads.d_quat[p.index] = d_q;
        grads.d_alpha_raw[p.index] = acc.d_alpha * alpha_activation_grad(p.alpha);
    });

    for (std::size_t i = 0; i < grads.size(); ++i)
        if (!std::isfinite(grads.d_alpha_raw[i] + grads.d_mu[i].x + grads.d_log_scale[i].x +
                           grads.d_quat[i].w))
            throw NumericFailure("voxelize_backward: non-finite gradient for primitive " +
                                 std::to_string(i));
    return grads;
}

}  // namespace gpile
