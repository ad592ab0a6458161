#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "gpile/core.hpp"
#include "gpile/errors.hpp"
#include "gpile/image.hpp"
#include "gpile/parallel.hpp"

namespace gpile {

// Effective Gaussian after multiplying a camera-space primitive with the
// axial sensitivity map h(-z) = exp(-z^2 / (2 sigma_z^2)).
struct FocusGaussian {
    Vec3 mu_e;
    Mat3 sigma_e;
    double opacity_r = 1.0;
    Vec2 mu_2d;
    Mat2 sigma_2d;
    double alpha_tilde = 0.0;
};

struct RasterConfig {
    double tau = 0.02;             // cull when alpha * opacity_r < tau
    int tile_size = 16;            // pixels per tile side
    double footprint_sigmas = 3.0; // pixel support radius in units of sqrt(lambda_max)
    double scale_modifier = 1.0;   // "mod" applied to scales when building covariances
};

// Sigma_e^-1 = Sigma_c^-1 + e3 e3^T / sigma_z^2, mu_e = Sigma_e Sigma_c^-1 mu_c.
inline void axial_reparam(const Vec3& mu_c, const Mat3& sigma_c, double sigma_z,
                          Vec3& mu_e, Mat3& sigma_e) {
    const Mat3 a = invert_covariance(sigma_c);
    Mat3 b = a;
    b.m[2][2] += 1.0 / (sigma_z * sigma_z);
    sigma_e = b.inverse();
    mu_e = sigma_e.mul(a.mul(mu_c));
}

// exp(-1/2 (mu_c^T Sigma_c^-1 mu_c - mu_e^T Sigma_e^-1 mu_e))
inline double opacity_modulation(const Vec3& mu_c, const Mat3& sigma_c, const Vec3& mu_e,
                                 const Mat3& sigma_e) {
    const Mat3 a = invert_covariance(sigma_c);
    const Mat3 b = invert_covariance(sigma_e);
    const double q = mu_c.dot(a.mul(mu_c)) - mu_e.dot(b.mul(mu_e));
    return std::exp(-0.5 * q);
}

// Marginal over z: the upper-left 2x2 block and the first two mean entries.
inline void project_2d(const Vec3& mu_e, const Mat3& sigma_e, Vec2& mu_2d, Mat2& sigma_2d) {
    mu_2d = {mu_e.x, mu_e.y};
    sigma_2d = {sigma_e.m[0][0], sigma_e.m[0][1], sigma_e.m[1][0], sigma_e.m[1][1]};
}

// alpha_tilde = alpha * opacity_r / sqrt(det Sigma_2d)
inline double rendered_intensity(double alpha, double opacity_r, const Mat2& sigma_2d) {
    const double det = sigma_2d.det();
    if (!(det > 0.0))
        throw DegenerateCovariance("rendered_intensity: non-positive det(Sigma_2d)");
    return alpha * opacity_r / std::sqrt(det);
}

// Everything the rasterizer and the backward pass need per surviving
// primitive on one slice.
struct PreparedGaussian {
    std::uint32_t index = 0;  // position in the GaussianSet
    double alpha = 0.0;       // exposed intensity
    double opacity_r = 1.0;
    double alpha_tilde = 0.0;
    Vec3 mu_c, mu_e;
    Mat3 sigma_c, sigma_c_inv, sigma_e;
    Vec2 mu_2d;
    Mat2 cov2d, conic;
    double det2 = 0.0;
    int lo_x = 0, hi_x = -1, lo_y = 0, hi_y = -1;  // inclusive pixel bounds
};

// Builds the per-primitive slice state and applies the cull: primitives with
// alpha * opacity_r < tau or with an empty pixel footprint are dropped.
inline std::vector<PreparedGaussian> prepare_gaussians(const GaussianSet& set,
                                                       const SlicePose& pose,
                                                       const PsfSpec& psf,
                                                       const RasterConfig& cfg) {
    const std::size_t n = set.size();
    std::vector<PreparedGaussian> all(n);
    std::vector<std::uint8_t> keep(n, 0);
    parallel_for(0, n, [&](std::size_t i) {
        const GaussianPrimitive& g = set.primitives[i];
        PreparedGaussian p;
        p.index = static_cast<std::uint32_t>(i);
        p.alpha = g.alpha();

        const Mat3 sigma = covariance_from_scale_rotation(g.scale(), g.quat,
                                                          cfg.scale_modifier);
        world_to_camera(g.mu, sigma, pose, p.mu_c, p.sigma_c);
        p.sigma_c_inv = invert_covariance(p.sigma_c);
        Mat3 b = p.sigma_c_inv;
        b.m[2][2] += 1.0 / (psf.sigma_z * psf.sigma_z);
        p.sigma_e = b.inverse();
        p.mu_e = p.sigma_e.mul(p.sigma_c_inv.mul(p.mu_c));

        const double q = p.mu_c.dot(p.sigma_c_inv.mul(p.mu_c)) - p.mu_e.dot(b.mul(p.mu_e));
        p.opacity_r = std::exp(-0.5 * q);
        if (p.alpha * p.opacity_r < cfg.tau) return;

        project_2d(p.mu_e, p.sigma_e, p.mu_2d, p.cov2d);
        p.det2 = p.cov2d.det();
        if (!(p.det2 > 0.0))
            throw DegenerateCovariance("prepare_gaussians: non-positive det(Sigma_2d)");
        p.conic = p.cov2d.inverse();
        p.alpha_tilde = p.alpha * p.opacity_r / std::sqrt(p.det2);

        double lo_ev, hi_ev;
        p.cov2d.sym_eigenvalues(lo_ev, hi_ev);
        const double radius = cfg.footprint_sigmas * std::sqrt(std::fmax(hi_ev, 0.0));
        const double cx = p.mu_2d.x / pose.pixel_spacing.x + pose.principal_point.x;
        const double cy = p.mu_2d.y / pose.pixel_spacing.y + pose.principal_point.y;
        const double rx = radius / pose.pixel_spacing.x;
        const double ry = radius / pose.pixel_spacing.y;
        p.lo_x = std::max(0, static_cast<int>(std::ceil(cx - rx)));
        p.hi_x = std::min(pose.width - 1, static_cast<int>(std::floor(cx + rx)));
        p.lo_y = std::max(0, static_cast<int>(std::ceil(cy - ry)));
        p.hi_y = std::min(pose.height - 1, static_cast<int>(std::floor(cy + ry)));
        if (p.lo_x > p.hi_x || p.lo_y > p.hi_y) return;

        all[i] = p;
        keep[i] = 1;
    });

    std::vector<PreparedGaussian> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        if (keep[i]) out.push_back(all[i]);
    return out;
}

namespace detail {

struct TileGrid {
    int tiles_x = 0, tiles_y = 0, tile = 16;
    std::vector<std::vector<std::uint32_t>> lists;  // prepared indices per tile

    TileGrid(const SlicePose& pose, const std::vector<PreparedGaussian>& prep, int tile_size)
        : tile(tile_size) {
        tiles_x = (pose.width + tile - 1) / tile;
        tiles_y = (pose.height + tile - 1) / tile;
        lists.resize(static_cast<std::size_t>(tiles_x) * tiles_y);
        for (std::uint32_t pi = 0; pi < prep.size(); ++pi) {
            const PreparedGaussian& p = prep[pi];
            const int tx0 = p.lo_x / tile, tx1 = p.hi_x / tile;
            const int ty0 = p.lo_y / tile, ty1 = p.hi_y / tile;
            for (int ty = ty0; ty <= ty1; ++ty)
                for (int tx = tx0; tx <= tx1; ++tx)
                    lists[static_cast<std::size_t>(ty) * tiles_x + tx].push_back(pi);
        }
    }
};

}  // namespace detail

// Additive tiled rasterization: I(p) = sum_i alpha_tilde_i exp(-1/2 d^T conic d).
// Each tile owns its pixels, so tiles run in parallel with deterministic output.
inline SliceImage rasterize_prepared(const std::vector<PreparedGaussian>& prep,
                                     const SlicePose& pose, const RasterConfig& cfg) {
    SliceImage img(pose.width, pose.height);
    detail::TileGrid grid(pose, prep, cfg.tile_size);
    parallel_for(0, grid.lists.size(), [&](std::size_t t) {
        const auto& list = grid.lists[t];
        if (list.empty()) return;
        const int tx = static_cast<int>(t) % grid.tiles_x;
        const int ty = static_cast<int>(t) / grid.tiles_x;
        const int x0 = tx * grid.tile, x1 = std::min(pose.width, x0 + grid.tile);
        const int y0 = ty * grid.tile, y1 = std::min(pose.height, y0 + grid.tile);
        for (std::uint32_t pi : list) {
            const PreparedGaussian& p = prep[pi];
            const int ax0 = std::max(x0, p.lo_x), ax1 = std::min(x1 - 1, p.hi_x);
            const int ay0 = std::max(y0, p.lo_y), ay1 = std::min(y1 - 1, p.hi_y);
            for (int j = ay0; j <= ay1; ++j) {
                for (int i = ax0; i <= ax1; ++i) {
                    const Vec2 d = pose.pixel_center(i, j) - p.mu_2d;
                    const double e = p.conic.a * d.x * d.x + 2.0 * p.conic.b * d.x * d.y +
                                     p.conic.d * d.y * d.y;
                    img.at(i, j) += p.alpha_tilde * std::exp(-0.5 * e);
                }
            }
        }
    });
    return img;
}

inline SliceImage rasterize_slice(const GaussianSet& set, const SlicePose& pose,
                                  const PsfSpec& psf, const RasterConfig& cfg = {}) {
    psf.validate();
    const auto prep = prepare_gaussians(set, pose, psf, cfg);
    return rasterize_prepared(prep, pose, cfg);
}

// Reference all-pairs loop, no tiling. Accumulation order per pixel matches
// the tiled path (prepared order), so results are bitwise identical.
inline SliceImage rasterize_naive(const GaussianSet& set, const SlicePose& pose,
                                  const PsfSpec& psf, const RasterConfig& cfg = {}) {
    psf.validate();
    const auto prep = prepare_gaussians(set, pose, psf, cfg);
    SliceImage img(pose.width, pose.height);
    for (const PreparedGaussian& p : prep) {
        for (int j = p.lo_y; j <= p.hi_y; ++j) {
            for (int i = p.lo_x; i <= p.hi_x; ++i) {
                const Vec2 d = pose.pixel_center(i, j) - p.mu_2d;
                const double e = p.conic.a * d.x * d.x + 2.0 * p.conic.b * d.x * d.y +
                                 p.conic.d * d.y * d.y;
                img.at(i, j) += p.alpha_tilde * std::exp(-0.5 * e);
            }
        }
    }
    return img;
}

namespace detail {

template <typename Fn>
double adaptive_simpson(Fn&& f, double a, double b, double fa, double fm, double fb,
                        double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::fabs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, left, tol * 0.5, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, tol * 0.5, depth - 1);
}

template <typename Fn>
double integrate(Fn&& f, double a, double b, double tol) {
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

}  // namespace detail

// Numeric ground truth for one primitive and one pixel: integrates
// alpha * g_c(px, py, t) * h(t) over the axial coordinate by adaptive
// quadrature. Works directly from the camera-space covariance, independent
// of the Focus Gaussian decomposition.
inline double render_oracle(const GaussianPrimitive& prim, const SlicePose& pose,
                            const PsfSpec& psf, const Vec2& pixel,
                            double scale_modifier = 1.0) {
    const Mat3 sigma = covariance_from_scale_rotation(prim.scale(), prim.quat, scale_modifier);
    Vec3 mu_c;
    Mat3 sigma_c;
    world_to_camera(prim.mu, sigma, pose, mu_c, sigma_c);
    const Mat3 a = invert_covariance(sigma_c);
    const double alpha = prim.alpha();
    if (alpha == 0.0) return 0.0;

    double ev[3];
    sigma_c.sym_eigenvalues(ev);
    const double sigma_eff = psf.sigma_z + std::sqrt(std::fmax(ev[2], 0.0)) +
                             std::fabs(mu_c.z);
    const double inv_2sz2 = 1.0 / (2.0 * psf.sigma_z * psf.sigma_z);
    auto integrand = [&](double t) {
        const Vec3 d{pixel.x - mu_c.x, pixel.y - mu_c.y, t - mu_c.z};
        return alpha * std::exp(-0.5 * d.dot(a.mul(d))) * std::exp(-t * t * inv_2sz2);
    };
    return detail::integrate(integrand, -8.0 * sigma_eff, 8.0 * sigma_eff, 1e-10);
}

}  // namespace gpile
