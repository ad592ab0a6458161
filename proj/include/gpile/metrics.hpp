#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "gpile/core.hpp"
#include "gpile/image.hpp"

namespace gpile {

// Reported instead of +infinity when MSE is exactly zero.
inline constexpr double kPsnrInf = 999.0;

// PSNR in dB on a [0,1] dynamic range.
inline double psnr(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.empty())
        throw std::invalid_argument("psnr: shape mismatch");
    double mse = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.size());
    if (mse == 0.0) return kPsnrInf;
    return 10.0 * std::log10(1.0 / mse);
}

inline double psnr(const SliceImage& a, const SliceImage& b) {
    if (a.width != b.width || a.height != b.height)
        throw std::invalid_argument("psnr: image shape mismatch");
    return psnr(a.pixels, b.pixels);
}

inline double psnr(const VolumeGrid& a, const VolumeGrid& b) {
    for (int d = 0; d < 3; ++d)
        if (a.dims[d] != b.dims[d]) throw std::invalid_argument("psnr: volume shape mismatch");
    return psnr(a.data, b.data);
}

// Mean per-slice PSNR across z. Slices that match exactly would report the
// sentinel and say nothing about fidelity, so they are left out of the mean;
// if every slice matches, the sentinel is returned.
inline double psnr2d_mean(const VolumeGrid& a, const VolumeGrid& b) {
    for (int d = 0; d < 3; ++d)
        if (a.dims[d] != b.dims[d])
            throw std::invalid_argument("psnr2d_mean: volume shape mismatch");
    const std::size_t slice = static_cast<std::size_t>(a.dims[0]) * a.dims[1];
    double acc = 0.0;
    int counted = 0;
    for (int k = 0; k < a.dims[2]; ++k) {
        std::vector<double> sa(a.data.begin() + k * slice, a.data.begin() + (k + 1) * slice);
        std::vector<double> sb(b.data.begin() + k * slice, b.data.begin() + (k + 1) * slice);
        const double p = psnr(sa, sb);
        if (p == kPsnrInf) continue;
        acc += p;
        ++counted;
    }
    return counted > 0 ? acc / counted : kPsnrInf;
}

namespace detail {

// Normalized Gaussian taps, 2*radius+1 wide.
inline std::vector<double> gaussian_window(int radius, double sigma) {
    std::vector<double> w(2 * radius + 1);
    double sum = 0.0;
    for (int t = -radius; t <= radius; ++t) {
        w[t + radius] = std::exp(-0.5 * t * t / (sigma * sigma));
        sum += w[t + radius];
    }
    for (double& v : w) v /= sum;
    return w;
}

inline int reflect_index(int p, int n) {
    while (p < 0 || p >= n) {
        if (p < 0) p = -p - 1;
        if (p >= n) p = 2 * n - 1 - p;
    }
    return p;
}

// Separable correlation with symmetric (edge-including) boundary handling.
// The kernel is symmetric, which makes the whole operator self-adjoint; the
// SSIM backward pass relies on that.
inline void conv_axis(const std::vector<double>& in, std::vector<double>& out,
                      const int dims[3], int nd, int axis, const std::vector<double>& w) {
    const int radius = (static_cast<int>(w.size()) - 1) / 2;
    const int nx = dims[0], ny = dims[1], nz = nd == 3 ? dims[2] : 1;
    out.assign(in.size(), 0.0);
    const std::size_t sx = 1, sy = static_cast<std::size_t>(nx),
                      sz = static_cast<std::size_t>(nx) * ny;
    const int n_axis = axis == 0 ? nx : (axis == 1 ? ny : nz);
    const std::size_t stride = axis == 0 ? sx : (axis == 1 ? sy : sz);
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const std::size_t idx = i * sx + j * sy + k * sz;
                const int p = axis == 0 ? i : (axis == 1 ? j : k);
                const std::size_t base = idx - p * stride;
                double acc = 0.0;
                for (int t = -radius; t <= radius; ++t)
                    acc += w[t + radius] * in[base + reflect_index(p + t, n_axis) * stride];
                out[idx] = acc;
            }
}

inline std::vector<double> conv_nd(const std::vector<double>& in, const int dims[3], int nd,
                                   const std::vector<double>& w) {
    std::vector<double> a = in, b;
    for (int axis = 0; axis < nd; ++axis) {
        conv_axis(a, b, dims, nd, axis, w);
        std::swap(a, b);
    }
    return a;
}

struct SsimMaps {
    std::vector<double> mu_x, mu_y, m2, m12, m2y;  // windowed moments of x, y, x^2, x*y, y^2
    std::vector<double> s;                         // per-location SSIM
};

inline SsimMaps ssim_maps(const std::vector<double>& x, const std::vector<double>& y,
                          const int dims[3], int nd, double c1, double c2,
                          const std::vector<double>& w) {
    SsimMaps maps;
    maps.mu_x = conv_nd(x, dims, nd, w);
    maps.mu_y = conv_nd(y, dims, nd, w);
    std::vector<double> xx(x.size()), xy(x.size()), yy(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        xx[i] = x[i] * x[i];
        xy[i] = x[i] * y[i];
        yy[i] = y[i] * y[i];
    }
    maps.m2 = conv_nd(xx, dims, nd, w);
    maps.m12 = conv_nd(xy, dims, nd, w);
    maps.m2y = conv_nd(yy, dims, nd, w);
    maps.s.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double mx = maps.mu_x[i], my = maps.mu_y[i];
        const double vx = maps.m2[i] - mx * mx;
        const double vy = maps.m2y[i] - my * my;
        const double vxy = maps.m12[i] - mx * my;
        const double a1 = 2.0 * mx * my + c1, a2 = 2.0 * vxy + c2;
        const double b1 = mx * mx + my * my + c1, b2 = vx + vy + c2;
        maps.s[i] = (a1 * a2) / (b1 * b2);
    }
    return maps;
}

}  // namespace detail

inline constexpr double kSsimC1 = 1e-4;   // (0.01)^2 on a unit dynamic range
inline constexpr double kSsimC2 = 9e-4;   // (0.03)^2
inline constexpr int kSsimRadius = 5;     // 11-wide window
inline constexpr double kSsimSigma = 1.5;

// Mean local SSIM over an n-d grid (nd = 2 for images, 3 for volumes).
inline double ssim(const std::vector<double>& x, const std::vector<double>& y,
                   const int dims[3], int nd) {
    if (x.size() != y.size()) throw std::invalid_argument("ssim: shape mismatch");
    const auto w = detail::gaussian_window(kSsimRadius, kSsimSigma);
    const auto maps = detail::ssim_maps(x, y, dims, nd, kSsimC1, kSsimC2, w);
    double acc = 0.0;
    for (double v : maps.s) acc += v;
    return acc / static_cast<double>(maps.s.size());
}

inline double ssim(const SliceImage& a, const SliceImage& b) {
    if (a.width != b.width || a.height != b.height)
        throw std::invalid_argument("ssim: image shape mismatch");
    const int dims[3] = {a.width, a.height, 1};
    return ssim(a.pixels, b.pixels, dims, 2);
}

inline double ssim(const VolumeGrid& a, const VolumeGrid& b) {
    for (int d = 0; d < 3; ++d)
        if (a.dims[d] != b.dims[d]) throw std::invalid_argument("ssim: volume shape mismatch");
    return ssim(a.data, b.data, a.dims, 3);
}

// Mean SSIM and its gradient with respect to x. The chain runs through the
// three windowed moments of x; the self-adjoint window convolution carries
// each per-window partial back onto the contributing samples.
inline double ssim_with_gradient(const std::vector<double>& x, const std::vector<double>& y,
                                 const int dims[3], int nd, std::vector<double>& grad_x) {
    if (x.size() != y.size()) throw std::invalid_argument("ssim: shape mismatch");
    const double c1 = kSsimC1, c2 = kSsimC2;
    const auto w = detail::gaussian_window(kSsimRadius, kSsimSigma);
    const auto maps = detail::ssim_maps(x, y, dims, nd, c1, c2, w);

    const std::size_t n = x.size();
    const double inv_n = 1.0 / static_cast<double>(n);
    double mean = 0.0;
    std::vector<double> g1(n), g2(n), g3(n);  // dS/dm1, dS/dm2, dS/dm12 scaled by 1/N
    for (std::size_t i = 0; i < n; ++i) {
        const double mx = maps.mu_x[i], my = maps.mu_y[i];
        const double vx = maps.m2[i] - mx * mx;
        const double vy = maps.m2y[i] - my * my;
        const double vxy = maps.m12[i] - mx * my;
        const double a1 = 2.0 * mx * my + c1, a2 = 2.0 * vxy + c2;
        const double b1 = mx * mx + my * my + c1, b2 = vx + vy + c2;
        const double s = maps.s[i];
        mean += s;
        const double inv_b1b2 = 1.0 / (b1 * b2);
        const double ds_dm2 = -s / b2;
        const double ds_dm12 = 2.0 * a1 * inv_b1b2;
        const double ds_dm1 = 2.0 * my * a2 * inv_b1b2 - 2.0 * mx * s / b1 +
                              2.0 * mx * s / b2 - 2.0 * my * a1 * inv_b1b2;
        g1[i] = ds_dm1 * inv_n;
        g2[i] = ds_dm2 * inv_n;
        g3[i] = ds_dm12 * inv_n;
    }
    mean *= inv_n;

    const auto a1b = detail::conv_nd(g1, dims, nd, w);
    const auto a2b = detail::conv_nd(g2, dims, nd, w);
    const auto a3b = detail::conv_nd(g3, dims, nd, w);
    grad_x.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        grad_x[i] = a1b[i] + 2.0 * x[i] * a2b[i] + y[i] * a3b[i];
    return mean;
}

}  // namespace gpile
