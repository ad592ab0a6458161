#pragma once

#include <cmath>
#include <stdexcept>

#include "gpile/image.hpp"
#include "gpile/metrics.hpp"

namespace gpile {

// L = L1 + lambda * dssim_scale * (1 - SSIM). dssim_scale defaults to 1/2,
// i.e. the D-SSIM form (1 - SSIM)/2.
inline double photometric_loss(const SliceImage& rendered, const SliceImage& target,
                               double lambda, SliceImage& dl_di, double dssim_scale = 0.5) {
    if (rendered.width != target.width || rendered.height != target.height)
        throw std::invalid_argument("photometric_loss: image shape mismatch");
    const std::size_t n = rendered.size();
    const double inv_n = 1.0 / static_cast<double>(n);

    dl_di = SliceImage(rendered.width, rendered.height);
    double l1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = rendered.pixels[i] - target.pixels[i];
        l1 += std::fabs(d);
        dl_di.pixels[i] = (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)) * inv_n;
    }
    l1 *= inv_n;

    if (lambda == 0.0) return l1;

    const int dims[3] = {rendered.width, rendered.height, 1};
    std::vector<double> g_ssim;
    const double s = ssim_with_gradient(rendered.pixels, target.pixels, dims, 2, g_ssim);
    for (std::size_t i = 0; i < n; ++i)
        dl_di.pixels[i] += lambda * dssim_scale * (-g_ssim[i]);
    return l1 + lambda * dssim_scale * (1.0 - s);
}

}  // namespace gpile
