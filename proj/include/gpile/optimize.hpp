#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gpile/backward.hpp"
#include "gpile/core.hpp"
#include "gpile/errors.hpp"
#include "gpile/loss.hpp"
#include "gpile/metrics.hpp"
#include "gpile/render.hpp"
#include "gpile/rng.hpp"
#include "gpile/volume_io.hpp"

namespace gpile {

struct FitConfig {
    int iterations = 30000;
    double lr_position = 0.0006;
    double lr_opacity = 0.02;
    double lr_scale = 0.002;
    double lr_rotation = 0.001;
    std::size_t init_count = 0;  // 0 -> desk-scale default from the voxel count
    double tau = 0.02;
    int densify_start = 500;
    int densify_end = 25000;
    double grad_threshold = 5e-5;
    double lambda = 0.2;
    int densify_interval = 100;
    std::uint64_t rng_seed = 0;

    // Policy knobs.
    std::string init_mode = "random";     // "random" | "grid"
    double scale_modifier = 1.0;          // "mod" in the covariance factorization
    double split_scale_fraction = 0.01;   // split when max scale > fraction * extent
    double split_scale_divisor = 1.6;
    double dssim_scale = 0.5;             // D-SSIM = dssim_scale * (1 - SSIM)
    int progress_interval = 200;
    int tile_size = 16;
    double footprint_sigmas = 3.0;

    void validate() const {
        if (iterations < 1) throw std::invalid_argument("FitConfig: iterations must be >= 1");
        if (!(lr_position > 0.0) || !(lr_opacity > 0.0) || !(lr_scale > 0.0) ||
            !(lr_rotation > 0.0))
            throw std::invalid_argument("FitConfig: learning rates must be > 0");
        if (!(densify_start < densify_end))
            throw std::invalid_argument("FitConfig: densify_start must be < densify_end");
        if (densify_interval < 1)
            throw std::invalid_argument("FitConfig: densify_interval must be >= 1");
        if (lambda < 0.0) throw std::invalid_argument("FitConfig: lambda must be >= 0");
        if (!(tau >= 0.0 && tau < 1.0)) throw std::invalid_argument("FitConfig: tau in [0,1)");
        if (init_mode != "random" && init_mode != "grid")
            throw std::invalid_argument("FitConfig: init_mode must be random or grid");
    }

    RasterConfig raster() const {
        return RasterConfig{tau, tile_size, footprint_sigmas, scale_modifier};
    }
};

inline std::size_t default_init_count(std::size_t voxel_count) {
    return std::max<std::size_t>(1, std::min<std::size_t>(100000, 4 * voxel_count / 1000));
}

// lr(t) = lr0 * 0.1^(t/T): decays exponentially to 0.1x over the run.
inline double lr_at(double lr0, int iteration, int total) {
    return lr0 * std::pow(0.1, static_cast<double>(iteration - 1) / total);
}

// ---------------------------------------------------------------------------
// Initialization
// ---------------------------------------------------------------------------

namespace detail {

inline GaussianPrimitive sample_shape(Rng& rng, double scale_base) {
    GaussianPrimitive g;
    for (int d = 0; d < 3; ++d)
        g.log_scale[d] = std::log(scale_base * (1.0 + rng.uniform(-0.2, 0.2)));
    g.quat = rng.unit_quaternion();
    g.alpha_raw = alpha_activation_inverse(0.1 * (1.0 + rng.uniform(-0.5, 0.5)));
    return g;
}

}  // namespace detail

// Uniform positions in bbox, exposed scale scale_base jittered +-20%,
// orientations uniform on the unit sphere, exposed alpha 0.1 jittered +-50%.
inline GaussianSet init_random(std::size_t count, const Bounds& bbox, double scale_base,
                               std::uint64_t seed) {
    if (count < 1) throw std::invalid_argument("init_random: count must be >= 1");
    if (bbox.degenerate()) throw std::invalid_argument("init_random: degenerate bbox");
    Rng rng(seed);
    GaussianSet set;
    set.bbox = bbox;
    set.primitives.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        GaussianPrimitive g = detail::sample_shape(rng, scale_base);
        g.mu = rng.uniform_in_box(bbox.min, bbox.max);
        set.primitives[i] = g;
    }
    return set;
}

// ceil(M^(1/3))^3 lattice of cell centers, truncated to count.
inline GaussianSet init_grid(std::size_t count, const Bounds& bbox, double scale_base,
                             std::uint64_t seed) {
    if (count < 1) throw std::invalid_argument("init_grid: count must be >= 1");
    if (bbox.degenerate()) throw std::invalid_argument("init_grid: degenerate bbox");
    Rng rng(seed);
    GaussianSet set;
    set.bbox = bbox;
    set.primitives.reserve(count);
    // Tolerance guards against cbrt(27) landing just above 3.
    auto n = static_cast<std::size_t>(std::ceil(std::cbrt(static_cast<double>(count)) - 1e-9));
    while (n * n * n < count) ++n;
    const Vec3 ext = bbox.extent();
    for (std::size_t k = 0; k < n && set.size() < count; ++k)
        for (std::size_t j = 0; j < n && set.size() < count; ++j)
            for (std::size_t i = 0; i < n && set.size() < count; ++i) {
                GaussianPrimitive g = detail::sample_shape(rng, scale_base);
                g.mu = bbox.min + Vec3{(i + 0.5) / n * ext.x, (j + 0.5) / n * ext.y,
                                       (k + 0.5) / n * ext.z};
                set.primitives.push_back(g);
            }
    return set;
}

// ---------------------------------------------------------------------------
// Slice sampling
// ---------------------------------------------------------------------------

struct SliceSample {
    int index = 0;
    SlicePose pose;
    SliceImage target;
};

inline SliceSample sample_slice(const VolumeGrid& vol, Rng& rng) {
    SliceSample s;
    s.index = static_cast<int>(rng.below(static_cast<std::uint64_t>(vol.dims[2])));
    s.pose = slice_pose_for_index(vol, s.index);
    s.target = extract_slice(vol, s.index);
    return s;
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamState {
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    long step = 0;
    std::vector<Vec3> m_mu, v_mu, m_ls, v_ls;
    std::vector<Vec4> m_q, v_q;
    std::vector<double> m_a, v_a;

    explicit AdamState(std::size_t n = 0) { resize(n); }

    void resize(std::size_t n) {
        m_mu.assign(n, Vec3{});
        v_mu.assign(n, Vec3{});
        m_ls.assign(n, Vec3{});
        v_ls.assign(n, Vec3{});
        m_q.assign(n, Vec4{});
        v_q.assign(n, Vec4{});
        m_a.assign(n, 0.0);
        v_a.assign(n, 0.0);
    }
    std::size_t size() const { return m_a.size(); }
};

struct LearningRates {
    double position, opacity, scale, rotation;
};

namespace detail {

inline double adam_update(double& m, double& v, double g, double lr, const AdamState& st,
                          double bc1, double bc2) {
    m = st.beta1 * m + (1.0 - st.beta1) * g;
    v = st.beta2 * v + (1.0 - st.beta2) * g * g;
    return lr * (m / bc1) / (std::sqrt(v / bc2) + st.eps);
}

}  // namespace detail

// One bias-corrected Adam step per parameter group. Quaternions are
// re-normalized afterwards and positions are clamped into the bbox.
inline void adam_step(GaussianSet& set, const GaussianGradients& grads, AdamState& state,
                      const LearningRates& lrs) {
    if (grads.size() != set.size() || state.size() != set.size())
        throw std::invalid_argument("adam_step: shape mismatch");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    parallel_for(0, set.size(), [&](std::size_t i) {
        GaussianPrimitive& g = set.primitives[i];
        Vec3 mu = g.mu;
        for (int d = 0; d < 3; ++d) {
            mu[d] -= detail::adam_update(state.m_mu[i][d], state.v_mu[i][d], grads.d_mu[i][d],
                                         lrs.position, state, bc1, bc2);
            g.log_scale[d] -= detail::adam_update(state.m_ls[i][d], state.v_ls[i][d],
                                                  grads.d_log_scale[i][d], lrs.scale, state,
                                                  bc1, bc2);
        }
        g.mu = set.bbox.clamp(mu);
        for (int d = 0; d < 4; ++d)
            g.quat[d] -= detail::adam_update(state.m_q[i][d], state.v_q[i][d],
                                             grads.d_quat[i][d], lrs.rotation, state, bc1, bc2);
        const double qn = g.quat.norm();
        if (qn > 0.0) g.quat = g.quat * (1.0 / qn);
        g.alpha_raw -= detail::adam_update(state.m_a[i], state.v_a[i], grads.d_alpha_raw[i],
                                           lrs.opacity, state, bc1, bc2);
    });
}

// ---------------------------------------------------------------------------
// Adaptive density control
// ---------------------------------------------------------------------------

// Running screen-space gradient statistics between densify events.
struct DensifyAccum {
    std::vector<double> grad_norm_sum;
    std::vector<int> observations;
    std::vector<Vec3> world_grad_sum;

    explicit DensifyAccum(std::size_t n = 0) { reset(n); }
    void reset(std::size_t n) {
        grad_norm_sum.assign(n, 0.0);
        observations.assign(n, 0);
        world_grad_sum.assign(n, Vec3{});
    }
    void add(const ScreenGradStats& stats) {
        for (std::size_t i = 0; i < grad_norm_sum.size(); ++i) {
            if (!stats.observed[i]) continue;
            grad_norm_sum[i] += stats.mu2d_grad_norm[i];
            observations[i] += 1;
            world_grad_sum[i] += stats.world_pos_grad[i];
        }
    }
};

struct DensifyReport {
    std::size_t pruned = 0, cloned = 0, split = 0;
};

// Prune primitives with exposed alpha < tau, plus primitives that were
// render-culled on every training slice of the window (they receive no
// gradient and cannot recover, so they are dead weight). Primitives whose
// mean screen gradient exceeds the threshold are cloned (small ones, offset
// along the accumulated gradient direction) or split in two (children
// sampled from the parent, scales divided). New primitives start with zero
// Adam moments.
inline DensifyReport densify_and_prune(GaussianSet& set, AdamState& adam,
                                       const DensifyAccum& accum, const FitConfig& cfg,
                                       Rng& rng) {
    DensifyReport report;
    const std::size_t n = set.size();
    const Vec3 ext = set.bbox.extent();
    const double scene_extent = std::fmax(ext.x, std::fmax(ext.y, ext.z));
    const double split_threshold = cfg.split_scale_fraction * scene_extent;

    std::vector<GaussianPrimitive> next;
    std::vector<long> moment_source;  // index into the old state, -1 for fresh
    next.reserve(n + n / 4);
    moment_source.reserve(n + n / 4);
    std::vector<GaussianPrimitive> born;

    for (std::size_t i = 0; i < n; ++i) {
        const GaussianPrimitive& g = set.primitives[i];
        if (g.alpha() < cfg.tau || accum.observations[i] == 0) {
            ++report.pruned;
            continue;
        }
        const int obs = accum.observations[i];
        const double mean_grad = obs > 0 ? accum.grad_norm_sum[i] / obs : 0.0;
        if (mean_grad <= cfg.grad_threshold) {
            next.push_back(g);
            moment_source.push_back(static_cast<long>(i));
            continue;
        }
        const Vec3 s = g.scale();
        const double max_scale = std::fmax(s.x, std::fmax(s.y, s.z));
        if (max_scale <= split_threshold) {
            // Clone: keep the original, offset the copy along the accumulated
            // positional gradient direction, scaled by the current scale.
            next.push_back(g);
            moment_source.push_back(static_cast<long>(i));
            GaussianPrimitive c = g;
            Vec3 dir = accum.world_grad_sum[i];
            const double dn = dir.norm();
            if (dn > 0.0) {
                dir = dir * (1.0 / dn);
                c.mu = set.bbox.clamp(c.mu + dir.cwise(s));
            }
            born.push_back(c);
            ++report.cloned;
        } else {
            // Split: replace the parent by two children drawn from it.
            const Mat3 rot = quat_to_rotation(g.quat);
            const double shrink = std::log(cfg.split_scale_divisor);
            for (int child = 0; child < 2; ++child) {
                GaussianPrimitive c = g;
                const Vec3 xi{rng.normal(), rng.normal(), rng.normal()};
                c.mu = set.bbox.clamp(g.mu + rot.mul(s.cwise(xi) * cfg.scale_modifier));
                c.log_scale = c.log_scale - Vec3{shrink, shrink, shrink};
                born.push_back(c);
            }
            ++report.split;
        }
    }

    for (const auto& b : born) {
        next.push_back(b);
        moment_source.push_back(-1);
    }

    AdamState fresh(next.size());
    fresh.beta1 = adam.beta1;
    fresh.beta2 = adam.beta2;
    fresh.eps = adam.eps;
    fresh.step = adam.step;
    for (std::size_t i = 0; i < next.size(); ++i) {
        const long src = moment_source[i];
        if (src < 0) continue;
        fresh.m_mu[i] = adam.m_mu[src];
        fresh.v_mu[i] = adam.v_mu[src];
        fresh.m_ls[i] = adam.m_ls[src];
        fresh.v_ls[i] = adam.v_ls[src];
        fresh.m_q[i] = adam.m_q[src];
        fresh.v_q[i] = adam.v_q[src];
        fresh.m_a[i] = adam.m_a[src];
        fresh.v_a[i] = adam.v_a[src];
    }
    set.primitives = std::move(next);
    adam = std::move(fresh);
    return report;
}

// ---------------------------------------------------------------------------
// Fit loop
// ---------------------------------------------------------------------------

struct FitProgress {
    int iteration = 0;
    double loss = 0.0;          // photometric loss on this iteration's slice
    std::size_t count = 0;
    double psnr2d = 0.0;        // monitor slice, clamped render
    double monitor_loss = 0.0;  // photometric loss on the monitor slice
};

using ProgressSink = std::function<void(const FitProgress&)>;

inline GaussianSet fit(const VolumeGrid& volume, const PsfSpec& psf, const FitConfig& cfg,
                       const ProgressSink& progress = nullptr) {
    volume.validate();
    psf.validate();
    cfg.validate();

    const Bounds bbox = volume.world_bounds();
    const double scale_base =
        1.5 * (volume.spacing.x + volume.spacing.y + volume.spacing.z) / 3.0;
    const std::size_t m =
        cfg.init_count > 0 ? cfg.init_count : default_init_count(volume.voxel_count());

    GaussianSet set = cfg.init_mode == "grid"
                          ? init_grid(m, bbox, scale_base, cfg.rng_seed)
                          : init_random(m, bbox, scale_base, cfg.rng_seed);
    AdamState adam(set.size());
    DensifyAccum accum(set.size());
    Rng rng(cfg.rng_seed + 0x9e3779b97f4a7c15ull);
    const RasterConfig rcfg = cfg.raster();

    const int monitor_slice = volume.dims[2] / 2;
    const SliceImage monitor_target = extract_slice(volume, monitor_slice);

    for (int it = 1; it <= cfg.iterations; ++it) {
        try {
            SliceSample sample = sample_slice(volume, rng);
            const auto prep = prepare_gaussians(set, sample.pose, psf, rcfg);
            const SliceImage rendered = rasterize_prepared(prep, sample.pose, rcfg);

            SliceImage dl_di;
            const double loss = photometric_loss(rendered, sample.target, cfg.lambda, dl_di,
                                                 cfg.dssim_scale);

            ScreenGradStats stats;
            const GaussianGradients grads =
                backward_prepared(set, prep, sample.pose, dl_di, rcfg, &stats);
            accum.add(stats);

            const LearningRates lrs{lr_at(cfg.lr_position, it, cfg.iterations),
                                    lr_at(cfg.lr_opacity, it, cfg.iterations),
                                    lr_at(cfg.lr_scale, it, cfg.iterations),
                                    lr_at(cfg.lr_rotation, it, cfg.iterations)};
            adam_step(set, grads, adam, lrs);

            if (it >= cfg.densify_start && it <= cfg.densify_end &&
                it % cfg.densify_interval == 0) {
                densify_and_prune(set, adam, accum, cfg, rng);
                accum.reset(set.size());
            }

            if (progress && (it % cfg.progress_interval == 0 || it == cfg.iterations)) {
                SliceImage mon = rasterize_slice(set, slice_pose_for_index(volume, monitor_slice),
                                                 psf, rcfg);
                SliceImage unused;
                const double mon_loss = photometric_loss(mon, monitor_target, cfg.lambda,
                                                         unused, cfg.dssim_scale);
                for (double& v : mon.pixels) v = std::clamp(v, 0.0, 1.0);
                progress(FitProgress{it, loss, set.size(), psnr(mon, monitor_target), mon_loss});
            }
        } catch (const NumericFailure& e) {
            throw NumericFailure("fit: iteration " + std::to_string(it) + ": " + e.what());
        }
    }
    return set;
}

}  // namespace gpile
