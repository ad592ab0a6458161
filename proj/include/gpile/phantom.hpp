#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "gpile/core.hpp"
#include "gpile/rng.hpp"
#include "gpile/voxelize.hpp"

namespace gpile {

// Synthetic ground truth with a known Gaussian decomposition: the returned
// set reproduces the volume (up to noise and clipping), so it serves as the
// fit oracle.
struct PhantomSpec {
    int dims[3] = {64, 64, 64};
    Vec3 spacing{1.0, 1.0, 1.0};
    Vec3 origin{0.0, 0.0, 0.0};

    struct Blob {
        Vec3 center;
        Vec3 scale;                 // world units
        Vec4 quat{1.0, 0.0, 0.0, 0.0};
        double amplitude = 0.5;     // in (0, 1]
    };
    std::vector<Blob> blobs;
    double noise_sigma = 0.0;
    std::uint64_t rng_seed = 0;

    void validate() const {
        if (dims[0] < 1 || dims[1] < 1 || dims[2] < 1)
            throw std::invalid_argument("PhantomSpec: dims must be >= 1");
        if (!(spacing.x > 0.0) || !(spacing.y > 0.0) || !(spacing.z > 0.0))
            throw std::invalid_argument("PhantomSpec: spacing must be positive");
        if (noise_sigma < 0.0)
            throw std::invalid_argument("PhantomSpec: noise_sigma must be >= 0");
        for (const Blob& b : blobs) {
            if (!(b.amplitude > 0.0) || b.amplitude > 1.0)
                throw std::invalid_argument("PhantomSpec: amplitudes must be in (0, 1]");
            if (!(b.scale.x > 0.0) || !(b.scale.y > 0.0) || !(b.scale.z > 0.0))
                throw std::invalid_argument("PhantomSpec: blob scales must be positive");
        }
    }
};

struct Phantom {
    VolumeGrid volume;
    GaussianSet oracle;
};

inline Phantom make_phantom(const PhantomSpec& spec) {
    spec.validate();

    GaussianSet set;
    VolumeGrid geom;
    geom.dims[0] = spec.dims[0];
    geom.dims[1] = spec.dims[1];
    geom.dims[2] = spec.dims[2];
    geom.spacing = spec.spacing;
    geom.origin = spec.origin;
    set.bbox = geom.world_bounds();
    for (const PhantomSpec::Blob& b : spec.blobs) {
        GaussianPrimitive g;
        g.mu = set.bbox.clamp(b.center);
        g.log_scale = {std::log(b.scale.x), std::log(b.scale.y), std::log(b.scale.z)};
        g.quat = b.quat * (1.0 / b.quat.norm());
        g.alpha_raw = alpha_activation_inverse(b.amplitude);
        set.primitives.push_back(g);
    }

    VoxelizerConfig vcfg;
    vcfg.dims[0] = spec.dims[0];
    vcfg.dims[1] = spec.dims[1];
    vcfg.dims[2] = spec.dims[2];
    vcfg.spacing = spec.spacing;
    vcfg.origin = spec.origin;
    vcfg.support_sigmas = 12.0;
    VolumeGrid vol = voxelize(set, vcfg);

    if (spec.noise_sigma > 0.0) {
        Rng rng(spec.rng_seed);
        for (double& v : vol.data) v += spec.noise_sigma * rng.normal();
    }
    for (double& v : vol.data) v = std::clamp(v, 0.0, 1.0);
    return {std::move(vol), std::move(set)};
}

// ---------------------------------------------------------------------------
// JSON (CLI phantom spec files)
// ---------------------------------------------------------------------------

inline PhantomSpec phantom_spec_from_json(const nlohmann::json& j) {
    PhantomSpec spec;
    if (j.contains("dims"))
        for (int d = 0; d < 3; ++d) spec.dims[d] = j.at("dims").at(d).get<int>();
    if (j.contains("spacing"))
        spec.spacing = {j.at("spacing").at(0).get<double>(), j.at("spacing").at(1).get<double>(),
                        j.at("spacing").at(2).get<double>()};
    if (j.contains("origin"))
        spec.origin = {j.at("origin").at(0).get<double>(), j.at("origin").at(1).get<double>(),
                       j.at("origin").at(2).get<double>()};
    spec.noise_sigma = j.value("noise_sigma", 0.0);
    spec.rng_seed = j.value("rng_seed", std::uint64_t{0});
    if (j.contains("blobs")) {
        for (const auto& jb : j.at("blobs")) {
            PhantomSpec::Blob b;
            b.center = {jb.at("center").at(0).get<double>(), jb.at("center").at(1).get<double>(),
                        jb.at("center").at(2).get<double>()};
            b.scale = {jb.at("scale").at(0).get<double>(), jb.at("scale").at(1).get<double>(),
                       jb.at("scale").at(2).get<double>()};
            if (jb.contains("quat"))
                b.quat = {jb.at("quat").at(0).get<double>(), jb.at("quat").at(1).get<double>(),
                          jb.at("quat").at(2).get<double>(), jb.at("quat").at(3).get<double>()};
            b.amplitude = jb.value("amplitude", 0.5);
            spec.blobs.push_back(b);
        }
    }
    return spec;
}

inline nlohmann::json phantom_spec_to_json(const PhantomSpec& spec) {
    nlohmann::json j{{"dims", {spec.dims[0], spec.dims[1], spec.dims[2]}},
                     {"spacing", {spec.spacing.x, spec.spacing.y, spec.spacing.z}},
                     {"origin", {spec.origin.x, spec.origin.y, spec.origin.z}},
                     {"noise_sigma", spec.noise_sigma},
                     {"rng_seed", spec.rng_seed}};
    j["blobs"] = nlohmann::json::array();
    for (const auto& b : spec.blobs)
        j["blobs"].push_back({{"center", {b.center.x, b.center.y, b.center.z}},
                              {"scale", {b.scale.x, b.scale.y, b.scale.z}},
                              {"quat", {b.quat.w, b.quat.x, b.quat.y, b.quat.z}},
                              {"amplitude", b.amplitude}});
    return j;
}

}  // namespace gpile
