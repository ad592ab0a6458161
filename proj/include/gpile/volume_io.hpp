#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gpile/core.hpp"
#include "gpile/errors.hpp"
#include "gpile/image.hpp"

namespace gpile {

// Volume files are raw little-endian f32 in z-major order next to a JSON
// sidecar {dims, spacing, origin}. `path` names the .raw file; the sidecar
// is `path + ".json"`.

inline void save_volume(const VolumeGrid& vol, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw LoadError("save_volume: cannot open " + path);
    std::vector<float> buf(vol.data.begin(), vol.data.end());
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!out) throw LoadError("save_volume: write failed for " + path);

    nlohmann::json meta{{"dims", {vol.dims[0], vol.dims[1], vol.dims[2]}},
                        {"spacing", {vol.spacing.x, vol.spacing.y, vol.spacing.z}},
                        {"origin", {vol.origin.x, vol.origin.y, vol.origin.z}}};
    std::ofstream side(path + ".json");
    if (!side) throw LoadError("save_volume: cannot open sidecar for " + path);
    side << meta.dump(2) << "\n";
}

inline VolumeGrid load_volume(const std::string& path) {
    std::ifstream side(path + ".json");
    if (!side) throw LoadError("load_volume: missing sidecar " + path + ".json");
    nlohmann::json meta;
    try {
        side >> meta;
    } catch (const nlohmann::json::exception& e) {
        throw LoadError(std::string("load_volume: bad sidecar: ") + e.what());
    }

    VolumeGrid vol;
    try {
        vol.dims[0] = meta.at("dims").at(0).get<int>();
        vol.dims[1] = meta.at("dims").at(1).get<int>();
        vol.dims[2] = meta.at("dims").at(2).get<int>();
        vol.spacing = {meta.at("spacing").at(0).get<double>(),
                       meta.at("spacing").at(1).get<double>(),
                       meta.at("spacing").at(2).get<double>()};
        vol.origin = {meta.at("origin").at(0).get<double>(),
                      meta.at("origin").at(1).get<double>(),
                      meta.at("origin").at(2).get<double>()};
    } catch (const nlohmann::json::exception& e) {
        throw LoadError(std::string("load_volume: sidecar missing fields: ") + e.what());
    }
    if (vol.dims[0] < 1 || vol.dims[1] < 1 || vol.dims[2] < 1)
        throw LoadError("load_volume: non-positive dims in sidecar");

    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("load_volume: cannot open " + path);
    in.seekg(0, std::ios::end);
    const auto bytes = static_cast<std::size_t>(in.tellg());
    in.seekg(0, std::ios::beg);
    const std::size_t expected = vol.voxel_count() * sizeof(float);
    if (bytes != expected)
        throw LoadError("load_volume: size mismatch, expected " + std::to_string(expected) +
                        " bytes, found " + std::to_string(bytes));
    std::vector<float> buf(vol.voxel_count());
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(expected));
    if (!in) throw LoadError("load_volume: short read on " + path);

    vol.data.assign(buf.begin(), buf.end());
    for (double v : vol.data)
        if (!std::isfinite(v) || v < 0.0 || v > 1.0)
            throw LoadError("load_volume: sample out of [0,1] or non-finite");
    return vol;
}

// Slice k of a volume as an image (the rasterizer's training target).
inline SliceImage extract_slice(const VolumeGrid& vol, int k) {
    SliceImage img(vol.dims[0], vol.dims[1]);
    for (int j = 0; j < vol.dims[1]; ++j)
        for (int i = 0; i < vol.dims[0]; ++i) img.at(i, j) = vol.at(i, j, k);
    return img;
}

}  // namespace gpile
