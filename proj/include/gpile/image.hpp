#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gpile/errors.hpp"
#include "gpile/vec.hpp"

namespace gpile {

struct SliceImage {
    int width = 0, height = 0;
    std::vector<double> pixels;  // row-major, pixels[j*width + i]

    SliceImage() = default;
    SliceImage(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, 0.0) {}

    double at(int i, int j) const { return pixels[static_cast<std::size_t>(j) * width + i]; }
    double& at(int i, int j) { return pixels[static_cast<std::size_t>(j) * width + i]; }
    std::size_t size() const { return pixels.size(); }
};

// 16-bit binary PGM. Values clamped to [0,1]; per the format, maxval > 255
// means two bytes per sample, most significant first.
inline void save_pgm16(const SliceImage& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw LoadError("save_pgm16: cannot open " + path);
    out << "P5\n" << img.width << " " << img.height << "\n65535\n";
    for (double v : img.pixels) {
        const double c = std::clamp(v, 0.0, 1.0);
        const auto q = static_cast<std::uint16_t>(std::lround(c * 65535.0));
        const unsigned char bytes[2] = {static_cast<unsigned char>(q >> 8),
                                        static_cast<unsigned char>(q & 0xff)};
        out.write(reinterpret_cast<const char*>(bytes), 2);
    }
    if (!out) throw LoadError("save_pgm16: write failed for " + path);
}

// Raw little-endian f32 with a JSON sidecar describing the geometry.
inline void save_image_raw(const SliceImage& img, const Vec2& pixel_spacing,
                           const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw LoadError("save_image_raw: cannot open " + path);
    std::vector<float> buf(img.pixels.begin(), img.pixels.end());
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!out) throw LoadError("save_image_raw: write failed for " + path);

    nlohmann::json meta{{"width", img.width},
                        {"height", img.height},
                        {"pixel_spacing", {pixel_spacing.x, pixel_spacing.y}}};
    std::ofstream side(path + ".json");
    if (!side) throw LoadError("save_image_raw: cannot open sidecar for " + path);
    side << meta.dump(2) << "\n";
}

}  // namespace gpile
