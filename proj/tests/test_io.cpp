#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "gpile/image.hpp"
#include "gpile/phantom.hpp"
#include "gpile/volume_io.hpp"
#include "gpile/voxelize.hpp"

using namespace gpile;
namespace fs = std::filesystem;

namespace {

VolumeGrid small_volume() {
    VolumeGrid vol;
    vol.dims[0] = 4;
    vol.dims[1] = 3;
    vol.dims[2] = 2;
    vol.spacing = {0.5, 0.5, 1.0};
    vol.origin = {1.0, 2.0, 3.0};
    vol.data.resize(vol.voxel_count());
    for (std::size_t i = 0; i < vol.data.size(); ++i)
        vol.data[i] = static_cast<double>(static_cast<float>(i) / vol.data.size());
    return vol;
}

}  // namespace

TEST_CASE("volume save/load roundtrip is bitwise for f32 data") {
    const VolumeGrid vol = small_volume();
    const auto path = (fs::temp_directory_path() / "gpile_io_vol.raw").string();
    save_volume(vol, path);
    const VolumeGrid back = load_volume(path);
    CHECK(back.dims[0] == 4);
    CHECK(back.spacing.z == 1.0);
    CHECK(back.origin.y == 2.0);
    REQUIRE(back.data.size() == vol.data.size());
    for (std::size_t i = 0; i < vol.data.size(); ++i) CHECK(back.data[i] == vol.data[i]);
    fs::remove(path);
    fs::remove(path + ".json");
}

TEST_CASE("volume load failure modes") {
    const VolumeGrid vol = small_volume();
    const auto path = (fs::temp_directory_path() / "gpile_io_bad.raw").string();
    save_volume(vol, path);

    SECTION("missing sidecar") {
        fs::remove(path + ".json");
        CHECK_THROWS_AS(load_volume(path), LoadError);
    }
    SECTION("wrong byte count") {
        std::ofstream out(path, std::ios::binary | std::ios::app);
        out.write("abcd", 4);
        out.close();
        CHECK_THROWS_AS(load_volume(path), LoadError);
    }
    SECTION("out-of-range sample") {
        std::ofstream out(path, std::ios::binary);
        std::vector<float> bad(vol.voxel_count(), 7.0f);
        out.write(reinterpret_cast<const char*>(bad.data()), bad.size() * sizeof(float));
        out.close();
        CHECK_THROWS_AS(load_volume(path), LoadError);
    }
    fs::remove(path);
    fs::remove(path + ".json");
}

TEST_CASE("extract_slice matches z-major layout") {
    const VolumeGrid vol = small_volume();
    const SliceImage s1 = extract_slice(vol, 1);
    CHECK(s1.width == 4);
    CHECK(s1.height == 3);
    CHECK(s1.at(2, 1) == vol.at(2, 1, 1));
}

TEST_CASE("pgm16 export writes the expected header and big-endian samples") {
    SliceImage img(2, 2);
    img.at(0, 0) = 0.0;
    img.at(1, 0) = 1.0;
    img.at(0, 1) = 0.5;
    img.at(1, 1) = 2.0;  // clamps to 1
    const auto path = (fs::temp_directory_path() / "gpile_io_img.pgm").string();
    save_pgm16(img, path);

    std::ifstream in(path, std::ios::binary);
    std::string magic, dims, maxval;
    std::getline(in, magic);
    std::getline(in, dims);
    std::getline(in, maxval);
    CHECK(magic == "P5");
    CHECK(dims == "2 2");
    CHECK(maxval == "65535");
    unsigned char bytes[8];
    in.read(reinterpret_cast<char*>(bytes), 8);
    CHECK((bytes[0] << 8 | bytes[1]) == 0);
    CHECK((bytes[2] << 8 | bytes[3]) == 65535);
    CHECK((bytes[4] << 8 | bytes[5]) == 32768);  // round(0.5 * 65535)
    CHECK((bytes[6] << 8 | bytes[7]) == 65535);
    fs::remove(path);
}

TEST_CASE("raw image export carries a sidecar") {
    SliceImage img(3, 2);
    img.at(1, 1) = 0.25;
    const auto path = (fs::temp_directory_path() / "gpile_io_img.raw").string();
    save_image_raw(img, {0.5, 0.75}, path);
    CHECK(fs::file_size(path) == 3 * 2 * sizeof(float));
    std::ifstream side(path + ".json");
    nlohmann::json meta;
    side >> meta;
    CHECK(meta.at("width") == 3);
    CHECK(meta.at("pixel_spacing").at(1) == 0.75);
    fs::remove(path);
    fs::remove(path + ".json");
}

TEST_CASE("phantom trivial cases") {
    PhantomSpec spec;
    spec.dims[0] = spec.dims[1] = spec.dims[2] = 8;
    const Phantom empty = make_phantom(spec);
    for (double v : empty.volume.data) CHECK(v == 0.0);
    CHECK(empty.oracle.size() == 0);

    PhantomSpec one = spec;
    PhantomSpec::Blob blob;
    blob.center = {4.0, 4.0, 4.0};
    blob.scale = {1.2, 1.2, 1.2};
    blob.amplitude = 1.0;
    one.blobs.push_back(blob);
    const Phantom ph = make_phantom(one);
    CHECK(ph.volume.at(4, 4, 4) == Catch::Approx(1.0).margin(1e-9));
    CHECK(ph.oracle.size() == 1);
}

TEST_CASE("phantom is self-consistent with its oracle set") {
    PhantomSpec spec;
    spec.dims[0] = spec.dims[1] = spec.dims[2] = 16;
    PhantomSpec::Blob b1;
    b1.center = {5.0, 6.0, 7.0};
    b1.scale = {2.0, 1.0, 1.5};
    b1.quat = {0.9, 0.1, 0.3, 0.2};
    b1.amplitude = 0.7;
    spec.blobs.push_back(b1);
    PhantomSpec::Blob b2;
    b2.center = {11.0, 10.0, 9.0};
    b2.scale = {1.0, 1.0, 1.0};
    b2.amplitude = 0.4;
    spec.blobs.push_back(b2);

    const Phantom ph = make_phantom(spec);

    VoxelizerConfig cfg;
    for (int d = 0; d < 3; ++d) cfg.dims[d] = spec.dims[d];
    cfg.spacing = spec.spacing;
    cfg.origin = spec.origin;
    cfg.support_sigmas = 12.0;
    VolumeGrid regen = voxelize(ph.oracle, cfg);
    for (double& v : regen.data) v = std::clamp(v, 0.0, 1.0);
    for (std::size_t i = 0; i < regen.data.size(); ++i)
        CHECK(std::fabs(regen.data[i] - ph.volume.data[i]) < 1e-6);
}

TEST_CASE("phantom noise is seeded and clipped") {
    PhantomSpec spec;
    spec.dims[0] = spec.dims[1] = spec.dims[2] = 8;
    PhantomSpec::Blob blob;
    blob.center = {4.0, 4.0, 4.0};
    blob.scale = {1.5, 1.5, 1.5};
    blob.amplitude = 0.9;
    spec.blobs.push_back(blob);
    spec.noise_sigma = 0.05;
    spec.rng_seed = 7;

    const Phantom a = make_phantom(spec);
    const Phantom b = make_phantom(spec);
    for (std::size_t i = 0; i < a.volume.data.size(); ++i) {
        CHECK(a.volume.data[i] == b.volume.data[i]);
        CHECK(a.volume.data[i] >= 0.0);
        CHECK(a.volume.data[i] <= 1.0);
    }
    spec.rng_seed = 8;
    const Phantom c = make_phantom(spec);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.volume.data.size(); ++i)
        any_diff |= a.volume.data[i] != c.volume.data[i];
    CHECK(any_diff);
}

TEST_CASE("phantom spec json roundtrip") {
    PhantomSpec spec;
    spec.dims[0] = 10;
    spec.noise_sigma = 0.02;
    PhantomSpec::Blob blob;
    blob.center = {1.0, 2.0, 3.0};
    blob.scale = {2.0, 1.0, 0.5};
    blob.quat = {0.5, 0.5, 0.5, 0.5};
    blob.amplitude = 0.8;
    spec.blobs.push_back(blob);

    const PhantomSpec back = phantom_spec_from_json(phantom_spec_to_json(spec));
    CHECK(back.dims[0] == 10);
    CHECK(back.noise_sigma == 0.02);
    REQUIRE(back.blobs.size() == 1);
    CHECK(back.blobs[0].amplitude == 0.8);
    CHECK(back.blobs[0].quat.x == 0.5);
    CHECK_THROWS_AS([&] {
        PhantomSpec bad = spec;
        bad.blobs[0].amplitude = 1.5;
        bad.validate();
    }(), std::invalid_argument);
}
