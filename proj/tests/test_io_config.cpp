#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "fretflim/config.hpp"
#include "fretflim/errors.hpp"
#include "fretflim/io.hpp"
#include "fretflim/simulate.hpp"

using namespace fretflim;

namespace {

std::filesystem::path temp_dir() {
    const auto dir = std::filesystem::temp_directory_path() / "fretflim_io_test";
    std::filesystem::create_directories(dir);
    return dir;
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("histogram csv round trip and exact format") {
    const auto dir = temp_dir();
    const auto path = (dir / "hist.csv").string();

    TcspcHistogram h;
    h.grid = TimeGrid{32.0, 4, 64.0};
    h.counts = {0, 7, 123, 4};
    write_histogram_csv(path, h);

    CHECK(slurp(path) == "time_ps,counts\n0,0\n32,7\n64,123\n96,4\n");

    const TcspcHistogram back = read_histogram_csv(path);
    CHECK(back.counts == h.counts);
    CHECK(back.grid.bin_width_ps == 32.0);
    CHECK(back.grid.n_bins == 4);

    SUBCASE("bad header is a format error") {
        std::ofstream out(path, std::ios::binary);
        out << "time,counts\n0,0\n";
        out.close();
        CHECK_THROWS_AS(read_histogram_csv(path), FormatError);
    }
    SUBCASE("non-uniform spacing is a format error") {
        std::ofstream out(path, std::ios::binary);
        out << "time_ps,counts\n0,1\n32,1\n96,1\n";
        out.close();
        CHECK_THROWS_AS(read_histogram_csv(path), FormatError);
    }
    SUBCASE("negative counts are a format error") {
        std::ofstream out(path, std::ios::binary);
        out << "time_ps,counts\n0,1\n32,-3\n";
        out.close();
        CHECK_THROWS_AS(read_histogram_csv(path), FormatError);
    }
}

TEST_CASE("radius curve csv") {
    const auto dir = temp_dir();
    const auto path = (dir / "curve.csv").string();

    RadiusCurve curve;
    curve.points = {{5.0, 11.234567}, {10.0, 8.5}, {15.0, 4.25}};
    write_radius_curve_csv(path, curve);
    CHECK(slurp(path) == "r_nm,tau_eff_ns\n5,11.2346\n10,8.5\n15,4.25\n");

    const RadiusCurve back = read_radius_curve_csv(path);
    REQUIRE(back.points.size() == 3);
    CHECK(back.points[1].tau_eff_ns == 8.5);

    SUBCASE("non-monotone curves are rejected on load") {
        std::ofstream out(path, std::ios::binary);
        out << "r_nm,tau_eff_ns\n5,10\n10,11\n";
        out.close();
        CHECK_THROWS(read_radius_curve_csv(path));
    }
}

TEST_CASE("lifetime map csv round trip") {
    const auto dir = temp_dir();
    const auto path = (dir / "map.csv").string();

    LifetimeMap map;
    map.width_px = 2;
    map.height_px = 2;
    map.pixel_size_nm = 150.0;
    map.pixels.resize(4);
    map.pixels[0] = {PixelClass::OnFlake, 5.1, 0.2, 0.42, 0.03, 10.0, 50.0, 9000, 1.02};
    map.pixels[1] = {PixelClass::OffFlake, 12.1, 0.4, NAN, NAN, 8.0, 0.0, 8000, 0.98};
    map.pixels[2].cls = PixelClass::LowSignal;
    map.pixels[2].tau_slow_ns = NAN;
    map.pixels[2].total_counts = 40;
    map.pixels[3] = {PixelClass::OffFlake, 11.9, 0.5, NAN, NAN, 7.5, 0.0, 7500, 1.10};
    write_lifetime_map_csv(path, map);

    const LifetimeMap back = read_lifetime_map_csv(path);
    CHECK(back.width_px == 2);
    CHECK(back.height_px == 2);
    CHECK(back.pixel_size_nm == 150.0);
    CHECK(back.at(0, 0).cls == PixelClass::OnFlake);
    CHECK(back.at(0, 0).tau_fast_ns == doctest::Approx(0.42));
    CHECK(back.at(0, 1).cls == PixelClass::OffFlake);
    CHECK(std::isnan(back.at(0, 1).tau_fast_ns));
    CHECK(back.at(1, 0).cls == PixelClass::LowSignal);
    CHECK(back.at(1, 0).total_counts == 40);
}

TEST_CASE("flim cube round trip with little-endian payload") {
    const auto dir = temp_dir();
    const auto base = (dir / "cube").string();

    FlimCube cube;
    cube.width_px = 3;
    cube.height_px = 2;
    cube.grid = TimeGrid{64.0, 8, 128.0};
    cube.pixel_size_nm = 120.0;
    cube.seed = 42;
    cube.photons_per_pixel = 500.0;
    cube.counts.assign(3 * 2 * 8, 0);
    for (std::size_t i = 0; i < cube.counts.size(); ++i)
        cube.counts[i] = static_cast<std::uint32_t>(i * 7 + 1);
    cube.counts[5] = 0x01020304;  // byte-order witness

    write_flim_cube(base, cube);
    const FlimCube back = read_flim_cube(base);
    CHECK(back.counts == cube.counts);
    CHECK(back.grid.n_bins == 8);
    CHECK(back.seed.value() == 42);
    CHECK(back.photons_per_pixel.value() == 500.0);

    SUBCASE("payload bytes are little-endian, bin fastest") {
        std::ifstream raw(base + ".raw", std::ios::binary);
        std::string bytes{std::istreambuf_iterator<char>(raw), std::istreambuf_iterator<char>()};
        REQUIRE(bytes.size() == cube.counts.size() * 4);
        CHECK(static_cast<unsigned char>(bytes[5 * 4 + 0]) == 0x04);
        CHECK(static_cast<unsigned char>(bytes[5 * 4 + 1]) == 0x03);
        CHECK(static_cast<unsigned char>(bytes[5 * 4 + 2]) == 0x02);
        CHECK(static_cast<unsigned char>(bytes[5 * 4 + 3]) == 0x01);
    }
    SUBCASE("payload size mismatch is a format error") {
        std::ofstream raw(base + ".raw", std::ios::binary | std::ios::trunc);
        raw << "short";
        raw.close();
        CHECK_THROWS_AS(read_flim_cube(base), FormatError);
    }
    SUBCASE("unknown sidecar key is a format error") {
        std::ofstream meta(base + ".meta", std::ios::binary | std::ios::app);
        meta << "mystery_key = 3\n";
        meta.close();
        CHECK_THROWS_AS(read_flim_cube(base), FormatError);
    }
}

TEST_CASE("run config") {
    SUBCASE("defaults validate and dump/parse round-trips") {
        const RunConfig cfg = RunConfig::defaults();
        cfg.validate();
        const std::string text = cfg.dump();
        const RunConfig back = RunConfig::parse(text);
        CHECK(back.dump() == text);
        CHECK(back.model.foerster_radius_nm == cfg.model.foerster_radius_nm);
        CHECK(back.scene.flakes.size() == cfg.scene.flakes.size());
        CHECK(back.seed == cfg.seed);
    }

    SUBCASE("missing required key names the key") {
        CHECK_THROWS_WITH_AS(RunConfig::parse("model.foerster_radius_nm = 13\n"),
                             doctest::Contains("model.bulk_lifetime_ns"), UsageError);
    }

    SUBCASE("unknown keys are rejected") {
        std::string text = RunConfig::defaults().dump();
        text += "model.unknown_thing = 1\n";
        CHECK_THROWS_WITH_AS(RunConfig::parse(text), doctest::Contains("model.unknown_thing"),
                             UsageError);
    }

    SUBCASE("duplicate keys are rejected") {
        std::string text = RunConfig::defaults().dump();
        text += "sim.seed = 9\n";  // already present
        CHECK_THROWS_WITH_AS(RunConfig::parse(text), doctest::Contains("duplicate"), UsageError);
    }

    SUBCASE("comments and blank lines are ignored") {
        std::string text = "# header comment\n\n" + RunConfig::defaults().dump();
        const RunConfig cfg = RunConfig::parse(text);
        CHECK(cfg.model.bulk_lifetime_ns == 12.0);
    }

    SUBCASE("invariants are revalidated on load") {
        std::string text = RunConfig::defaults().dump();
        const auto pos = text.find("model.distance_exponent = 4");
        REQUIRE(pos != std::string::npos);
        text.replace(pos, std::string("model.distance_exponent = 4").size(),
                     "model.distance_exponent = 5");
        CHECK_THROWS_AS(RunConfig::parse(text), UsageError);
    }
}
