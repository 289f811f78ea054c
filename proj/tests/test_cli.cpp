// End-to-end exercises of the command line tool: exit codes, file outputs,
// reproducibility across runs and thread counts.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#ifndef FRETFLIM_CLI_PATH
#error "FRETFLIM_CLI_PATH must point at the built binary"
#endif

namespace {

namespace fs = std::filesystem;

struct RunResult {
    int exit_code = -1;
    std::string output;
};

RunResult run_cli(const std::string& args) {
    const std::string cmd = std::string(FRETFLIM_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    RunResult result;
    char buf[512];
    while (fgets(buf, sizeof buf, pipe)) result.output += buf;
    const int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

fs::path work_dir() {
    const auto dir = fs::temp_directory_path() / "fretflim_cli_test";
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST_CASE("budget subcommand prints the dwell time") {
    const RunResult r = run_cli("budget --count-rate 70000 --min-photons 1000");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("14.29 ms") != std::string::npos);
}

TEST_CASE("budget rejects a zero rate with a usage exit") {
    const RunResult r = run_cli("budget --count-rate 0 --min-photons 1000");
    CHECK(r.exit_code == 2);
}

TEST_CASE("simulate-decay writes a histogram and reproduces bit-identically") {
    const auto dir = work_dir();
    const auto a = dir / "decay_a.csv";
    const auto b = dir / "decay_b.csv";
    const RunResult r1 =
        run_cli("simulate-decay --out " + q(a) + " --photons 200000 --seed 11");
    REQUIRE(r1.exit_code == 0);
    const RunResult r2 =
        run_cli("simulate-decay --out " + q(b) + " --photons 200000 --seed 11");
    REQUIRE(r2.exit_code == 0);
    CHECK(slurp(a) == slurp(b));

    SUBCASE("different seed changes the file") {
        const auto c = dir / "decay_c.csv";
        run_cli("simulate-decay --out " + q(c) + " --photons 200000 --seed 12");
        CHECK(slurp(a) != slurp(c));
    }
    SUBCASE("header is exact") {
        CHECK(slurp(a).rfind("time_ps,counts\n", 0) == 0);
    }
    SUBCASE("plot emission writes an svg") {
        const auto svg = dir / "decay.svg";
        const RunResult r = run_cli("simulate-decay --out " + q(dir / "tmp.csv") +
                                    " --photons 50000 --seed 1 --plot " + q(svg));
        REQUIRE(r.exit_code == 0);
        CHECK(slurp(svg).find("<svg") != std::string::npos);
    }
}

TEST_CASE("fit-decay on a simulated file recovers both components") {
    const auto dir = work_dir();
    const auto hist = dir / "two_comp.csv";
    const auto report = dir / "report.csv";
    // Paper-like composition: bright fast acceptor over the quenched donor.
    const auto cfg = dir / "sim.cfg";
    {
        std::ofstream out(cfg);
        out << "model.foerster_radius_nm = 13\n"
            << "model.bulk_lifetime_ns = 12\n"
            << "model.distance_exponent = 4\n"
            << "model.depth_mean_nm = 6.5\n"
            << "model.depth_sigma_nm = 2.7\n"
            << "signal.acceptor_weight = 5\n"
            << "signal.acceptor_lifetime_ns = 0.41\n"
            << "sim.total_photons = 1000000\n"
            << "sim.seed = 4\n";
    }
    REQUIRE(run_cli("simulate-decay --config " + q(cfg) + " --out " + q(hist)).exit_code == 0);

    const RunResult fit = run_cli("fit-decay --in " + q(hist) + " --components 2 --report " +
                                  q(report));
    REQUIRE(fit.exit_code == 0);
    CHECK(fit.output.find("converged") != std::string::npos);
    CHECK(slurp(report).find("lifetime_ns_1") != std::string::npos);

    SUBCASE("three components are a usage error") {
        const RunResult r = run_cli("fit-decay --in " + q(hist) + " --components 3");
        CHECK(r.exit_code == 2);
    }
    SUBCASE("missing file is an error exit") {
        const RunResult r = run_cli("fit-decay --in /nonexistent/h.csv");
        CHECK(r.exit_code != 0);
    }
}

TEST_CASE("config handling") {
    const auto dir = work_dir();
    SUBCASE("missing required key names the key and exits 2") {
        const auto cfg = dir / "incomplete.cfg";
        {
            std::ofstream out(cfg);
            out << "model.foerster_radius_nm = 13\n";
        }
        const RunResult r =
            run_cli("simulate-decay --config " + q(cfg) + " --out " + q(dir / "x.csv"));
        CHECK(r.exit_code == 2);
        CHECK(r.output.find("model.bulk_lifetime_ns") != std::string::npos);
    }
    SUBCASE("dump-config round trip") {
        const RunResult dump = run_cli("simulate-decay --dump-config");
        REQUIRE(dump.exit_code == 0);
        const auto cfg = dir / "echo.cfg";
        {
            std::ofstream out(cfg);
            out << dump.output;
        }
        const RunResult redump = run_cli("simulate-decay --config " + q(cfg) + " --dump-config");
        REQUIRE(redump.exit_code == 0);
        CHECK(redump.output == dump.output);
    }
}

TEST_CASE("invert-radius from a stored curve") {
    const auto dir = work_dir();
    const auto curve = dir / "curve.csv";
    {
        std::ofstream out(curve);
        out << "r_nm,tau_eff_ns\n8,8.2\n10,6.9\n12,5.8\n14,4.8\n16,4.0\n18,3.4\n";
    }
    const RunResult r = run_cli("invert-radius --tau-eff 5.3 --sigma 0.2 --curve " + q(curve));
    REQUIRE(r.exit_code == 0);
    CHECK(r.output.find("R = ") != std::string::npos);

    SUBCASE("out-of-range lifetime exits 2 and names the interval") {
        const RunResult bad = run_cli("invert-radius --tau-eff 100 --curve " + q(curve));
        CHECK(bad.exit_code == 2);
        CHECK(bad.output.find("calibrated range") != std::string::npos);
    }
}

TEST_CASE("flim pipeline: simulate, fit, edge; thread-count invariance") {
    const auto dir = work_dir();
    const auto cfg = dir / "flim.cfg";
    {
        std::ofstream out(cfg);
        out << "model.foerster_radius_nm = 13\n"
            << "model.bulk_lifetime_ns = 12\n"
            << "model.distance_exponent = 4\n"
            << "model.depth_mean_nm = 6.5\n"
            << "model.depth_sigma_nm = 2.7\n"
            << "grid.bin_width_ps = 64\n"
            << "grid.n_bins = 2048\n"
            << "grid.origin_ps = 2048\n"
            << "scene.width_px = 24\n"
            << "scene.height_px = 8\n"
            << "scene.pixel_size_nm = 100\n"
            << "scene.psf_fwhm_nm = 300\n"
            << "scene.photons_per_pixel = 4000\n"
            << "scene.flake.0 = 1200,0 2400,0 2400,800 1200,800\n"
            << "scene.on.acceptor_weight = 5\n";
    }

    const auto cube1 = dir / "cube_t1";
    const auto cube4 = dir / "cube_t4";
    REQUIRE(run_cli("simulate-flim --config " + q(cfg) + " --out " + q(cube1) +
                    " --seed 5 --threads 1")
                .exit_code == 0);
    REQUIRE(run_cli("simulate-flim --config " + q(cfg) + " --out " + q(cube4) +
                    " --seed 5 --threads 4")
                .exit_code == 0);
    CHECK(slurp(cube1.string() + ".raw") == slurp(cube4.string() + ".raw"));
    CHECK(slurp(cube1.string() + ".meta") == slurp(cube4.string() + ".meta"));

    const auto map1 = dir / "map_t1.csv";
    const auto map4 = dir / "map_t4.csv";
    REQUIRE(run_cli("fit-flim --in " + q(cube1) + " --out " + q(map1) +
                    " --min-counts 500 --threads 1")
                .exit_code == 0);
    REQUIRE(run_cli("fit-flim --in " + q(cube4) + " --out " + q(map4) +
                    " --min-counts 500 --threads 4")
                .exit_code == 0);
    CHECK(slurp(map1) == slurp(map4));

    const RunResult edge = run_cli("edge --map " + q(map1) +
                                   " --start-row 4 --start-col 1 --end-row 4 --end-col 22 "
                                   "--halfwidth 2");
    REQUIRE(edge.exit_code == 0);
    CHECK(edge.output.find("psf fwhm") != std::string::npos);

    SUBCASE("corrupt cube payload exits 3") {
        std::ofstream raw(cube1.string() + ".raw", std::ios::binary | std::ios::trunc);
        raw << "not a payload";
        raw.close();
        const RunResult r = run_cli("fit-flim --in " + q(cube1) + " --out " + q(dir / "m.csv"));
        CHECK(r.exit_code == 3);
    }
}
