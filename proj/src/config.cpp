#include "fretflim/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "fretflim/errors.hpp"

namespace fretflim {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t");
    const auto b = s.find_last_not_of(" \t");
    return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

double to_number(const std::string& key, const std::string& value) {
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0')
        throw UsageError("config key '" + key + "' has a non-numeric value '" + value + "'");
    return v;
}

long to_long(const std::string& key, const std::string& value) {
    const double v = to_number(key, value);
    if (v != std::floor(v)) throw UsageError("config key '" + key + "' must be an integer");
    return static_cast<long>(v);
}

std::vector<std::array<double, 2>> to_polygon(const std::string& key, const std::string& value) {
    std::vector<std::array<double, 2>> poly;
    std::istringstream ss(value);
    std::string token;
    while (ss >> token) {
        const auto comma = token.find(',');
        if (comma == std::string::npos)
            throw UsageError("config key '" + key + "' expects 'x,y' vertex pairs");
        poly.push_back({to_number(key, token.substr(0, comma)),
                        to_number(key, token.substr(comma + 1))});
    }
    if (poly.size() < 3) throw UsageError("config key '" + key + "' needs at least 3 vertices");
    return poly;
}

const std::set<std::string> kRequiredKeys = {
    "model.foerster_radius_nm", "model.bulk_lifetime_ns", "model.distance_exponent",
    "model.depth_mean_nm", "model.depth_sigma_nm",
};

}  // namespace

RunConfig RunConfig::defaults() {
    RunConfig cfg;
    cfg.scene.flakes = {{{1000.0, 1000.0}, {5400.0, 1400.0}, {2600.0, 5400.0}}};
    return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file '" + path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse(text.str());
}

RunConfig RunConfig::parse(const std::string& text) {
    RunConfig cfg;
    cfg.scene.flakes.clear();

    std::map<std::string, std::string> entries;
    std::map<int, std::vector<std::array<double, 2>>> flakes;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw UsageError("config line has no '=': '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw UsageError("config line has an empty key");
        if (entries.count(key)) throw UsageError("duplicate config key '" + key + "'");
        entries[key] = value;
    }

    for (const auto& req : kRequiredKeys)
        if (!entries.count(req)) throw UsageError("missing required config key '" + req + "'");

    for (const auto& [key, value] : entries) {
        if (key == "model.foerster_radius_nm") cfg.model.foerster_radius_nm = to_number(key, value);
        else if (key == "model.bulk_lifetime_ns") cfg.model.bulk_lifetime_ns = to_number(key, value);
        else if (key == "model.distance_exponent")
            cfg.model.distance_exponent = static_cast<int>(to_long(key, value));
        else if (key == "model.depth_mean_nm") cfg.model.depth_mean_nm = to_number(key, value);
        else if (key == "model.depth_sigma_nm") cfg.model.depth_sigma_nm = to_number(key, value);
        else if (key == "model.unquenched_intensity")
            cfg.model.unquenched_intensity = to_number(key, value);
        else if (key == "depth.z_min_nm") cfg.depth_z_min_nm = to_number(key, value);
        else if (key == "depth.z_max_nm") cfg.depth_z_max_nm = to_number(key, value);
        else if (key == "grid.bin_width_ps") cfg.grid.bin_width_ps = to_number(key, value);
        else if (key == "grid.n_bins") cfg.grid.n_bins = static_cast<int>(to_long(key, value));
        else if (key == "grid.origin_ps") cfg.grid.origin_ps = to_number(key, value);
        else if (key == "irf.fwhm_ps") cfg.irf.fwhm_ps = to_number(key, value);
        else if (key == "irf.center_ps") cfg.irf.center_ps = to_number(key, value);
        else if (key == "signal.donor_weight") cfg.signal.donor_weight = to_number(key, value);
        else if (key == "signal.acceptor_weight") cfg.signal.acceptor_weight = to_number(key, value);
        else if (key == "signal.background_rate") cfg.signal.background_rate = to_number(key, value);
        else if (key == "signal.acceptor_lifetime_ns")
            cfg.signal.acceptor_lifetime_ns = to_number(key, value);
        else if (key == "gate.head_cut_ns") cfg.gate.head_cut_ns = to_number(key, value);
        else if (key == "gate.tail_threshold_fraction")
            cfg.gate.tail_threshold_fraction = to_number(key, value);
        else if (key == "scene.width_px") cfg.scene.width_px = static_cast<int>(to_long(key, value));
        else if (key == "scene.height_px")
            cfg.scene.height_px = static_cast<int>(to_long(key, value));
        else if (key == "scene.pixel_size_nm") cfg.scene.pixel_size_nm = to_number(key, value);
        else if (key == "scene.psf_fwhm_nm") cfg.scene.psf_fwhm_nm = to_number(key, value);
        else if (key == "scene.photons_per_pixel")
            cfg.scene.photons_per_pixel = to_number(key, value);
        else if (key == "scene.on.donor_weight") cfg.scene.on_flake.donor_weight = to_number(key, value);
        else if (key == "scene.on.acceptor_weight")
            cfg.scene.on_flake.acceptor_weight = to_number(key, value);
        else if (key == "scene.on.background_rate")
            cfg.scene.on_flake.background_rate = to_number(key, value);
        else if (key == "scene.on.acceptor_lifetime_ns")
            cfg.scene.on_flake.acceptor_lifetime_ns = to_number(key, value);
        else if (key == "scene.off.donor_weight")
            cfg.scene.off_flake.donor_weight = to_number(key, value);
        else if (key == "scene.off.acceptor_weight")
            cfg.scene.off_flake.acceptor_weight = to_number(key, value);
        else if (key == "scene.off.background_rate")
            cfg.scene.off_flake.background_rate = to_number(key, value);
        else if (key == "scene.off.acceptor_lifetime_ns")
            cfg.scene.off_flake.acceptor_lifetime_ns = to_number(key, value);
        else if (key == "sim.total_photons") cfg.total_photons = to_number(key, value);
        else if (key == "sim.seed")
            cfg.seed = static_cast<std::uint64_t>(to_long(key, value));
        else if (key.rfind("scene.flake.", 0) == 0) {
            const std::string idx_str = key.substr(std::string("scene.flake.").size());
            char* end = nullptr;
            const long idx = std::strtol(idx_str.c_str(), &end, 10);
            if (end == idx_str.c_str() || *end != '\0' || idx < 0)
                throw UsageError("bad flake index in config key '" + key + "'");
            flakes[static_cast<int>(idx)] = to_polygon(key, value);
        } else {
            throw UsageError("unknown config key '" + key + "'");
        }
    }

    for (auto& [idx, poly] : flakes) cfg.scene.flakes.push_back(std::move(poly));

    cfg.validate();
    return cfg;
}

std::string RunConfig::dump() const {
    std::ostringstream out;
    out << "model.foerster_radius_nm = " << fmt(model.foerster_radius_nm) << '\n';
    out << "model.bulk_lifetime_ns = " << fmt(model.bulk_lifetime_ns) << '\n';
    out << "model.distance_exponent = " << model.distance_exponent << '\n';
    out << "model.depth_mean_nm = " << fmt(model.depth_mean_nm) << '\n';
    out << "model.depth_sigma_nm = " << fmt(model.depth_sigma_nm) << '\n';
    out << "model.unquenched_intensity = " << fmt(model.unquenched_intensity) << '\n';
    const DepthDistribution d = depth_window();
    out << "depth.z_min_nm = " << fmt(d.z_min_nm) << '\n';
    out << "depth.z_max_nm = " << fmt(d.z_max_nm) << '\n';
    out << "grid.bin_width_ps = " << fmt(grid.bin_width_ps) << '\n';
    out << "grid.n_bins = " << grid.n_bins << '\n';
    out << "grid.origin_ps = " << fmt(grid.origin_ps) << '\n';
    out << "irf.fwhm_ps = " << fmt(irf.fwhm_ps) << '\n';
    out << "irf.center_ps = " << fmt(irf.center_ps) << '\n';
    out << "signal.donor_weight = " << fmt(signal.donor_weight) << '\n';
    out << "signal.acceptor_weight = " << fmt(signal.acceptor_weight) << '\n';
    out << "signal.background_rate = " << fmt(signal.background_rate) << '\n';
    out << "signal.acceptor_lifetime_ns = " << fmt(signal.acceptor_lifetime_ns) << '\n';
    out << "gate.head_cut_ns = " << fmt(gate.head_cut_ns) << '\n';
    out << "gate.tail_threshold_fraction = " << fmt(gate.tail_threshold_fraction) << '\n';
    out << "scene.width_px = " << scene.width_px << '\n';
    out << "scene.height_px = " << scene.height_px << '\n';
    out << "scene.pixel_size_nm = " << fmt(scene.pixel_size_nm) << '\n';
    out << "scene.psf_fwhm_nm = " << fmt(scene.psf_fwhm_nm) << '\n';
    out << "scene.photons_per_pixel = " << fmt(scene.photons_per_pixel) << '\n';
    out << "scene.on.donor_weight = " << fmt(scene.on_flake.donor_weight) << '\n';
    out << "scene.on.acceptor_weight = " << fmt(scene.on_flake.acceptor_weight) << '\n';
    out << "scene.on.background_rate = " << fmt(scene.on_flake.background_rate) << '\n';
    out << "scene.on.acceptor_lifetime_ns = " << fmt(scene.on_flake.acceptor_lifetime_ns) << '\n';
    out << "scene.off.donor_weight = " << fmt(scene.off_flake.donor_weight) << '\n';
    out << "scene.off.acceptor_weight = " << fmt(scene.off_flake.acceptor_weight) << '\n';
    out << "scene.off.background_rate = " << fmt(scene.off_flake.background_rate) << '\n';
    out << "scene.off.acceptor_lifetime_ns = " << fmt(scene.off_flake.acceptor_lifetime_ns)
        << '\n';
    for (std::size_t i = 0; i < scene.flakes.size(); ++i) {
        out << "scene.flake." << i << " =";
        for (const auto& v : scene.flakes[i]) out << ' ' << fmt(v[0]) << ',' << fmt(v[1]);
        out << '\n';
    }
    out << "sim.total_photons = " << fmt(total_photons) << '\n';
    out << "sim.seed = " << seed << '\n';
    return out.str();
}

DepthDistribution RunConfig::depth_window() const {
    DepthDistribution d = DepthDistribution::from_params(model);
    if (depth_z_min_nm) d.z_min_nm = *depth_z_min_nm;
    if (depth_z_max_nm) d.z_max_nm = *depth_z_max_nm;
    d.validate();
    return d;
}

void RunConfig::validate() const {
    model.validate();
    depth_window();
    grid.validate();
    irf.validate();
    signal.validate();
    gate.validate();
    scene.validate();
    if (!(total_photons > 0.0)) throw UsageError("sim.total_photons must be > 0");
}

}  // namespace fretflim
