#include "fretflim/io.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <vector>

#include "fretflim/errors.hpp"

namespace fretflim {

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open '" + path + "' for writing");
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open '" + path + "' for reading");
    return in;
}

std::string fmt_g6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, sep)) out.push_back(field);
    if (!line.empty() && line.back() == sep) out.push_back("");
    return out;
}

double parse_number(const std::string& s, const std::string& what) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') throw FormatError("bad " + what + ": '" + s + "'");
    return v;
}

}  // namespace

void write_histogram_csv(const std::string& path, const TcspcHistogram& h) {
    auto out = open_out(path);
    out << "time_ps,counts\n";
    for (std::size_t k = 0; k < h.counts.size(); ++k) {
        const long long t = std::llround(static_cast<double>(k) * h.grid.bin_width_ps);
        out << t << ',' << h.counts[k] << '\n';
    }
}

TcspcHistogram read_histogram_csv(const std::string& path) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) throw FormatError("empty histogram file '" + path + "'");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "time_ps,counts")
        throw FormatError("histogram header must be 'time_ps,counts', got '" + line + "'");

    std::vector<long long> times;
    std::vector<std::uint32_t> counts;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split(line, ',');
        if (fields.size() != 2) throw FormatError("histogram row needs 2 fields: '" + line + "'");
        const double t = parse_number(fields[0], "time_ps");
        const double c = parse_number(fields[1], "counts");
        if (c < 0.0 || c != std::floor(c)) throw FormatError("counts must be nonnegative integers");
        times.push_back(static_cast<long long>(t));
        counts.push_back(static_cast<std::uint32_t>(c));
    }
    if (times.size() < 2) throw FormatError("histogram needs at least 2 bins");
    const long long dt = times[1] - times[0];
    if (dt <= 0) throw FormatError("histogram times must increase");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (times[i] - times[i - 1] != dt) throw FormatError("histogram bin width is not uniform");

    TcspcHistogram h;
    h.grid.bin_width_ps = static_cast<double>(dt);
    h.grid.n_bins = static_cast<int>(counts.size());
    // File carries no pulse marker; downstream fits locate the peak themselves.
    h.grid.origin_ps = -static_cast<double>(times[0]);
    h.counts = std::move(counts);
    return h;
}

void write_radius_curve_csv(const std::string& path, const RadiusCurve& curve) {
    auto out = open_out(path);
    out << "r_nm,tau_eff_ns\n";
    for (const auto& p : curve.points) out << fmt_g6(p.r_nm) << ',' << fmt_g6(p.tau_eff_ns) << '\n';
}

RadiusCurve read_radius_curve_csv(const std::string& path) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) throw FormatError("empty curve file '" + path + "'");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "r_nm,tau_eff_ns")
        throw FormatError("curve header must be 'r_nm,tau_eff_ns', got '" + line + "'");
    RadiusCurve curve;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split(line, ',');
        if (fields.size() != 2) throw FormatError("curve row needs 2 fields: '" + line + "'");
        curve.points.push_back(
            {parse_number(fields[0], "r_nm"), parse_number(fields[1], "tau_eff_ns")});
    }
    curve.validate();
    return curve;
}

namespace {

const char* class_name(PixelClass cls) {
    switch (cls) {
        case PixelClass::OnFlake: return "on-flake";
        case PixelClass::OffFlake: return "off-flake";
        case PixelClass::LowSignal: return "low-signal";
    }
    return "low-signal";
}

PixelClass class_from_name(const std::string& s) {
    if (s == "on-flake") return PixelClass::OnFlake;
    if (s == "off-flake") return PixelClass::OffFlake;
    if (s == "low-signal") return PixelClass::LowSignal;
    throw FormatError("unknown pixel class '" + s + "'");
}

}  // namespace

void write_lifetime_map_csv(const std::string& path, const LifetimeMap& map) {
    auto out = open_out(path);
    out << "# width_px=" << map.width_px << " height_px=" << map.height_px
        << " pixel_size_nm=" << fmt_g6(map.pixel_size_nm) << '\n';
    out << "row,col,class,tau_slow_ns,tau_slow_sigma,tau_fast_ns,tau_fast_sigma,counts,goodness\n";
    for (int r = 0; r < map.height_px; ++r) {
        for (int c = 0; c < map.width_px; ++c) {
            const PixelFit& px = map.at(r, c);
            out << r << ',' << c << ',' << class_name(px.cls) << ',';
            if (px.cls != PixelClass::LowSignal)
                out << fmt_g6(px.tau_slow_ns) << ',' << fmt_g6(px.tau_slow_sigma_ns) << ',';
            else
                out << ",,";
            if (px.cls == PixelClass::OnFlake)
                out << fmt_g6(px.tau_fast_ns) << ',' << fmt_g6(px.tau_fast_sigma_ns) << ',';
            else
                out << ",,";
            out << px.total_counts << ',';
            if (px.cls != PixelClass::LowSignal) out << fmt_g6(px.goodness);
            out << '\n';
        }
    }
}

LifetimeMap read_lifetime_map_csv(const std::string& path) {
    auto in = open_in(path);
    std::string line;
    LifetimeMap map;
    map.pixel_size_nm = 1.0;

    bool have_header = false;
    std::vector<std::tuple<int, int, PixelFit>> rows;
    int max_row = -1, max_col = -1;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream meta(line.substr(1));
            std::string token;
            while (meta >> token) {
                const auto eq = token.find('=');
                if (eq == std::string::npos) continue;
                const std::string key = token.substr(0, eq);
                const double v = parse_number(token.substr(eq + 1), key);
                if (key == "width_px") map.width_px = static_cast<int>(v);
                else if (key == "height_px") map.height_px = static_cast<int>(v);
                else if (key == "pixel_size_nm") map.pixel_size_nm = v;
            }
            continue;
        }
        if (!have_header) {
            if (line !=
                "row,col,class,tau_slow_ns,tau_slow_sigma,tau_fast_ns,tau_fast_sigma,counts,"
                "goodness")
                throw FormatError("unexpected lifetime map header: '" + line + "'");
            have_header = true;
            continue;
        }
        const auto fields = split(line, ',');
        if (fields.size() != 9) throw FormatError("lifetime map row needs 9 fields: '" + line + "'");
        const int r = static_cast<int>(parse_number(fields[0], "row"));
        const int c = static_cast<int>(parse_number(fields[1], "col"));
        PixelFit px;
        px.cls = class_from_name(fields[2]);
        const double nan = std::numeric_limits<double>::quiet_NaN();
        px.tau_slow_ns = fields[3].empty() ? nan : parse_number(fields[3], "tau_slow_ns");
        px.tau_slow_sigma_ns = fields[4].empty() ? nan : parse_number(fields[4], "tau_slow_sigma");
        px.tau_fast_ns = fields[5].empty() ? nan : parse_number(fields[5], "tau_fast_ns");
        px.tau_fast_sigma_ns = fields[6].empty() ? nan : parse_number(fields[6], "tau_fast_sigma");
        px.total_counts = static_cast<std::uint64_t>(parse_number(fields[7], "counts"));
        px.goodness = fields[8].empty() ? 0.0 : parse_number(fields[8], "goodness");
        rows.emplace_back(r, c, px);
        max_row = std::max(max_row, r);
        max_col = std::max(max_col, c);
    }
    if (!have_header) throw FormatError("lifetime map file has no header");
    if (map.width_px == 0) map.width_px = max_col + 1;
    if (map.height_px == 0) map.height_px = max_row + 1;
    if (max_row >= map.height_px || max_col >= map.width_px)
        throw FormatError("lifetime map row/col outside declared dimensions");
    map.pixels.assign(static_cast<std::size_t>(map.width_px) * map.height_px, PixelFit{});
    for (auto& [r, c, px] : rows)
        map.pixels[static_cast<std::size_t>(r) * map.width_px + c] = px;
    return map;
}

namespace {

std::string meta_path_of(const std::string& path) {
    if (path.size() >= 5 && path.substr(path.size() - 5) == ".meta") return path;
    return path + ".meta";
}

std::string raw_path_of(const std::string& meta_path) {
    return meta_path.substr(0, meta_path.size() - 5) + ".raw";
}

}  // namespace

void write_flim_cube(const std::string& base_path, const FlimCube& cube) {
    cube.validate();
    const std::string meta_path = meta_path_of(base_path);
    {
        auto meta = open_out(meta_path);
        meta << "width_px = " << cube.width_px << '\n';
        meta << "height_px = " << cube.height_px << '\n';
        meta << "n_bins = " << cube.grid.n_bins << '\n';
        meta << "bin_width_ps = " << fmt_g6(cube.grid.bin_width_ps) << '\n';
        meta << "origin_ps = " << fmt_g6(cube.grid.origin_ps) << '\n';
        meta << "pixel_size_nm = " << fmt_g6(cube.pixel_size_nm) << '\n';
        meta << "endianness = little\n";
        if (cube.seed) meta << "seed = " << *cube.seed << '\n';
        if (cube.photons_per_pixel)
            meta << "photons_per_pixel = " << fmt_g6(*cube.photons_per_pixel) << '\n';
    }
    auto raw = open_out(raw_path_of(meta_path));
    std::vector<unsigned char> buf(cube.counts.size() * 4);
    for (std::size_t i = 0; i < cube.counts.size(); ++i) {
        const std::uint32_t v = cube.counts[i];
        buf[4 * i] = static_cast<unsigned char>(v & 0xFF);
        buf[4 * i + 1] = static_cast<unsigned char>((v >> 8) & 0xFF);
        buf[4 * i + 2] = static_cast<unsigned char>((v >> 16) & 0xFF);
        buf[4 * i + 3] = static_cast<unsigned char>((v >> 24) & 0xFF);
    }
    raw.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

FlimCube read_flim_cube(const std::string& path) {
    const std::string meta_path = meta_path_of(path);
    FlimCube cube;
    std::string endianness;
    {
        auto meta = open_in(meta_path);
        std::string line;
        while (std::getline(meta, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty() || line[0] == '#') continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos) throw FormatError("bad sidecar line: '" + line + "'");
            auto trim = [](std::string s) {
                const auto a = s.find_first_not_of(" \t");
                const auto b = s.find_last_not_of(" \t");
                return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
            };
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key == "width_px") cube.width_px = static_cast<int>(parse_number(value, key));
            else if (key == "height_px") cube.height_px = static_cast<int>(parse_number(value, key));
            else if (key == "n_bins") cube.grid.n_bins = static_cast<int>(parse_number(value, key));
            else if (key == "bin_width_ps") cube.grid.bin_width_ps = parse_number(value, key);
            else if (key == "origin_ps") cube.grid.origin_ps = parse_number(value, key);
            else if (key == "pixel_size_nm") cube.pixel_size_nm = parse_number(value, key);
            else if (key == "endianness") endianness = value;
            else if (key == "seed")
                cube.seed = static_cast<std::uint64_t>(parse_number(value, key));
            else if (key == "photons_per_pixel") cube.photons_per_pixel = parse_number(value, key);
            else throw FormatError("unknown sidecar key '" + key + "'");
        }
    }
    if (endianness != "little") throw FormatError("sidecar must declare endianness = little");

    auto raw = open_in(raw_path_of(meta_path));
    raw.seekg(0, std::ios::end);
    const std::streamsize size = raw.tellg();
    raw.seekg(0, std::ios::beg);
    const std::size_t expected = static_cast<std::size_t>(cube.width_px) * cube.height_px *
                                 static_cast<std::size_t>(cube.grid.n_bins) * 4;
    if (static_cast<std::size_t>(size) != expected)
        throw FormatError("cube payload is " + std::to_string(size) + " bytes, expected " +
                          std::to_string(expected));
    std::vector<unsigned char> buf(expected);
    raw.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(expected));
    if (!raw) throw FormatError("short read on cube payload");
    cube.counts.resize(expected / 4);
    for (std::size_t i = 0; i < cube.counts.size(); ++i) {
        cube.counts[i] = static_cast<std::uint32_t>(buf[4 * i]) |
                         (static_cast<std::uint32_t>(buf[4 * i + 1]) << 8) |
                         (static_cast<std::uint32_t>(buf[4 * i + 2]) << 16) |
                         (static_cast<std::uint32_t>(buf[4 * i + 3]) << 24);
    }
    cube.validate();
    return cube;
}

}  // namespace fretflim
