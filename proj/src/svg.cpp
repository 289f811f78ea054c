#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "fretflim/errors.hpp"

namespace fretflim::svg {

namespace {

constexpr double kW = 720, kH = 480;
constexpr double kL = 70, kR = 20, kT = 40, kB = 55;

std::string num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

struct Scale {
    double lo, hi;
    double px0, px1;
    bool log = false;
    double to_px(double v) const {
        double t = log ? (std::log10(v) - std::log10(lo)) / (std::log10(hi) - std::log10(lo))
                       : (v - lo) / (hi - lo);
        return px0 + t * (px1 - px0);
    }
};

std::vector<double> ticks(double lo, double hi, bool log) {
    std::vector<double> out;
    if (log) {
        for (int e = static_cast<int>(std::floor(std::log10(lo)));
             e <= static_cast<int>(std::ceil(std::log10(hi))); ++e) {
            const double v = std::pow(10.0, e);
            if (v >= lo * 0.999 && v <= hi * 1.001) out.push_back(v);
        }
        return out;
    }
    const double span = hi - lo;
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double s : {1.0, 2.0, 5.0, 10.0})
        if (raw <= s * mag) {
            step = s * mag;
            break;
        }
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * span; v += step)
        out.push_back(v);
    return out;
}

std::ofstream open_svg(const std::string& path, double w, double h) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open '" + path + "' for writing");
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
        << "\" viewBox=\"0 0 " << w << ' ' << h << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    return out;
}

void text(std::ofstream& out, double x, double y, const std::string& s, int size = 13,
          const std::string& anchor = "middle", double rotate = 0.0) {
    out << "<text x=\"" << x << "\" y=\"" << y << "\" font-family=\"sans-serif\" font-size=\""
        << size << "\" text-anchor=\"" << anchor << "\"";
    if (rotate != 0.0) out << " transform=\"rotate(" << rotate << ' ' << x << ' ' << y << ")\"";
    out << '>' << s << "</text>\n";
}

}  // namespace

void plot_xy(const std::string& path, const std::string& title, const std::string& x_label,
             const std::string& y_label, const std::vector<Series>& series, bool log_y) {
    double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo;
    double ylo = xlo, yhi = -xlo;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            const double y = s.y[i];
            if (log_y && !(y > 0.0)) continue;
            xlo = std::min(xlo, s.x[i]);
            xhi = std::max(xhi, s.x[i]);
            ylo = std::min(ylo, y);
            yhi = std::max(yhi, y);
        }
    }
    if (!std::isfinite(xlo) || !std::isfinite(xhi)) {
        xlo = 0.0;
        xhi = 1.0;
    }
    if (!std::isfinite(ylo) || !std::isfinite(yhi)) {
        ylo = log_y ? 0.1 : 0.0;
        yhi = 1.0;
    }
    if (!(xhi > xlo)) xhi = xlo + 1.0;
    if (!(yhi > ylo)) yhi = ylo + 1.0;
    if (!log_y) {
        const double pad = 0.05 * (yhi - ylo);
        ylo -= pad;
        yhi += pad;
    }

    const Scale sx{xlo, xhi, kL, kW - kR, false};
    const Scale sy{ylo, yhi, kH - kB, kT, log_y};

    auto out = open_svg(path, kW, kH);
    out << "<rect x=\"" << kL << "\" y=\"" << kT << "\" width=\"" << kW - kL - kR
        << "\" height=\"" << kH - kT - kB << "\" fill=\"none\" stroke=\"black\"/>\n";

    for (double v : ticks(xlo, xhi, false)) {
        const double px = sx.to_px(v);
        out << "<line x1=\"" << px << "\" y1=\"" << kH - kB << "\" x2=\"" << px << "\" y2=\""
            << kH - kB + 5 << "\" stroke=\"black\"/>\n";
        text(out, px, kH - kB + 20, num(v), 11);
    }
    for (double v : ticks(ylo, yhi, log_y)) {
        const double py = sy.to_px(v);
        out << "<line x1=\"" << kL - 5 << "\" y1=\"" << py << "\" x2=\"" << kL << "\" y2=\"" << py
            << "\" stroke=\"black\"/>\n";
        text(out, kL - 9, py + 4, num(v), 11, "end");
    }

    int legend_row = 0;
    for (const auto& s : series) {
        if (s.points_only) {
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                if (log_y && !(s.y[i] > 0.0)) continue;
                out << "<circle cx=\"" << sx.to_px(s.x[i]) << "\" cy=\"" << sy.to_px(s.y[i])
                    << "\" r=\"2\" fill=\"" << s.color << "\"/>\n";
            }
        } else {
            out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                if (log_y && !(s.y[i] > 0.0)) continue;
                out << sx.to_px(s.x[i]) << ',' << sy.to_px(s.y[i]) << ' ';
            }
            out << "\"/>\n";
        }
        if (!s.label.empty()) {
            const double ly = kT + 16 + 16 * legend_row++;
            out << "<line x1=\"" << kW - kR - 130 << "\" y1=\"" << ly - 4 << "\" x2=\""
                << kW - kR - 108 << "\" y2=\"" << ly - 4 << "\" stroke=\"" << s.color
                << "\" stroke-width=\"2\"/>\n";
            text(out, kW - kR - 102, ly, s.label, 12, "start");
        }
    }

    text(out, kW / 2, 22, title, 15);
    text(out, (kL + kW - kR) / 2, kH - 12, x_label, 13);
    text(out, 18, (kT + kH - kB) / 2, y_label, 13, "middle", -90);
    out << "</svg>\n";
}

void plot_map(const std::string& path, const std::string& title, int width_px, int height_px,
              const std::vector<double>& values, const std::string& unit) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double v : values) {
        if (std::isnan(v)) continue;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!(hi > lo)) hi = lo + 1.0;

    const double cell = std::clamp(560.0 / std::max(width_px, height_px), 1.0, 24.0);
    const double w = kL + width_px * cell + 110, h = kT + height_px * cell + 40;
    auto out = open_svg(path, w, h);

    auto color = [&](double v) {
        // Dark blue -> teal -> yellow ramp.
        const double t = std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
        const auto lerp = [](double a, double b, double f) { return a + (b - a) * f; };
        double r, g, b;
        if (t < 0.5) {
            const double f = t / 0.5;
            r = lerp(68, 33, f); g = lerp(1, 144, f); b = lerp(84, 140, f);
        } else {
            const double f = (t - 0.5) / 0.5;
            r = lerp(33, 253, f); g = lerp(144, 231, f); b = lerp(140, 37, f);
        }
        char buf[16];
        std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(r), static_cast<int>(g),
                      static_cast<int>(b));
        return std::string(buf);
    };

    for (int r = 0; r < height_px; ++r) {
        for (int c = 0; c < width_px; ++c) {
            const double v = values[static_cast<std::size_t>(r) * width_px + c];
            const std::string fill = std::isnan(v) ? "white" : color(v);
            out << "<rect x=\"" << kL + c * cell << "\" y=\"" << kT + r * cell << "\" width=\""
                << cell << "\" height=\"" << cell << "\" fill=\"" << fill << "\"/>\n";
        }
    }
    out << "<rect x=\"" << kL << "\" y=\"" << kT << "\" width=\"" << width_px * cell
        << "\" height=\"" << height_px * cell << "\" fill=\"none\" stroke=\"black\"/>\n";

    // Color bar.
    const double bx = kL + width_px * cell + 26, bw = 18, bh = height_px * cell;
    for (int i = 0; i < 64; ++i) {
        const double v = hi - (hi - lo) * i / 63.0;
        out << "<rect x=\"" << bx << "\" y=\"" << kT + bh * i / 64.0 << "\" width=\"" << bw
            << "\" height=\"" << bh / 64.0 + 0.5 << "\" fill=\"" << color(v) << "\"/>\n";
    }
    out << "<rect x=\"" << bx << "\" y=\"" << kT << "\" width=\"" << bw << "\" height=\"" << bh
        << "\" fill=\"none\" stroke=\"black\"/>\n";
    text(out, bx + bw + 6, kT + 10, num(hi) + ' ' + unit, 11, "start");
    text(out, bx + bw + 6, kT + bh, num(lo) + ' ' + unit, 11, "start");
    text(out, w / 2, 22, title, 15);
    out << "</svg>\n";
}

}  // namespace fretflim::svg
