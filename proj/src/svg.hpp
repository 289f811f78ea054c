// Minimal SVG plot emission for the CLI (decay curves, calibration curves,
// lifetime maps, edge profiles). Plots are conveniences, never inputs.
#pragma once

#include <string>
#include <vector>

namespace fretflim::svg {

struct Series {
    std::string label;
    std::string color = "#1f77b4";
    std::vector<double> x;
    std::vector<double> y;
    bool points_only = false;
};

void plot_xy(const std::string& path, const std::string& title, const std::string& x_label,
             const std::string& y_label, const std::vector<Series>& series, bool log_y = false);

/// Heat map of per-pixel values; NaN cells are drawn white.
void plot_map(const std::string& path, const std::string& title, int width_px, int height_px,
              const std::vector<double>& values, const std::string& unit);

}  // namespace fretflim::svg
