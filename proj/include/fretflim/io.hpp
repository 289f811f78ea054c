// File formats: histogram CSV, radius-curve CSV, lifetime-map CSV and the
// binary FLIM cube with its sidecar metadata. All text is LF-terminated and
// locale-independent; cube payloads are little-endian uint32, bin-fastest.
#pragma once

#include <string>

#include "fretflim/curves.hpp"
#include "fretflim/flim.hpp"
#include "fretflim/inversion.hpp"

namespace fretflim {

void write_histogram_csv(const std::string& path, const TcspcHistogram& h);
TcspcHistogram read_histogram_csv(const std::string& path);

void write_radius_curve_csv(const std::string& path, const RadiusCurve& curve);
RadiusCurve read_radius_curve_csv(const std::string& path);

void write_lifetime_map_csv(const std::string& path, const LifetimeMap& map);
LifetimeMap read_lifetime_map_csv(const std::string& path);

/// Writes <base>.meta (text sidecar) and <base>.raw (payload).
void write_flim_cube(const std::string& base_path, const FlimCube& cube);
/// Accepts the base path or the .meta path.
FlimCube read_flim_cube(const std::string& path);

}  // namespace fretflim
