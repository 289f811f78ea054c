// Lifetime imaging: per-pixel decay cubes, per-pixel fitting into lifetime
// maps, edge-spread analysis and photon-budget estimates.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fretflim/curves.hpp"
#include "fretflim/fit.hpp"

namespace fretflim {

struct FlimCube {
    int width_px = 0;
    int height_px = 0;
    TimeGrid grid;
    double pixel_size_nm = 0.0;
    // Bin-fastest layout: index = (row * width + col) * n_bins + bin.
    std::vector<std::uint32_t> counts;
    std::optional<std::uint64_t> seed;
    std::optional<double> photons_per_pixel;

    void validate() const;

    std::span<const std::uint32_t> pixel(int row, int col) const {
        const std::size_t n = static_cast<std::size_t>(grid.n_bins);
        return {counts.data() + (static_cast<std::size_t>(row) * width_px + col) * n, n};
    }
};

enum class PixelClass { OnFlake, OffFlake, LowSignal };

struct PixelFit {
    PixelClass cls = PixelClass::LowSignal;
    // Fast-component fields hold NaN for off-flake pixels; low-signal pixels
    // carry no lifetimes at all.
    double tau_slow_ns = 0.0;
    double tau_slow_sigma_ns = 0.0;
    double tau_fast_ns = 0.0;
    double tau_fast_sigma_ns = 0.0;
    double amp_slow = 0.0;
    double amp_fast = 0.0;
    std::uint64_t total_counts = 0;
    double goodness = 0.0;
};

struct LifetimeMap {
    int width_px = 0;
    int height_px = 0;
    double pixel_size_nm = 0.0;
    std::vector<PixelFit> pixels;  // row-major

    const PixelFit& at(int row, int col) const {
        return pixels[static_cast<std::size_t>(row) * width_px + col];
    }
};

struct EdgeProfileResult {
    double edge_position_nm = 0.0;
    double edge_position_sigma_nm = 0.0;
    double psf_fwhm_nm = 0.0;
    double psf_fwhm_sigma_nm = 0.0;
    double tau_bulk_side_ns = 0.0;      // plateau on the unquenched side
    double tau_quenched_side_ns = 0.0;  // plateau on the flake side
    double residual_norm = 0.0;
};

/// Per-pixel fitting. Pixels below min_counts become low-signal; the rest are
/// fitted bi-exponentially, and pixels whose fast amplitude is insignificant
/// (< 2 sigma) are refitted mono-exponentially on the gated range and classed
/// off-flake. Output is independent of the worker count.
LifetimeMap fit_flim_cube(const FlimCube& cube, const GateSpec& gate, const IrfSpec& irf,
                          long min_counts, int threads = 0);

/// Slow-lifetime profile along a pixel line (transversely averaged over
/// +-halfwidth), fitted to a Gaussian-blurred step. Start/end in pixel
/// coordinates.
EdgeProfileResult edge_profile(const LifetimeMap& map, double start_row, double start_col,
                               double end_row, double end_col, int halfwidth_px = 1);

/// Dwell time in seconds needed to collect min_photons at the given rate.
double photon_budget_s(double count_rate_cps, double min_photons);

struct MinPhotonsSetup {
    double tau_true_ns = 12.0;
    TimeGrid grid{64.0, 2048, 2048.0};  // ~11 lifetimes of span
    IrfSpec irf{};
    int trials = 200;
    long ladder_max = 10000000;
};

/// Smallest photon count on a 1-2-5 ladder for which the empirical relative
/// scatter of the fitted lifetime stays within target_rel_error. Rungs where
/// any trial fails the fit preconditions (or does not converge) are skipped.
long empirical_min_photons(const MinPhotonsSetup& setup, double target_rel_error,
                           std::uint64_t seed);

}  // namespace fretflim
