// Forward simulator: ensemble decay of depth-distributed donors, IRF
// convolution, donor/acceptor/background composition, Poisson photon
// histograms and synthetic lifetime-imaging cubes.
#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "fretflim/curves.hpp"
#include "fretflim/flim.hpp"
#include "fretflim/model.hpp"

namespace fretflim {

struct SignalComposition {
    double donor_weight = 1.0;
    double acceptor_weight = 0.0;
    double background_rate = 0.0;        // constant counts per bin (relative)
    double acceptor_lifetime_ns = 0.41;  // exciton recombination lifetime

    void validate() const;
};

struct FlimScene {
    int width_px = 32;
    int height_px = 32;
    double pixel_size_nm = 200.0;
    // Flake outlines as closed polygons in nm, even-odd filled.
    std::vector<std::vector<std::array<double, 2>>> flakes;
    SignalComposition on_flake{1.0, 5.0, 0.0, 0.41};
    SignalComposition off_flake{1.0, 0.0, 0.0, 0.41};
    double psf_fwhm_nm = 620.0;  // optical blur of the coverage mask
    double photons_per_pixel = 10000.0;

    void validate() const;
};

/// Ensemble decay S(t) = integral of D(z) I(z) exp(-t/tau(z)) dz over the
/// depth window, by 129-node Gauss-Legendre quadrature with a node-doubling
/// convergence check. Normalized so S(0) = 1; zero before the pulse.
DecayCurve ensemble_decay(const ModelParams& p, const DepthDistribution& d, const TimeGrid& grid);

/// Unit-height mono-exponential on the grid (zero before the pulse).
DecayCurve mono_exp_curve(double lifetime_ns, const TimeGrid& grid);

/// Convolution with a unit-area Gaussian response. Periodic in the grid span
/// (the span covers one repetition period), so the integrated intensity is
/// conserved exactly. A response narrower than one bin acts as a delta.
DecayCurve irf_convolve(const DecayCurve& curve, const IrfSpec& irf);

/// Weighted sum of the IRF-convolved donor curve, an IRF-convolved acceptor
/// mono-exponential and a constant background.
DecayCurve compose_signal(const DecayCurve& donor, const SignalComposition& comp,
                          const IrfSpec& irf);

/// Sum of two curves on a shared grid; mismatched grids are a usage error.
DecayCurve add_curves(const DecayCurve& a, const DecayCurve& b);

/// Independent per-bin Poisson counts with means proportional to the model,
/// scaled so the expected total equals total_photons. Bit-reproducible for a
/// fixed seed.
TcspcHistogram sample_histogram(const DecayCurve& model, double total_photons,
                                std::uint64_t seed);

/// Flake coverage fraction per pixel: polygon mask, supersampled 4x4 and
/// blurred with the scene PSF. Row-major.
std::vector<double> coverage_map(const FlimScene& scene);

/// Synthetic cube: per pixel, the blurred coverage fraction interpolates
/// between the on-flake model (quenched donor + acceptor) and the off-flake
/// model (bulk donor only); counts are sampled with a per-pixel stream
/// derived from (seed, row, col), so the result is thread-count invariant.
FlimCube simulate_flim_cube(const FlimScene& scene, const ModelParams& p,
                            const DepthDistribution& d, const IrfSpec& irf, const TimeGrid& grid,
                            std::uint64_t seed, int threads = 0);

}  // namespace fretflim
