// Decay fitting: IRF-convolved mono/bi-exponential models, Poisson-MLE and
// weighted-least-squares objectives, histogram gating, effective lifetimes.
#pragma once

#include <vector>

#include "fretflim/curves.hpp"

namespace fretflim {

struct ExpComponent {
    double amplitude = 0.0;    // value of the pre-IRF exponential at t = t0
    double lifetime_ns = 0.0;  // <= 0 requests automatic initial guesses
};

enum class FitObjective { WeightedLeastSquares, PoissonMle };

struct FitModelSpec {
    std::vector<ExpComponent> components{ExpComponent{}};  // 1 or 2 entries
    IrfSpec irf{};
    bool use_irf = true;        // false: plain exponentials, t0 frozen
    double background = 0.0;    // initial guess (counts per bin)
    double t0_ns = 0.0;         // initial guess; ignored unless freeze_t0
    bool fit_background = true;
    bool freeze_t0 = false;
    FitObjective objective = FitObjective::PoissonMle;
    int max_iterations = 500;

    void validate() const;
};

struct FittedComponent {
    double amplitude = 0.0;
    double amplitude_sigma = 0.0;
    double lifetime_ns = 0.0;
    double lifetime_sigma_ns = 0.0;
};

struct FitResult {
    std::vector<FittedComponent> components;  // sorted by ascending lifetime
    double background = 0.0;
    double background_sigma = 0.0;
    double t0_ns = 0.0;
    double t0_sigma_ns = 0.0;
    double goodness = 0.0;  // reduced chi^2 (WLS) or deviance (MLE)
    FitObjective objective = FitObjective::PoissonMle;
    int iterations = 0;
    bool converged = false;
    int n_points = 0;
};

struct GateSpec {
    double head_cut_ns = 3.0;               // dropped after the histogram peak
    double tail_threshold_fraction = 0.01;  // of the level at the gate start

    void validate() const;
};

struct LifetimeEstimate {
    double tau_ns = 0.0;
    double sigma_ns = 0.0;
    FitResult detail;
};

/// Closed form of a one-sided exponential convolved with a Gaussian IRF:
///   (a/2) exp(s^2/(2 tau^2) - dt/tau) erfc(s/(sqrt2 tau) - dt/(sqrt2 s)),
/// dt = t - t0, s = fwhm / (2 sqrt(2 ln 2)). Evaluated through a scaled-erfc
/// branch so it stays finite where the naive product overflows.
double exp_gauss_model(double t_ns, const ExpComponent& c, const IrfSpec& irf, double t0_ns);

/// Derivatives of exp_gauss_model with respect to (amplitude, lifetime, t0).
struct ExpGaussGrad {
    double value = 0.0;
    double d_amplitude = 0.0;
    double d_lifetime = 0.0;
    double d_t0 = 0.0;
};
ExpGaussGrad exp_gauss_gradient(double t_ns, const ExpComponent& c, const IrfSpec& irf,
                                double t0_ns);

/// Scaled complementary error function exp(x^2) erfc(x).
double erfcx(double x);

/// Fit photon counts; see fit_decay_values for real-valued data.
FitResult fit_decay(const TcspcHistogram& h, const FitModelSpec& spec);

/// Same engine on real-valued per-bin data (noise-free model curves).
FitResult fit_decay_values(const TimeGrid& grid, const std::vector<double>& values,
                           const FitModelSpec& spec);

/// Keeps bins from (peak time + head cut) to the last bin at or above
/// tail_threshold_fraction of the level at the start of the retained range.
TcspcHistogram gate_histogram(const TcspcHistogram& h, const GateSpec& g);
DecayCurve gate_curve(const DecayCurve& c, const GateSpec& g);

/// Mono-exponential lifetime of the gated decay. The IRF is negligible past
/// the head cut; pass use_irf = true to include it anyway.
LifetimeEstimate effective_lifetime(const TcspcHistogram& h, const GateSpec& g,
                                    const IrfSpec& irf, bool use_irf = false);
LifetimeEstimate effective_lifetime(const DecayCurve& c, const GateSpec& g, const IrfSpec& irf,
                                    bool use_irf = false);

}  // namespace fretflim
