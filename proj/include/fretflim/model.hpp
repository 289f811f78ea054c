// Quenching model for a point donor below a 2D acceptor sheet.
//
// A donor at depth z gains a non-radiative channel with rate
// gamma_rad * (R/z)^n on top of its radiative rate gamma_rad = 1/tau_bulk.
// n = 4 describes a point dipole coupled to a 2D sheet, n = 6 the usual
// point-to-point pair. Donor depths follow a truncated Gaussian profile.
#pragma once

namespace fretflim {

struct ModelParams {
    double foerster_radius_nm = 13.0;   // distance of 50 % transfer efficiency
    double bulk_lifetime_ns = 12.0;     // unquenched donor lifetime
    int distance_exponent = 4;          // 4 (2D acceptor) or 6 (point acceptor)
    double depth_mean_nm = 6.5;
    double depth_sigma_nm = 2.7;
    double unquenched_intensity = 1.0;  // relative brightness far from the sheet

    void validate() const;  // throws UsageError on violated invariants
};

struct DepthDistribution {
    double mean_nm = 6.5;
    double sigma_nm = 2.7;
    double z_min_nm = 0.5;   // keeps the model away from the z -> 0 divergence
    double z_max_nm = 17.3;

    /// Truncation window [max(0.5 nm, mean - 4 sigma), mean + 4 sigma].
    static DepthDistribution from_params(const ModelParams& p);

    void validate() const;

    /// Truncated-Gaussian density, normalized over the window; 0 outside it.
    double density(double z_nm) const;
};

/// Non-radiative transfer rate gamma_rad * (R/z)^n in 1/ns. Throws for z <= 0.
double nonradiative_rate(double z_nm, const ModelParams& p);

/// tau(z) = tau_bulk / (1 + (R/z)^n). Strictly increasing in z.
double quenched_lifetime(double z_nm, const ModelParams& p);

/// E(z) = 1 / (1 + (z/R)^n) in [0, 1]; 0 when R = 0.
double fret_efficiency(double z_nm, const ModelParams& p);

/// I(z) = I0 * (1 - E(z)).
double quenched_intensity(double z_nm, const ModelParams& p);

}  // namespace fretflim
