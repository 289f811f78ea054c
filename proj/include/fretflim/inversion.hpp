// Effective-lifetime calibration curve tau_eff(R) and its inversion to a
// Foerster-radius estimate with slope-propagated uncertainty.
#pragma once

#include <optional>
#include <vector>

#include "fretflim/curves.hpp"
#include "fretflim/fit.hpp"
#include "fretflim/model.hpp"

namespace fretflim {

struct RadiusCurvePoint {
    double r_nm = 0.0;
    double tau_eff_ns = 0.0;
};

struct TauEffCurveParams {
    ModelParams model;        // foerster_radius_nm is swept, other fields used as-is
    DepthDistribution depth;
    TimeGrid grid;
    GateSpec gate;
};

struct RadiusCurve {
    std::vector<RadiusCurvePoint> points;  // strictly increasing R
    // Present when the curve was generated in-process; curves loaded from
    // CSV carry points only.
    std::optional<TauEffCurveParams> generation;

    /// Checks the grid increases and tau_eff strictly decreases.
    void validate() const;
};

/// Noise-free calibration: for each R on a uniform grid, build the ensemble
/// decay, gate it and fit a mono-exponential. Points are independent, so the
/// result does not depend on evaluation order or worker count.
RadiusCurve tau_eff_curve(double r_min_nm, double r_max_nm, int n_points,
                          const TauEffCurveParams& params, int threads = 0);

struct RadiusEstimate {
    double r_nm = 0.0;
    double sigma_nm = 0.0;
};

/// Monotone cubic interpolation of the inverse map R(tau_eff); the
/// uncertainty is |dR/dtau| * sigma_tau. Values outside the curve's lifetime
/// range raise a usage error naming the admissible interval.
RadiusEstimate invert_radius(double tau_eff_ns, double sigma_ns, const RadiusCurve& curve);

}  // namespace fretflim
