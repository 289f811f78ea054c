#include "fretflim/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fretflim/errors.hpp"

namespace fretflim {

namespace {

// x^n for n in {4, 6}; exact 1.0 at x = 1 so the z = R identities hold
// to machine precision.
double ipow_even(double x, int n) {
    const double x2 = x * x;
    return n == 4 ? x2 * x2 : x2 * x2 * x2;
}

void require_depth_positive(double z_nm) {
    if (!(z_nm > 0.0))
        throw UsageError("donor depth must be positive, got " + std::to_string(z_nm) + " nm");
}

double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

}  // namespace

void ModelParams::validate() const {
    if (!(foerster_radius_nm >= 0.0)) throw UsageError("foerster_radius_nm must be >= 0");
    if (!(bulk_lifetime_ns > 0.0)) throw UsageError("bulk_lifetime_ns must be > 0");
    if (distance_exponent != 4 && distance_exponent != 6)
        throw UsageError("distance_exponent must be 4 or 6");
    if (!(depth_mean_nm > 0.0)) throw UsageError("depth_mean_nm must be > 0");
    if (!(depth_sigma_nm > 0.0)) throw UsageError("depth_sigma_nm must be > 0");
    if (!(unquenched_intensity > 0.0)) throw UsageError("unquenched_intensity must be > 0");
}

DepthDistribution DepthDistribution::from_params(const ModelParams& p) {
    p.validate();
    DepthDistribution d;
    d.mean_nm = p.depth_mean_nm;
    d.sigma_nm = p.depth_sigma_nm;
    d.z_min_nm = std::max(0.5, p.depth_mean_nm - 4.0 * p.depth_sigma_nm);
    d.z_max_nm = p.depth_mean_nm + 4.0 * p.depth_sigma_nm;
    d.validate();
    return d;
}

void DepthDistribution::validate() const {
    if (!(sigma_nm > 0.0)) throw UsageError("depth sigma must be > 0");
    if (!(z_min_nm > 0.0 && z_min_nm < mean_nm && mean_nm < z_max_nm))
        throw UsageError("depth window must satisfy 0 < z_min < mean < z_max");
}

double DepthDistribution::density(double z_nm) const {
    if (z_nm < z_min_nm || z_nm > z_max_nm) return 0.0;
    const double norm = normal_cdf((z_max_nm - mean_nm) / sigma_nm) -
                        normal_cdf((z_min_nm - mean_nm) / sigma_nm);
    const double u = (z_nm - mean_nm) / sigma_nm;
    const double phi = std::exp(-0.5 * u * u) / (sigma_nm * std::sqrt(2.0 * M_PI));
    return phi / norm;
}

double nonradiative_rate(double z_nm, const ModelParams& p) {
    require_depth_positive(z_nm);
    const double gamma_rad = 1.0 / p.bulk_lifetime_ns;
    return gamma_rad * ipow_even(p.foerster_radius_nm / z_nm, p.distance_exponent);
}

double quenched_lifetime(double z_nm, const ModelParams& p) {
    require_depth_positive(z_nm);
    return p.bulk_lifetime_ns /
           (1.0 + ipow_even(p.foerster_radius_nm / z_nm, p.distance_exponent));
}

double fret_efficiency(double z_nm, const ModelParams& p) {
    require_depth_positive(z_nm);
    if (p.foerster_radius_nm == 0.0) return 0.0;
    return 1.0 / (1.0 + ipow_even(z_nm / p.foerster_radius_nm, p.distance_exponent));
}

double quenched_intensity(double z_nm, const ModelParams& p) {
    return p.unquenched_intensity * (1.0 - fret_efficiency(z_nm, p));
}

}  // namespace fretflim
