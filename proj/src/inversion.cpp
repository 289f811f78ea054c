#include "fretflim/inversion.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

#include "fretflim/errors.hpp"
#include "fretflim/simulate.hpp"
#include "pchip.hpp"

namespace fretflim {

void RadiusCurve::validate() const {
    if (points.size() < 2) throw UsageError("radius curve needs at least 2 points");
    for (std::size_t i = 1; i < points.size(); ++i) {
        if (!(points[i].r_nm > points[i - 1].r_nm))
            throw UsageError("radius curve grid must strictly increase");
        if (!(points[i].tau_eff_ns < points[i - 1].tau_eff_ns))
            throw NumericalError("radius curve tau_eff must strictly decrease");
    }
}

RadiusCurve tau_eff_curve(double r_min_nm, double r_max_nm, int n_points,
                          const TauEffCurveParams& params, int threads) {
    if (!(r_min_nm > 0.0 && r_min_nm < r_max_nm))
        throw UsageError("need 0 < r_min < r_max for the radius grid");
    if (n_points < 2) throw UsageError("radius curve needs at least 2 points");
    params.depth.validate();
    params.grid.validate();
    params.gate.validate();

    RadiusCurve curve;
    curve.points.resize(static_cast<std::size_t>(n_points));
    curve.generation = params;

    auto compute_point = [&](int i) {
        ModelParams p = params.model;
        p.foerster_radius_nm = r_min_nm + (r_max_nm - r_min_nm) * i / (n_points - 1);
        const DecayCurve decay = ensemble_decay(p, params.depth, params.grid);
        const LifetimeEstimate est = effective_lifetime(decay, params.gate, IrfSpec{});
        curve.points[static_cast<std::size_t>(i)] = {p.foerster_radius_nm, est.tau_ns};
    };

    int n_threads = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    if (n_threads < 1) n_threads = 1;
    n_threads = std::min(n_threads, n_points);
    if (n_threads <= 1) {
        for (int i = 0; i < n_points; ++i) compute_point(i);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n_threads; ++t) {
            pool.emplace_back([&, t] {
                for (int i = t; i < n_points; i += n_threads) compute_point(i);
            });
        }
        for (auto& th : pool) th.join();
    }

    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        if (!(curve.points[i].tau_eff_ns < curve.points[i - 1].tau_eff_ns)) {
            std::ostringstream msg;
            msg << "tau_eff(R) is not strictly decreasing between grid points " << i - 1
                << " and " << i << " (R = " << curve.points[i - 1].r_nm << ", "
                << curve.points[i].r_nm << " nm)";
            throw NumericalError(msg.str());
        }
    }
    return curve;
}

RadiusEstimate invert_radius(double tau_eff_ns, double sigma_ns, const RadiusCurve& curve) {
    curve.validate();
    if (!(sigma_ns >= 0.0)) throw UsageError("tau_eff sigma must be >= 0");

    // Reverse into ascending tau for the interpolant.
    std::vector<double> tau, radius;
    tau.reserve(curve.points.size());
    radius.reserve(curve.points.size());
    for (auto it = curve.points.rbegin(); it != curve.points.rend(); ++it) {
        tau.push_back(it->tau_eff_ns);
        radius.push_back(it->r_nm);
    }
    const double tau_lo = tau.front(), tau_hi = tau.back();
    if (tau_eff_ns < tau_lo || tau_eff_ns > tau_hi) {
        std::ostringstream msg;
        msg << "tau_eff = " << tau_eff_ns << " ns outside the calibrated range [" << tau_lo
            << ", " << tau_hi << "] ns";
        throw UsageError(msg.str());
    }

    const detail::MonotoneCubic interp(std::move(tau), std::move(radius));
    RadiusEstimate est;
    est.r_nm = interp.value(tau_eff_ns);
    est.sigma_nm = std::fabs(interp.derivative(tau_eff_ns)) * sigma_ns;
    return est;
}

}  // namespace fretflim
