// Independent test oracles: brute-force quadratures and finite differences.
// Deliberately simple and decoupled from the library's numerical paths.
#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "fretflim/model.hpp"

namespace oracle {

/// Composite trapezoid rule.
inline double trapezoid(const std::function<double(double)>& f, double a, double b, int n) {
    double sum = 0.5 * (f(a) + f(b));
    const double h = (b - a) / n;
    for (int i = 1; i < n; ++i) sum += f(a + i * h);
    return sum * h;
}

/// Ensemble decay by dense trapezoid quadrature over depth (not normalized).
inline double ensemble_decay_raw(const fretflim::ModelParams& p,
                                 const fretflim::DepthDistribution& d, double t_ns, int n = 1290) {
    return trapezoid(
        [&](double z) {
            return d.density(z) * fretflim::quenched_intensity(z, p) *
                   std::exp(-t_ns / fretflim::quenched_lifetime(z, p));
        },
        d.z_min_nm, d.z_max_nm, n);
}

/// Normalized ensemble decay: S(t) / S(0).
inline double ensemble_decay_value(const fretflim::ModelParams& p,
                                   const fretflim::DepthDistribution& d, double t_ns,
                                   int n = 1290) {
    return ensemble_decay_raw(p, d, t_ns, n) / ensemble_decay_raw(p, d, 0.0, n);
}

/// Brute-force convolution of a one-sided exponential with a unit-area
/// Gaussian: integral over u >= 0 of a e^(-u/tau) g(t - t0 - u) du, by
/// Gauss-Legendre panels on the kernel support. Near machine precision.
inline double conv_exp_gauss(double amplitude, double tau_ns, double sigma_ns, double t0_ns,
                             double t_ns) {
    const double dt = t_ns - t0_ns;
    const double lo = std::max(0.0, dt - 10.0 * sigma_ns);
    const double hi = dt + 10.0 * sigma_ns;
    if (hi <= lo) return 0.0;

    // 64-point Gauss-Legendre nodes via Newton iteration (self-contained).
    static std::vector<double> nodes, weights;
    if (nodes.empty()) {
        const int n = 64;
        nodes.resize(n);
        weights.resize(n);
        for (int i = 0; i < (n + 1) / 2; ++i) {
            double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = x;
                for (int k = 2; k <= n; ++k) {
                    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / dp;
                x -= dx;
                if (std::fabs(dx) < 1e-15) break;
            }
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
    }

    const double norm = 1.0 / (sigma_ns * std::sqrt(2.0 * M_PI));
    double total = 0.0;
    const int panels = 20;
    for (int p = 0; p < panels; ++p) {
        const double a = lo + (hi - lo) * p / panels;
        const double b = lo + (hi - lo) * (p + 1) / panels;
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const double u = mid + half * nodes[i];
            const double g = norm * std::exp(-0.5 * (dt - u) * (dt - u) / (sigma_ns * sigma_ns));
            total += half * weights[i] * amplitude * std::exp(-u / tau_ns) * g;
        }
    }
    return total;
}

/// Central finite difference of a scalar function.
inline double central_diff(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace oracle
