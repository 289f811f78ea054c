#include "fretflim/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fretflim/errors.hpp"
#include "lm.hpp"

namespace fretflim {

namespace {

constexpr double kTauLoNs = 1e-3;  // 1 ps
constexpr double kTauHiNs = 1e3;   // 1 us

double sqr(double x) { return x * x; }

struct LinFit {
    double slope = 0.0;
    double intercept = 0.0;
    bool ok = false;
};

// Weighted linear regression of ln(y - b0) against t over [i0, i1).
LinFit log_linear(const std::vector<double>& y, const TimeGrid& grid, double b0, int i0, int i1) {
    double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
    for (int i = i0; i < i1; ++i) {
        const double v = y[static_cast<std::size_t>(i)] - b0;
        if (v <= 0.0) continue;
        const double w = v;  // Poisson-ish: var(ln y) ~ 1/y
        const double x = grid.rel_time_ns(i);
        const double ly = std::log(v);
        sw += w;
        swx += w * x;
        swy += w * ly;
        swxx += w * x * x;
        swxy += w * x * ly;
    }
    LinFit f;
    const double det = sw * swxx - swx * swx;
    if (sw <= 0.0 || std::fabs(det) < 1e-300) return f;
    f.slope = (sw * swxy - swx * swy) / det;
    f.intercept = (swxx * swy - swx * swxy) / det;
    f.ok = true;
    return f;
}

struct Prepared {
    std::vector<ExpComponent> comps;
    double t0_ns = 0.0;
    double background = 0.0;
};

// Deterministic initial guesses: t0 from the histogram peak, lifetimes from
// log-linear regression on early/late sub-ranges, amplitudes from the peak.
Prepared auto_init(const std::vector<double>& y, const TimeGrid& grid, const FitModelSpec& spec) {
    const int n = static_cast<int>(y.size());
    int peak_idx = 0;
    for (int i = 1; i < n; ++i)
        if (y[static_cast<std::size_t>(i)] > y[static_cast<std::size_t>(peak_idx)]) peak_idx = i;
    const double peak = y[static_cast<std::size_t>(peak_idx)];
    const double peak_t = grid.rel_time_ns(peak_idx);
    const double fwhm_ns = spec.use_irf ? spec.irf.fwhm_ps * 1e-3 : 0.0;

    Prepared out;

    // Background from the quiet region before the rise, when one exists.
    double b0 = 0.0;
    if (spec.fit_background) {
        int n_pre = 0;
        double sum_pre = 0.0;
        for (int i = 0; i < n; ++i) {
            if (grid.rel_time_ns(i) >= -4.0 * std::max(fwhm_ns, 0.1)) break;
            sum_pre += y[static_cast<std::size_t>(i)];
            ++n_pre;
        }
        if (n_pre >= 4) b0 = sum_pre / n_pre;
    }
    out.background = b0;

    // End of the usable decay range.
    int tail_idx = peak_idx;
    for (int i = n - 1; i > peak_idx; --i) {
        if (y[static_cast<std::size_t>(i)] - b0 >= 0.02 * (peak - b0)) {
            tail_idx = i;
            break;
        }
    }
    if (tail_idx <= peak_idx + 4) tail_idx = n - 1;

    const bool bi = spec.components.size() == 2;
    if (!bi) {
        int i0 = peak_idx;
        while (i0 < tail_idx && grid.rel_time_ns(i0) < peak_t + 2.0 * fwhm_ns) ++i0;
        LinFit f = log_linear(y, grid, b0, i0, tail_idx + 1);
        double tau = f.ok && f.slope < 0.0 ? -1.0 / f.slope : grid.span_ns() / 10.0;
        tau = std::clamp(tau, kTauLoNs, kTauHiNs);
        double amp = f.ok ? std::exp(f.intercept - peak_t / tau) : peak - b0;
        if (!(amp > 0.0) || !std::isfinite(amp)) amp = std::max(peak - b0, 1e-9);
        out.comps = {ExpComponent{amp, tau}};
    } else {
        // Slow component from the late range, amplitude referenced to the peak time.
        const int late0 = peak_idx + std::max(1, static_cast<int>(0.35 * (tail_idx - peak_idx)));
        LinFit fs = log_linear(y, grid, b0, late0, tail_idx + 1);
        double tau_s = fs.ok && fs.slope < 0.0 ? -1.0 / fs.slope : grid.span_ns() / 10.0;
        tau_s = std::clamp(tau_s, kTauLoNs, kTauHiNs);
        double amp_s = fs.ok ? std::exp(fs.intercept - peak_t / tau_s) : std::max(peak - b0, 1e-9);
        if (!(amp_s > 0.0) || !std::isfinite(amp_s)) amp_s = std::max(0.1 * (peak - b0), 1e-9);

        // Fast component from the early residual.
        const int early1 = peak_idx + std::max(2, static_cast<int>(0.12 * (tail_idx - peak_idx)));
        std::vector<double> resid(y.size(), 0.0);
        for (int i = peak_idx; i <= std::min(early1, n - 1); ++i) {
            const double t = grid.rel_time_ns(i);
            const double slow = amp_s * std::exp(-(t - peak_t) / tau_s);
            resid[static_cast<std::size_t>(i)] =
                std::max(y[static_cast<std::size_t>(i)] - b0 - slow, 0.0);
        }
        LinFit ff = log_linear(resid, grid, 0.0, peak_idx, std::min(early1, n - 1) + 1);
        double tau_f = ff.ok && ff.slope < 0.0 ? -1.0 / ff.slope : tau_s / 10.0;
        if (!(tau_f > 0.0) || tau_f >= 0.8 * tau_s) tau_f = tau_s / 10.0;
        tau_f = std::clamp(tau_f, kTauLoNs, kTauHiNs);
        double amp_f = ff.ok ? std::exp(ff.intercept - peak_t / tau_f) : 0.0;
        if (!(amp_f > 0.0) || !std::isfinite(amp_f)) amp_f = std::max(0.5 * (peak - b0), 1e-9);
        out.comps = {ExpComponent{amp_f, tau_f}, ExpComponent{amp_s, tau_s}};
    }

    // Honor caller-provided guesses where present.
    for (std::size_t c = 0; c < spec.components.size(); ++c) {
        if (spec.components[c].lifetime_ns > 0.0)
            out.comps[c].lifetime_ns = std::clamp(spec.components[c].lifetime_ns, kTauLoNs, kTauHiNs);
        if (spec.components[c].amplitude > 0.0) out.comps[c].amplitude = spec.components[c].amplitude;
    }
    if (spec.background > 0.0) out.background = spec.background;

    out.t0_ns = spec.freeze_t0 ? spec.t0_ns : peak_t - 0.5 * fwhm_ns;
    return out;
}

struct ParamLayout {
    // theta = [lnA_1, lnTau_1, (lnA_2, lnTau_2), (t0), (b)]
    int n_comps = 1;
    bool fit_t0 = false;
    bool fit_background = false;
    int size() const { return 2 * n_comps + (fit_t0 ? 1 : 0) + (fit_background ? 1 : 0); }
    int idx_t0() const { return 2 * n_comps; }
    int idx_b() const { return 2 * n_comps + (fit_t0 ? 1 : 0); }
};

}  // namespace

void FitModelSpec::validate() const {
    if (components.empty() || components.size() > 2)
        throw UsageError("fit supports 1 or 2 exponential components, got " +
                         std::to_string(components.size()));
    if (use_irf) irf.validate();
    if (background < 0.0) throw UsageError("background must be >= 0");
    if (max_iterations < 1) throw UsageError("max_iterations must be >= 1");
}

void GateSpec::validate() const {
    if (!(head_cut_ns >= 0.0)) throw UsageError("head_cut_ns must be >= 0");
    if (!(tail_threshold_fraction > 0.0 && tail_threshold_fraction < 1.0))
        throw UsageError("tail_threshold_fraction must be in (0, 1)");
}

double erfcx(double x) {
    if (x < 0.0) {
        // erfcx(-x) = 2 exp(x^2) - erfcx(x); overflows for very negative x,
        // matching the true function's growth.
        const double e = std::exp(x * x);
        return 2.0 * e - erfcx(-x);
    }
    if (x < 4.0) return std::exp(x * x) * std::erfc(x);
    // Laplace continued fraction, evaluated backward; ~machine precision
    // for x >= 4.
    double t = x;
    for (int n = 40; n >= 1; --n) t = x + (0.5 * n) / t;
    return 1.0 / (std::sqrt(M_PI) * t);
}

double exp_gauss_model(double t_ns, const ExpComponent& c, const IrfSpec& irf, double t0_ns) {
    return exp_gauss_gradient(t_ns, c, irf, t0_ns).value;
}

ExpGaussGrad exp_gauss_gradient(double t_ns, const ExpComponent& c, const IrfSpec& irf,
                                double t0_ns) {
    if (!(c.lifetime_ns > 0.0)) throw UsageError("component lifetime must be > 0");
    irf.validate();
    const double sigma = irf.sigma_ns();
    const double tau = c.lifetime_ns;
    const double dt = t_ns - t0_ns - irf.center_ps * 1e-3;

    const double u = sigma / (std::sqrt(2.0) * tau) - dt / (std::sqrt(2.0) * sigma);
    const double gq = std::exp(-0.5 * sqr(dt / sigma));  // exp(s^2/2tau^2 - dt/tau - u^2)

    double m;  // exp(s^2/2tau^2 - dt/tau) * erfc(u), branch-stable
    if (u >= 0.0) {
        m = erfcx(u) * gq;
    } else {
        m = std::erfc(u) * std::exp(0.5 * sqr(sigma / tau) - dt / tau);
    }

    ExpGaussGrad g;
    g.value = 0.5 * c.amplitude * m;
    g.d_amplitude = 0.5 * m;
    g.d_lifetime = 0.5 * c.amplitude *
                   ((dt / sqr(tau) - sqr(sigma) / (tau * sqr(tau))) * m +
                    std::sqrt(2.0) * sigma / (std::sqrt(M_PI) * sqr(tau)) * gq);
    g.d_t0 = 0.5 * c.amplitude * (m / tau - 2.0 / (std::sqrt(2.0 * M_PI) * sigma) * gq);
    return g;
}

namespace {

FitResult fit_core(const TimeGrid& grid, const std::vector<double>& y, const FitModelSpec& spec) {
    spec.validate();
    grid.validate();
    if (static_cast<int>(y.size()) != grid.n_bins)
        throw UsageError("data length does not match the time grid");

    const Prepared init = auto_init(y, grid, spec);

    ParamLayout layout;
    layout.n_comps = static_cast<int>(spec.components.size());
    layout.fit_t0 = spec.use_irf && !spec.freeze_t0;
    layout.fit_background = spec.fit_background;
    const int np = layout.size();

    std::vector<double> p0;
    std::vector<detail::LmBounds> bounds;
    for (int c = 0; c < layout.n_comps; ++c) {
        p0.push_back(std::log(std::max(init.comps[static_cast<std::size_t>(c)].amplitude, 1e-12)));
        bounds.push_back({std::log(1e-12), std::log(1e15)});
        p0.push_back(std::log(init.comps[static_cast<std::size_t>(c)].lifetime_ns));
        bounds.push_back({std::log(kTauLoNs), std::log(kTauHiNs)});
    }
    if (layout.fit_t0) {
        // The decay start can only sit within a few response widths of the
        // observed peak; a loose t0 walks the fit into flat local minima.
        const double fwhm_ns = spec.irf.fwhm_ps * 1e-3;
        const double slack = 3.0 * fwhm_ns + 3.0 * grid.bin_width_ps * 1e-3;
        p0.push_back(init.t0_ns);
        bounds.push_back({init.t0_ns - slack, init.t0_ns + slack});
    }
    if (layout.fit_background) {
        p0.push_back(std::max(init.background, 0.0));
        bounds.push_back({0.0, std::numeric_limits<double>::infinity()});
    }

    const double frozen_t0 = spec.freeze_t0 || !spec.use_irf ? spec.t0_ns : init.t0_ns;
    const double frozen_b = spec.fit_background ? 0.0 : spec.background;

    auto eval = [&](const double* p, double* model, double* jac) {
        const double t0 = layout.fit_t0 ? p[layout.idx_t0()] : frozen_t0;
        const double b = layout.fit_background ? p[layout.idx_b()] : frozen_b;
        for (int k = 0; k < grid.n_bins; ++k) {
            const double t = grid.rel_time_ns(k);
            double mk = b;
            double* row = jac ? jac + static_cast<std::size_t>(k) * np : nullptr;
            double d_t0_total = 0.0;
            for (int c = 0; c < layout.n_comps; ++c) {
                const double amp = std::exp(p[2 * c]);
                const double tau = std::exp(p[2 * c + 1]);
                if (spec.use_irf) {
                    const ExpGaussGrad g =
                        exp_gauss_gradient(t, ExpComponent{amp, tau}, spec.irf, t0);
                    mk += g.value;
                    if (row) {
                        row[2 * c] = amp * g.d_amplitude;     // d/d lnA
                        row[2 * c + 1] = tau * g.d_lifetime;  // d/d lnTau
                        d_t0_total += g.d_t0;
                    }
                } else {
                    const double dt = t - t0;
                    const double v = dt >= 0.0 ? amp * std::exp(-dt / tau) : 0.0;
                    mk += v;
                    if (row) {
                        row[2 * c] = v;
                        row[2 * c + 1] = dt >= 0.0 ? v * dt / tau : 0.0;
                    }
                }
            }
            model[k] = mk;
            if (row) {
                if (layout.fit_t0) row[layout.idx_t0()] = d_t0_total;
                if (layout.fit_background) row[layout.idx_b()] = 1.0;
            }
        }
    };

    const auto objective = spec.objective == FitObjective::PoissonMle
                               ? detail::LmObjective::PoissonMle
                               : detail::LmObjective::PoissonWls;
    detail::LmOptions options;
    options.max_iterations = spec.max_iterations;
    detail::LmSolver solver(y, objective, np, eval, bounds, options);
    const detail::LmOutcome lm = solver.run(p0);

    FitResult result;
    result.objective = spec.objective;
    result.iterations = lm.iterations;
    result.converged = lm.converged;
    result.n_points = grid.n_bins;
    result.t0_ns = layout.fit_t0 ? lm.params[static_cast<std::size_t>(layout.idx_t0())] : frozen_t0;
    result.t0_sigma_ns = layout.fit_t0 ? lm.sigma[static_cast<std::size_t>(layout.idx_t0())] : 0.0;
    result.background =
        layout.fit_background ? lm.params[static_cast<std::size_t>(layout.idx_b())] : frozen_b;
    result.background_sigma =
        layout.fit_background ? lm.sigma[static_cast<std::size_t>(layout.idx_b())] : 0.0;
    for (int c = 0; c < layout.n_comps; ++c) {
        FittedComponent fc;
        fc.amplitude = std::exp(lm.params[static_cast<std::size_t>(2 * c)]);
        fc.amplitude_sigma = fc.amplitude * lm.sigma[static_cast<std::size_t>(2 * c)];
        fc.lifetime_ns = std::exp(lm.params[static_cast<std::size_t>(2 * c + 1)]);
        fc.lifetime_sigma_ns = fc.lifetime_ns * lm.sigma[static_cast<std::size_t>(2 * c + 1)];
        result.components.push_back(fc);
    }
    std::sort(result.components.begin(), result.components.end(),
              [](const FittedComponent& a, const FittedComponent& b) {
                  return a.lifetime_ns < b.lifetime_ns;
              });

    if (spec.objective == FitObjective::WeightedLeastSquares) {
        const int dof = std::max(1, grid.n_bins - np);
        result.goodness = lm.objective / dof;  // reduced chi^2
    } else {
        result.goodness = lm.objective;  // deviance
    }
    return result;
}

void check_count_preconditions(const std::vector<double>& y) {
    int nonzero = 0;
    double total = 0.0;
    for (double v : y) {
        if (v > 0.0) ++nonzero;
        total += v;
    }
    if (nonzero < 10)
        throw UsageError("fit needs at least 10 bins with nonzero counts, got " +
                         std::to_string(nonzero));
    if (total < 100.0)
        throw UsageError("fit needs at least 100 total counts, got " +
                         std::to_string(static_cast<long>(total)));
}

}  // namespace

FitResult fit_decay(const TcspcHistogram& h, const FitModelSpec& spec) {
    std::vector<double> y(h.counts.begin(), h.counts.end());
    check_count_preconditions(y);
    return fit_core(h.grid, y, spec);
}

FitResult fit_decay_values(const TimeGrid& grid, const std::vector<double>& values,
                           const FitModelSpec& spec) {
    int positive = 0;
    for (double v : values) {
        if (v < 0.0) throw UsageError("decay values must be nonnegative");
        if (v > 0.0) ++positive;
    }
    if (positive < 10) throw UsageError("fit needs at least 10 bins with positive values");
    return fit_core(grid, values, spec);
}

namespace {

struct GateRange {
    int first = 0;
    int last = 0;  // inclusive
};

template <typename T>
GateRange gate_range(const std::vector<T>& y, const TimeGrid& grid, const GateSpec& g,
                     double min_peak) {
    g.validate();
    const int n = static_cast<int>(y.size());
    int peak_idx = 0;
    for (int i = 1; i < n; ++i)
        if (y[static_cast<std::size_t>(i)] > y[static_cast<std::size_t>(peak_idx)]) peak_idx = i;
    if (!(static_cast<double>(y[static_cast<std::size_t>(peak_idx)]) >= min_peak))
        throw UsageError("histogram has no identifiable peak");

    const double t_start = grid.rel_time_ns(peak_idx) + g.head_cut_ns;
    int first = peak_idx;
    while (first < n && grid.rel_time_ns(first) < t_start) ++first;
    if (first >= n - 1) throw NumericalError("gate removed all bins (head cut too large)");

    double ref = 0.0;
    const int n_ref = std::min(5, n - first);
    for (int i = first; i < first + n_ref; ++i) ref += static_cast<double>(y[static_cast<std::size_t>(i)]);
    ref /= n_ref;
    const double threshold = g.tail_threshold_fraction * ref;

    int last = -1;
    for (int i = n - 1; i >= first; --i) {
        if (static_cast<double>(y[static_cast<std::size_t>(i)]) >= threshold) {
            last = i;
            break;
        }
    }
    if (last < first + 1) throw NumericalError("gate removed all bins (tail threshold too high)");
    return {first, last};
}

TimeGrid subgrid(const TimeGrid& grid, int first, int count) {
    TimeGrid out = grid;
    out.n_bins = count;
    out.origin_ps = grid.origin_ps - first * grid.bin_width_ps;
    return out;
}

}  // namespace

TcspcHistogram gate_histogram(const TcspcHistogram& h, const GateSpec& g) {
    const GateRange r = gate_range(h.counts, h.grid, g, 10.0);
    TcspcHistogram out;
    out.grid = subgrid(h.grid, r.first, r.last - r.first + 1);
    out.counts.assign(h.counts.begin() + r.first, h.counts.begin() + r.last + 1);
    return out;
}

DecayCurve gate_curve(const DecayCurve& c, const GateSpec& g) {
    const GateRange r = gate_range(c.values, c.grid, g, 1e-300);
    DecayCurve out;
    out.grid = subgrid(c.grid, r.first, r.last - r.first + 1);
    out.values.assign(c.values.begin() + r.first, c.values.begin() + r.last + 1);
    return out;
}

namespace {

LifetimeEstimate effective_lifetime_core(const TimeGrid& grid, const std::vector<double>& y,
                                         const IrfSpec& irf, bool use_irf, bool counts) {
    FitModelSpec spec;
    spec.components = {ExpComponent{}};
    spec.irf = irf;
    spec.use_irf = use_irf;
    spec.fit_background = false;
    spec.background = 0.0;
    spec.objective = FitObjective::PoissonMle;
    if (use_irf) {
        spec.freeze_t0 = true;
        spec.t0_ns = 0.0;  // pulse position; the response is negligible past the gate
    } else {
        spec.freeze_t0 = true;
        spec.t0_ns = grid.rel_time_ns(0);
    }
    if (counts) check_count_preconditions(y);
    const FitResult fit = fit_core(grid, y, spec);

    LifetimeEstimate est;
    est.tau_ns = fit.components.back().lifetime_ns;
    est.sigma_ns = fit.components.back().lifetime_sigma_ns;
    est.detail = fit;
    return est;
}

}  // namespace

LifetimeEstimate effective_lifetime(const TcspcHistogram& h, const GateSpec& g, const IrfSpec& irf,
                                    bool use_irf) {
    const TcspcHistogram gated = gate_histogram(h, g);
    std::vector<double> y(gated.counts.begin(), gated.counts.end());
    return effective_lifetime_core(gated.grid, y, irf, use_irf, true);
}

LifetimeEstimate effective_lifetime(const DecayCurve& c, const GateSpec& g, const IrfSpec& irf,
                                    bool use_irf) {
    const DecayCurve gated = gate_curve(c, g);
    return effective_lifetime_core(gated.grid, gated.values, irf, use_irf, false);
}

}  // namespace fretflim
