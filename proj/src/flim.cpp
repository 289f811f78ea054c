#include "fretflim/flim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "fretflim/errors.hpp"
#include "fretflim/rng.hpp"
#include "fretflim/simulate.hpp"
#include "lm.hpp"

namespace fretflim {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

int run_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace

void FlimCube::validate() const {
    if (width_px < 1 || height_px < 1) throw FormatError("cube has empty dimensions");
    if (!(pixel_size_nm > 0.0)) throw FormatError("cube pixel size must be > 0");
    grid.validate();
    const std::size_t expected = static_cast<std::size_t>(width_px) * height_px *
                                 static_cast<std::size_t>(grid.n_bins);
    if (counts.size() != expected)
        throw FormatError("cube payload size mismatch: have " + std::to_string(counts.size()) +
                          " bins, expected " + std::to_string(expected));
}

LifetimeMap fit_flim_cube(const FlimCube& cube, const GateSpec& gate, const IrfSpec& irf,
                          long min_counts, int threads) {
    cube.validate();
    gate.validate();
    irf.validate();
    if (min_counts < 100) throw UsageError("min_counts must be >= 100");

    LifetimeMap map;
    map.width_px = cube.width_px;
    map.height_px = cube.height_px;
    map.pixel_size_nm = cube.pixel_size_nm;
    map.pixels.resize(static_cast<std::size_t>(cube.width_px) * cube.height_px);

    const int n_px = cube.width_px * cube.height_px;
    auto fit_pixel = [&](int idx) {
        const int row = idx / cube.width_px;
        const int col = idx % cube.width_px;
        const auto bins = cube.pixel(row, col);

        PixelFit px;
        px.total_counts = 0;
        for (auto c : bins) px.total_counts += c;
        if (px.total_counts < static_cast<std::uint64_t>(min_counts)) {
            px.cls = PixelClass::LowSignal;
            px.tau_slow_ns = px.tau_slow_sigma_ns = kNan;
            px.tau_fast_ns = px.tau_fast_sigma_ns = kNan;
            map.pixels[static_cast<std::size_t>(idx)] = px;
            return;
        }

        TcspcHistogram h;
        h.grid = cube.grid;
        h.counts.assign(bins.begin(), bins.end());

        bool fast_significant = false;
        FitResult bi;
        try {
            FitModelSpec spec;
            spec.components = {ExpComponent{}, ExpComponent{}};
            spec.irf = irf;
            spec.use_irf = true;
            spec.fit_background = true;
            spec.objective = FitObjective::PoissonMle;
            bi = fit_decay(h, spec);
            const FittedComponent& fast = bi.components.front();
            const FittedComponent& slow = bi.components.back();
            // On mono-exponential pixels the two-component fit degenerates:
            // the real decay lands in one component and the other carries a
            // stray lifetime, or the decay splits into two nearby lifetimes
            // that each look marginally significant (2-3 sigma by chance).
            // Demand two distinct components that are significant at 3 sigma;
            // genuine acceptor components sit far above this line.
            fast_significant = bi.converged &&
                               fast.amplitude_sigma > 0.0 && slow.amplitude_sigma > 0.0 &&
                               fast.amplitude >= 3.0 * fast.amplitude_sigma &&
                               slow.amplitude >= 3.0 * slow.amplitude_sigma &&
                               slow.lifetime_ns > 1.5 * fast.lifetime_ns &&
                               slow.lifetime_ns < 900.0;
        } catch (const Error&) {
            fast_significant = false;
        }

        if (fast_significant) {
            px.cls = PixelClass::OnFlake;
            px.tau_fast_ns = bi.components[0].lifetime_ns;
            px.tau_fast_sigma_ns = bi.components[0].lifetime_sigma_ns;
            px.tau_slow_ns = bi.components[1].lifetime_ns;
            px.tau_slow_sigma_ns = bi.components[1].lifetime_sigma_ns;
            px.amp_fast = bi.components[0].amplitude;
            px.amp_slow = bi.components[1].amplitude;
            px.goodness = bi.goodness;
        } else {
            // Mono-exponential pixel: fit the gated decay like the
            // effective-lifetime path; fall back to a full-range mono fit if
            // the gate cannot be applied.
            px.cls = PixelClass::OffFlake;
            px.tau_fast_ns = px.tau_fast_sigma_ns = kNan;
            px.amp_fast = 0.0;
            try {
                const LifetimeEstimate est = effective_lifetime(h, gate, irf, false);
                px.tau_slow_ns = est.tau_ns;
                px.tau_slow_sigma_ns = est.sigma_ns;
                px.amp_slow = est.detail.components.back().amplitude;
                px.goodness = est.detail.goodness;
            } catch (const Error&) {
                try {
                    FitModelSpec mono;
                    mono.components = {ExpComponent{}};
                    mono.irf = irf;
                    mono.use_irf = true;
                    mono.fit_background = true;
                    const FitResult fr = fit_decay(h, mono);
                    px.tau_slow_ns = fr.components[0].lifetime_ns;
                    px.tau_slow_sigma_ns = fr.components[0].lifetime_sigma_ns;
                    px.amp_slow = fr.components[0].amplitude;
                    px.goodness = fr.goodness;
                } catch (const Error&) {
                    px.cls = PixelClass::LowSignal;
                    px.tau_slow_ns = px.tau_slow_sigma_ns = kNan;
                }
            }
        }
        map.pixels[static_cast<std::size_t>(idx)] = px;
    };

    const int n_threads = std::min(run_threads(threads), n_px);
    if (n_threads <= 1) {
        for (int i = 0; i < n_px; ++i) fit_pixel(i);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n_threads; ++t) {
            pool.emplace_back([&, t] {
                for (int i = t; i < n_px; i += n_threads) fit_pixel(i);
            });
        }
        for (auto& th : pool) th.join();
    }
    return map;
}

EdgeProfileResult edge_profile(const LifetimeMap& map, double start_row, double start_col,
                               double end_row, double end_col, int halfwidth_px) {
    if (map.pixels.empty()) throw UsageError("lifetime map is empty");
    if (halfwidth_px < 0) throw UsageError("halfwidth must be >= 0");

    const double dr = end_row - start_row;
    const double dc = end_col - start_col;
    const double len = std::hypot(dr, dc);
    if (!(len >= 4.0)) throw UsageError("profile line is too short");
    const double ur = dr / len, uc = dc / len;
    const double nr = -uc, nc = ur;  // transverse unit vector

    const int n_samples = static_cast<int>(std::floor(len)) + 1;
    std::vector<double> s_nm, value;
    int n_on = 0, n_off = 0;
    for (int i = 0; i < n_samples; ++i) {
        const double pr = start_row + ur * i;
        const double pc = start_col + uc * i;
        double sum = 0.0;
        int cnt = 0;
        for (int j = -halfwidth_px; j <= halfwidth_px; ++j) {
            const int row = static_cast<int>(std::lround(pr + nr * j));
            const int col = static_cast<int>(std::lround(pc + nc * j));
            if (row < 0 || row >= map.height_px || col < 0 || col >= map.width_px) continue;
            const PixelFit& px = map.at(row, col);
            if (px.cls == PixelClass::LowSignal) continue;
            sum += px.tau_slow_ns;
            ++cnt;
            if (px.cls == PixelClass::OnFlake) ++n_on;
            else ++n_off;
        }
        if (cnt == 0) continue;
        s_nm.push_back(i * map.pixel_size_nm);
        value.push_back(sum / cnt);
    }

    if (n_on == 0 || n_off == 0)
        throw UsageError("profile line does not cross an on-flake/off-flake transition");
    if (s_nm.size() < 16) throw UsageError("profile line has too few usable samples");

    // Initial guesses: plateaus from the ends, edge from the mid-level crossing.
    const std::size_t n = s_nm.size();
    const std::size_t n_end = std::max<std::size_t>(3, n / 8);
    double p0 = 0.0, p1 = 0.0;
    for (std::size_t i = 0; i < n_end; ++i) p0 += value[i];
    for (std::size_t i = n - n_end; i < n; ++i) p1 += value[i];
    p0 /= n_end;
    p1 /= n_end;
    const double mid = 0.5 * (p0 + p1);
    double s0 = s_nm[n / 2];
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double a = value[i] - mid, b = value[i + 1] - mid;
        if (a == 0.0 || a * b < 0.0) {
            const double f = a / (a - b);
            s0 = s_nm[i] + f * (s_nm[i + 1] - s_nm[i]);
            break;
        }
    }

    int left = 0, right = 0;
    for (std::size_t i = 0; i < n; ++i) (s_nm[i] < s0 ? left : right)++;
    if (left < 8 || right < 8)
        throw UsageError("need at least 8 samples on each side of the transition");

    // v(s) = p0 + (p1 - p0) * Phi((s - s0)/sigma)
    auto eval = [&](const double* p, double* model, double* jac) {
        const double q0 = p[0], q1 = p[1], es = p[2], sg = p[3];
        for (std::size_t k = 0; k < n; ++k) {
            const double u = (s_nm[k] - es) / sg;
            const double cdf = 0.5 * std::erfc(-u / std::sqrt(2.0));
            const double pdf = std::exp(-0.5 * u * u) / std::sqrt(2.0 * M_PI);
            model[k] = q0 + (q1 - q0) * cdf;
            if (jac) {
                double* row = jac + k * 4;
                row[0] = 1.0 - cdf;
                row[1] = cdf;
                row[2] = -(q1 - q0) * pdf / sg;
                row[3] = -(q1 - q0) * pdf * u / sg;
            }
        }
    };

    std::vector<detail::LmBounds> bounds(4);
    bounds[2] = {s_nm.front(), s_nm.back()};
    bounds[3] = {0.25 * map.pixel_size_nm, s_nm.back() - s_nm.front()};
    detail::LmSolver solver(value, detail::LmObjective::LeastSquares, 4, eval, bounds);
    const detail::LmOutcome lm =
        solver.run({p0, p1, s0, std::max(map.pixel_size_nm, 0.02 * (s_nm.back() - s_nm.front()))});
    if (!lm.converged) throw NumericalError("edge profile fit did not converge");

    const double fwhm_factor = 2.0 * std::sqrt(2.0 * std::log(2.0));
    EdgeProfileResult result;
    result.edge_position_nm = lm.params[2];
    result.edge_position_sigma_nm = lm.sigma[2];
    result.psf_fwhm_nm = fwhm_factor * lm.params[3];
    result.psf_fwhm_sigma_nm = fwhm_factor * lm.sigma[3];
    result.tau_bulk_side_ns = std::max(lm.params[0], lm.params[1]);
    result.tau_quenched_side_ns = std::min(lm.params[0], lm.params[1]);
    result.residual_norm = std::sqrt(lm.objective);
    return result;
}

double photon_budget_s(double count_rate_cps, double min_photons) {
    if (!(count_rate_cps > 0.0)) throw UsageError("count rate must be > 0");
    if (!(min_photons > 0.0)) throw UsageError("photon count must be > 0");
    return min_photons / count_rate_cps;
}

long empirical_min_photons(const MinPhotonsSetup& setup, double target_rel_error,
                           std::uint64_t seed) {
    if (!(target_rel_error > 0.0 && target_rel_error < 1.0))
        throw UsageError("target relative error must be in (0, 1)");
    if (setup.trials < 10) throw UsageError("need at least 10 trials per rung");
    setup.grid.validate();
    setup.irf.validate();

    const DecayCurve model =
        irf_convolve(mono_exp_curve(setup.tau_true_ns, setup.grid), setup.irf);

    FitModelSpec spec;
    spec.components = {ExpComponent{}};
    spec.irf = setup.irf;
    spec.use_irf = true;
    // The synthetic decay is background-free and the pulse time is known;
    // freeing them degrades low-count fits and masks the tau photon economy
    // this search is meant to measure.
    spec.fit_background = false;
    spec.background = 0.0;
    spec.freeze_t0 = true;
    spec.t0_ns = 0.0;
    spec.objective = FitObjective::PoissonMle;

    std::vector<long> ladder;
    for (long decade = 10; decade <= setup.ladder_max; decade *= 10)
        for (long m : {1L, 2L, 5L}) {
            const long rung = decade * m;
            if (rung <= setup.ladder_max) ladder.push_back(rung);
        }

    for (std::size_t rung_idx = 0; rung_idx < ladder.size(); ++rung_idx) {
        const long photons = ladder[rung_idx];
        std::vector<double> taus;
        taus.reserve(static_cast<std::size_t>(setup.trials));
        bool admissible = true;
        for (int trial = 0; trial < setup.trials; ++trial) {
            Rng rng = Rng::derive(seed, rung_idx, static_cast<std::uint64_t>(trial));
            const std::uint64_t trial_seed = rng.next_u64();
            try {
                const TcspcHistogram h =
                    sample_histogram(model, static_cast<double>(photons), trial_seed);
                const FitResult fit = fit_decay(h, spec);
                // Non-converged estimates stay in: their scatter is what the
                // criterion measures.
                taus.push_back(fit.components.back().lifetime_ns);
            } catch (const UsageError&) {
                admissible = false;  // rung rejected by fit preconditions
                break;
            }
        }
        if (!admissible) continue;

        double mean = 0.0;
        for (double t : taus) mean += t;
        mean /= static_cast<double>(taus.size());
        double var = 0.0;
        for (double t : taus) var += (t - mean) * (t - mean);
        var /= static_cast<double>(taus.size() - 1);
        const double rel = std::sqrt(var) / mean;
        if (rel <= target_rel_error) return photons;
    }
    throw NumericalError("photon ladder exhausted without reaching the target precision");
}

}  // namespace fretflim
