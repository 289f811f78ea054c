#include "fretflim/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <thread>

#include "fretflim/errors.hpp"
#include "fretflim/rng.hpp"
#include "gauss_legendre.hpp"

namespace fretflim {

namespace {

constexpr int kQuadratureNodes = 129;

struct DepthTable {
    std::vector<double> weight;       // w_i * D(z_i) * I(z_i)
    std::vector<double> inv_tau_ns;   // 1 / tau(z_i)
};

DepthTable depth_table(const ModelParams& p, const DepthDistribution& d, int n_nodes) {
    const auto rule = detail::gauss_legendre(n_nodes, d.z_min_nm, d.z_max_nm);
    DepthTable table;
    table.weight.resize(rule.nodes.size());
    table.inv_tau_ns.resize(rule.nodes.size());
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double z = rule.nodes[i];
        table.weight[i] = rule.weights[i] * d.density(z) * quenched_intensity(z, p);
        table.inv_tau_ns[i] = 1.0 / quenched_lifetime(z, p);
    }
    return table;
}

double table_value(const DepthTable& t, double time_ns) {
    double sum = 0.0;
    for (std::size_t i = 0; i < t.weight.size(); ++i)
        sum += t.weight[i] * std::exp(-time_ns * t.inv_tau_ns[i]);
    return sum;
}

int run_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

bool point_in_polygon(double x, double y, const std::vector<std::array<double, 2>>& poly) {
    bool inside = false;
    const std::size_t n = poly.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const double xi = poly[i][0], yi = poly[i][1];
        const double xj = poly[j][0], yj = poly[j][1];
        if ((yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi)
            inside = !inside;
    }
    return inside;
}

}  // namespace

void SignalComposition::validate() const {
    if (!(donor_weight >= 0.0 && acceptor_weight >= 0.0 && background_rate >= 0.0))
        throw UsageError("signal weights must be >= 0");
    if (!(acceptor_lifetime_ns > 0.0)) throw UsageError("acceptor_lifetime_ns must be > 0");
}

void FlimScene::validate() const {
    if (width_px < 1 || height_px < 1) throw UsageError("scene must have at least one pixel");
    if (!(pixel_size_nm > 0.0)) throw UsageError("pixel_size_nm must be > 0");
    if (!(photons_per_pixel > 0.0)) throw UsageError("photons_per_pixel must be > 0");
    if (!(psf_fwhm_nm >= 0.0)) throw UsageError("psf_fwhm_nm must be >= 0");
    on_flake.validate();
    off_flake.validate();
    const double w_nm = width_px * pixel_size_nm;
    const double h_nm = height_px * pixel_size_nm;
    for (const auto& poly : flakes) {
        if (poly.size() < 3) throw UsageError("flake polygons need at least 3 vertices");
        for (const auto& v : poly)
            if (v[0] < 0.0 || v[0] > w_nm || v[1] < 0.0 || v[1] > h_nm)
                throw UsageError("flake polygon vertex outside image bounds");
    }
}

DecayCurve ensemble_decay(const ModelParams& p, const DepthDistribution& d,
                          const TimeGrid& grid) {
    p.validate();
    d.validate();
    grid.validate();

    const DepthTable coarse = depth_table(p, d, kQuadratureNodes);
    const DepthTable fine = depth_table(p, d, 2 * kQuadratureNodes - 1);

    const double norm_coarse = table_value(coarse, 0.0);
    const double norm_fine = table_value(fine, 0.0);

    // Node-doubling convergence check at probe times across the decay.
    const double t_probe_max = std::min(3.0 * p.bulk_lifetime_ns, grid.span_ns());
    for (int k = 0; k <= 16; ++k) {
        const double t = t_probe_max * k / 16.0;
        const double a = table_value(coarse, t) / norm_coarse;
        const double b = table_value(fine, t) / norm_fine;
        if (std::fabs(a - b) > 1e-6 * std::max(std::fabs(b), 1e-12))
            throw NumericalError("depth quadrature did not converge at t = " +
                                 std::to_string(t) + " ns");
    }

    DecayCurve curve;
    curve.grid = grid;
    curve.values.assign(static_cast<std::size_t>(grid.n_bins), 0.0);
    for (int k = 0; k < grid.n_bins; ++k) {
        const double t = grid.rel_time_ns(k);
        if (t < 0.0) continue;
        curve.values[k] = table_value(fine, t) / norm_fine;
    }
    return curve;
}

DecayCurve mono_exp_curve(double lifetime_ns, const TimeGrid& grid) {
    if (!(lifetime_ns > 0.0)) throw UsageError("lifetime must be > 0");
    grid.validate();
    DecayCurve curve;
    curve.grid = grid;
    curve.values.assign(static_cast<std::size_t>(grid.n_bins), 0.0);
    for (int k = 0; k < grid.n_bins; ++k) {
        const double t = grid.rel_time_ns(k);
        if (t < 0.0) continue;
        curve.values[k] = std::exp(-t / lifetime_ns);
    }
    return curve;
}

DecayCurve irf_convolve(const DecayCurve& curve, const IrfSpec& irf) {
    irf.validate();
    curve.grid.validate();
    const double dt = curve.grid.bin_width_ps;
    const int n = curve.grid.n_bins;

    const int center_shift = static_cast<int>(std::lround(irf.center_ps / dt));
    if (irf.fwhm_ps < dt) {
        // Sub-bin response: delta kernel (shift only).
        DecayCurve out;
        out.grid = curve.grid;
        out.values.resize(curve.values.size());
        for (int k = 0; k < n; ++k)
            out.values[static_cast<std::size_t>(((k + center_shift) % n + n) % n)] =
                curve.values[static_cast<std::size_t>(k)];
        return out;
    }
    if (dt > irf.fwhm_ps / 4.0)
        throw UsageError("time grid too coarse for the IRF: need bin width <= fwhm/4");

    // Kernel taps are exact Gaussian bin masses (erf differences) out to
    // 8 sigma, normalized to unit sum.
    const double sigma_ps = irf.fwhm_ps / (2.0 * std::sqrt(2.0 * std::log(2.0)));
    const int half = static_cast<int>(std::ceil(8.0 * sigma_ps / dt));
    std::vector<double> kernel(static_cast<std::size_t>(2 * half + 1));
    const double inv = 1.0 / (std::sqrt(2.0) * sigma_ps);
    double sum = 0.0;
    for (int j = -half; j <= half; ++j) {
        const double lo = (j - 0.5) * dt - irf.center_ps;
        const double hi = (j + 0.5) * dt - irf.center_ps;
        const double mass = 0.5 * (std::erf(hi * inv) - std::erf(lo * inv));
        kernel[static_cast<std::size_t>(j + half)] = mass;
        sum += mass;
    }
    for (auto& k : kernel) k /= sum;

    DecayCurve out;
    out.grid = curve.grid;
    out.values.assign(curve.values.size(), 0.0);
    for (int k = 0; k < n; ++k) {
        const double v = curve.values[static_cast<std::size_t>(k)];
        if (v == 0.0) continue;
        for (int j = -half; j <= half; ++j) {
            const int idx = ((k + j) % n + n) % n;  // periodic in the repetition period
            out.values[static_cast<std::size_t>(idx)] +=
                v * kernel[static_cast<std::size_t>(j + half)];
        }
    }
    return out;
}

DecayCurve add_curves(const DecayCurve& a, const DecayCurve& b) {
    if (!(a.grid == b.grid)) throw UsageError("curves live on different time grids");
    DecayCurve out = a;
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += b.values[i];
    return out;
}

DecayCurve compose_signal(const DecayCurve& donor, const SignalComposition& comp,
                          const IrfSpec& irf) {
    comp.validate();
    DecayCurve out = irf_convolve(donor, irf);
    for (auto& v : out.values) v *= comp.donor_weight;
    if (comp.acceptor_weight > 0.0) {
        DecayCurve acceptor = irf_convolve(mono_exp_curve(comp.acceptor_lifetime_ns, donor.grid),
                                           irf);
        for (auto& v : acceptor.values) v *= comp.acceptor_weight;
        out = add_curves(out, acceptor);
    }
    for (auto& v : out.values) v += comp.background_rate;
    return out;
}

TcspcHistogram sample_histogram(const DecayCurve& model, double total_photons,
                                std::uint64_t seed) {
    if (!(total_photons > 0.0)) throw UsageError("total_photons must be > 0");
    const double sum = std::accumulate(model.values.begin(), model.values.end(), 0.0);
    if (!(sum > 0.0)) throw UsageError("model curve has no intensity to sample");

    const double scale = total_photons / sum;
    Rng rng(seed);
    TcspcHistogram h;
    h.grid = model.grid;
    h.counts.resize(model.values.size());
    for (std::size_t i = 0; i < model.values.size(); ++i)
        h.counts[i] = rng.poisson(model.values[i] * scale);
    return h;
}

std::vector<double> coverage_map(const FlimScene& scene) {
    scene.validate();
    const int w = scene.width_px, hgt = scene.height_px;
    std::vector<double> cov(static_cast<std::size_t>(w) * hgt, 0.0);

    if (!scene.flakes.empty()) {
        constexpr int kSub = 4;
        for (int r = 0; r < hgt; ++r) {
            for (int c = 0; c < w; ++c) {
                int hits = 0;
                for (int sr = 0; sr < kSub; ++sr) {
                    for (int sc = 0; sc < kSub; ++sc) {
                        const double x = (c + (sc + 0.5) / kSub) * scene.pixel_size_nm;
                        const double y = (r + (sr + 0.5) / kSub) * scene.pixel_size_nm;
                        for (const auto& poly : scene.flakes) {
                            if (point_in_polygon(x, y, poly)) {
                                ++hits;
                                break;
                            }
                        }
                    }
                }
                cov[static_cast<std::size_t>(r) * w + c] =
                    static_cast<double>(hits) / (kSub * kSub);
            }
        }
    }

    // Separable Gaussian blur of the mask with the scene PSF.
    const double sigma_px = scene.psf_fwhm_nm / (2.0 * std::sqrt(2.0 * std::log(2.0))) /
                            scene.pixel_size_nm;
    if (sigma_px > 1e-6) {
        const int half = std::max(1, static_cast<int>(std::ceil(5.0 * sigma_px)));
        std::vector<double> taps(static_cast<std::size_t>(2 * half + 1));
        double sum = 0.0;
        const double inv = 1.0 / (std::sqrt(2.0) * sigma_px);
        for (int j = -half; j <= half; ++j) {
            taps[static_cast<std::size_t>(j + half)] =
                0.5 * (std::erf((j + 0.5) * inv) - std::erf((j - 0.5) * inv));
            sum += taps[static_cast<std::size_t>(j + half)];
        }
        for (auto& t : taps) t /= sum;

        auto blur_axis = [&](bool rows) {
            std::vector<double> next(cov.size());
            for (int r = 0; r < hgt; ++r) {
                for (int c = 0; c < w; ++c) {
                    double acc = 0.0;
                    for (int j = -half; j <= half; ++j) {
                        // Clamped boundaries: coverage is constant outside the scene.
                        const int rr = rows ? std::clamp(r + j, 0, hgt - 1) : r;
                        const int cc = rows ? c : std::clamp(c + j, 0, w - 1);
                        acc += taps[static_cast<std::size_t>(j + half)] *
                               cov[static_cast<std::size_t>(rr) * w + cc];
                    }
                    next[static_cast<std::size_t>(r) * w + c] = acc;
                }
            }
            cov.swap(next);
        };
        blur_axis(false);
        blur_axis(true);
    }
    return cov;
}

FlimCube simulate_flim_cube(const FlimScene& scene, const ModelParams& p,
                            const DepthDistribution& d, const IrfSpec& irf, const TimeGrid& grid,
                            std::uint64_t seed, int threads) {
    scene.validate();
    grid.validate();

    const DecayCurve quenched = ensemble_decay(p, d, grid);
    ModelParams bulk = p;
    bulk.foerster_radius_nm = 0.0;
    const DecayCurve unquenched = ensemble_decay(bulk, d, grid);

    const DecayCurve on_model = compose_signal(quenched, scene.on_flake, irf);
    const DecayCurve off_model = compose_signal(unquenched, scene.off_flake, irf);

    const std::vector<double> cov = coverage_map(scene);

    FlimCube cube;
    cube.width_px = scene.width_px;
    cube.height_px = scene.height_px;
    cube.grid = grid;
    cube.pixel_size_nm = scene.pixel_size_nm;
    cube.seed = seed;
    cube.photons_per_pixel = scene.photons_per_pixel;
    cube.counts.assign(static_cast<std::size_t>(scene.width_px) * scene.height_px *
                           grid.n_bins,
                       0);

    const int n_bins = grid.n_bins;
    const int n_px = scene.width_px * scene.height_px;
    auto worker = [&](int begin, int end) {
        std::vector<double> mix(static_cast<std::size_t>(n_bins));
        for (int idx = begin; idx < end; ++idx) {
            const int row = idx / scene.width_px;
            const int col = idx % scene.width_px;
            const double c = cov[static_cast<std::size_t>(idx)];
            double mix_sum = 0.0;
            for (int b = 0; b < n_bins; ++b) {
                mix[static_cast<std::size_t>(b)] =
                    c * on_model.values[static_cast<std::size_t>(b)] +
                    (1.0 - c) * off_model.values[static_cast<std::size_t>(b)];
                mix_sum += mix[static_cast<std::size_t>(b)];
            }
            const double scale = scene.photons_per_pixel / mix_sum;
            Rng rng = Rng::for_pixel(seed, static_cast<std::uint32_t>(row),
                                     static_cast<std::uint32_t>(col));
            std::uint32_t* out =
                cube.counts.data() + static_cast<std::size_t>(idx) * n_bins;
            for (int b = 0; b < n_bins; ++b)
                out[b] = rng.poisson(mix[static_cast<std::size_t>(b)] * scale);
        }
    };

    const int n_threads = std::min(run_threads(threads), n_px);
    if (n_threads <= 1) {
        worker(0, n_px);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_threads));
        const int chunk = (n_px + n_threads - 1) / n_threads;
        for (int t = 0; t < n_threads; ++t)
            pool.emplace_back(worker, t * chunk, std::min(n_px, (t + 1) * chunk));
        for (auto& th : pool) th.join();
    }
    return cube;
}

}  // namespace fretflim
