// Command line front end: decay simulation, fitting, radius inversion,
// lifetime-image simulation and analysis, edge profiling and photon budgets.
//
// Exit codes: 0 success, 2 usage/config error, 3 data format error,
// 4 numerical/convergence error.
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fretflim/config.hpp"
#include "fretflim/errors.hpp"
#include "fretflim/fit.hpp"
#include "fretflim/flim.hpp"
#include "fretflim/inversion.hpp"
#include "fretflim/io.hpp"
#include "fretflim/model.hpp"
#include "fretflim/simulate.hpp"
#include "../src/svg.hpp"

namespace {

using namespace fretflim;

RunConfig load_config(const std::string& path) {
    return path.empty() ? RunConfig::defaults() : RunConfig::load(path);
}

std::string fmt(double v, const char* spec = "%.6g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

void plot_histogram(const std::string& path, const TcspcHistogram& h, const char* title) {
    svg::Series s;
    s.label = "counts";
    for (std::size_t k = 0; k < h.counts.size(); ++k) {
        s.x.push_back(static_cast<double>(k) * h.grid.bin_width_ps * 1e-3);
        s.y.push_back(static_cast<double>(h.counts[k]));
    }
    svg::plot_xy(path, title, "time (ns)", "counts", {s}, true);
}

int cmd_simulate_decay(const std::string& config_path, std::string out_path,
                       std::optional<double> photons, std::optional<std::uint64_t> seed,
                       const std::string& plot_path, bool dump) {
    RunConfig cfg = load_config(config_path);
    if (photons) cfg.total_photons = *photons;
    if (seed) cfg.seed = *seed;
    if (dump) {
        std::cout << cfg.dump();
        return 0;
    }
    const DecayCurve donor = ensemble_decay(cfg.model, cfg.depth_window(), cfg.grid);
    const DecayCurve model = compose_signal(donor, cfg.signal, cfg.irf);
    const TcspcHistogram h = sample_histogram(model, cfg.total_photons, cfg.seed);
    write_histogram_csv(out_path, h);
    std::cout << "wrote " << out_path << " (" << h.total() << " photons in " << h.grid.n_bins
              << " bins)\n";
    if (!plot_path.empty()) {
        plot_histogram(plot_path, h, "Simulated PL decay");
        std::cout << "wrote " << plot_path << '\n';
    }
    return 0;
}

void print_fit(const FitResult& fit) {
    for (std::size_t i = 0; i < fit.components.size(); ++i) {
        const auto& c = fit.components[i];
        std::cout << "component " << i + 1 << ": tau = " << fmt(c.lifetime_ns) << " ns +- "
                  << fmt(c.lifetime_sigma_ns) << " ns, amplitude = " << fmt(c.amplitude) << " +- "
                  << fmt(c.amplitude_sigma) << '\n';
    }
    std::cout << "background = " << fmt(fit.background) << " +- " << fmt(fit.background_sigma)
              << " counts/bin\n";
    std::cout << "t0 = " << fmt(fit.t0_ns) << " ns\n";
    std::cout << (fit.objective == FitObjective::PoissonMle ? "deviance = " : "reduced chi2 = ")
              << fmt(fit.goodness) << " (" << fit.n_points << " bins)\n";
    std::cout << (fit.converged ? "converged" : "NOT converged") << " after " << fit.iterations
              << " iterations\n";
}

int cmd_fit_decay(const std::string& in_path, int components, const std::string& objective,
                  double irf_fwhm_ps, double irf_center_ps, bool no_irf, bool gate_first,
                  double head_cut_ns, double tail_fraction, const std::string& report_path,
                  const std::string& plot_path) {
    if (components < 1 || components > 2)
        throw UsageError("--components must be 1 or 2 (multi-component fits beyond 2 are not supported)");

    TcspcHistogram h = read_histogram_csv(in_path);
    GateSpec gate{head_cut_ns, tail_fraction};
    if (gate_first) h = gate_histogram(h, gate);

    FitModelSpec spec;
    spec.components.assign(static_cast<std::size_t>(components), ExpComponent{});
    spec.irf = IrfSpec{irf_fwhm_ps, irf_center_ps};
    spec.use_irf = !no_irf;
    if (no_irf) {
        spec.freeze_t0 = true;
        spec.t0_ns = h.grid.rel_time_ns(0);
        spec.fit_background = false;
    }
    if (objective == "wls") spec.objective = FitObjective::WeightedLeastSquares;
    else if (objective == "mle") spec.objective = FitObjective::PoissonMle;
    else throw UsageError("--objective must be 'mle' or 'wls'");

    const FitResult fit = fit_decay(h, spec);
    print_fit(fit);

    if (!report_path.empty()) {
        std::ofstream out(report_path, std::ios::binary);
        if (!out) throw FormatError("cannot open '" + report_path + "' for writing");
        out << "field,value,sigma\n";
        for (std::size_t i = 0; i < fit.components.size(); ++i) {
            out << "lifetime_ns_" << i + 1 << ',' << fmt(fit.components[i].lifetime_ns) << ','
                << fmt(fit.components[i].lifetime_sigma_ns) << '\n';
            out << "amplitude_" << i + 1 << ',' << fmt(fit.components[i].amplitude) << ','
                << fmt(fit.components[i].amplitude_sigma) << '\n';
        }
        out << "background," << fmt(fit.background) << ',' << fmt(fit.background_sigma) << '\n';
        out << "t0_ns," << fmt(fit.t0_ns) << ',' << fmt(fit.t0_sigma_ns) << '\n';
        out << "goodness," << fmt(fit.goodness) << ",\n";
        out << "converged," << (fit.converged ? 1 : 0) << ",\n";
        out << "iterations," << fit.iterations << ",\n";
        std::cout << "wrote " << report_path << '\n';
    }
    if (!plot_path.empty()) {
        svg::Series data, model;
        data.label = "data";
        data.points_only = true;
        model.label = "fit";
        model.color = "#d62728";
        for (int k = 0; k < h.grid.n_bins; ++k) {
            const double t = static_cast<double>(k) * h.grid.bin_width_ps * 1e-3;
            data.x.push_back(t);
            data.y.push_back(static_cast<double>(h.counts[static_cast<std::size_t>(k)]));
            double m = fit.background;
            for (const auto& c : fit.components) {
                const ExpComponent ec{c.amplitude, c.lifetime_ns};
                if (spec.use_irf) m += exp_gauss_model(h.grid.rel_time_ns(k), ec, spec.irf, fit.t0_ns);
                else if (h.grid.rel_time_ns(k) >= fit.t0_ns)
                    m += c.amplitude * std::exp(-(h.grid.rel_time_ns(k) - fit.t0_ns) / c.lifetime_ns);
            }
            model.x.push_back(t);
            model.y.push_back(m);
        }
        svg::plot_xy(plot_path, "Decay fit", "time (ns)", "counts", {data, model}, true);
        std::cout << "wrote " << plot_path << '\n';
    }
    return 0;
}

int cmd_invert_radius(double tau_eff, double sigma, const std::string& curve_path,
                      const std::string& config_path, double r_min, double r_max, int n_points,
                      int threads, const std::string& save_curve, const std::string& plot_path) {
    RadiusCurve curve;
    if (!curve_path.empty()) {
        curve = read_radius_curve_csv(curve_path);
    } else {
        const RunConfig cfg = load_config(config_path);
        TauEffCurveParams params{cfg.model, cfg.depth_window(), cfg.grid, cfg.gate};
        curve = tau_eff_curve(r_min, r_max, n_points, params, threads);
    }
    if (!save_curve.empty()) {
        write_radius_curve_csv(save_curve, curve);
        std::cout << "wrote " << save_curve << '\n';
    }
    const RadiusEstimate est = invert_radius(tau_eff, sigma, curve);
    std::cout << "R = " << fmt(est.r_nm, "%.4g") << " nm +- " << fmt(est.sigma_nm, "%.3g")
              << " nm\n";
    if (!plot_path.empty()) {
        svg::Series s, marker;
        s.label = "tau_eff(R)";
        for (const auto& p : curve.points) {
            s.x.push_back(p.r_nm);
            s.y.push_back(p.tau_eff_ns);
        }
        marker.label = "estimate";
        marker.color = "#d62728";
        marker.points_only = true;
        marker.x.push_back(est.r_nm);
        marker.y.push_back(tau_eff);
        svg::plot_xy(plot_path, "Effective lifetime vs Foerster radius", "R (nm)",
                     "tau_eff (ns)", {s, marker}, false);
        std::cout << "wrote " << plot_path << '\n';
    }
    return 0;
}

int cmd_simulate_flim(const std::string& config_path, const std::string& out_base,
                      std::optional<std::uint64_t> seed, int threads, bool dump) {
    RunConfig cfg = load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (dump) {
        std::cout << cfg.dump();
        return 0;
    }
    const FlimCube cube = simulate_flim_cube(cfg.scene, cfg.model, cfg.depth_window(), cfg.irf,
                                             cfg.grid, cfg.seed, threads);
    write_flim_cube(out_base, cube);
    std::cout << "wrote " << out_base << ".meta and " << out_base << ".raw (" << cube.width_px
              << "x" << cube.height_px << " px, " << cube.grid.n_bins << " bins)\n";
    return 0;
}

int cmd_fit_flim(const std::string& in_path, const std::string& out_path, long min_counts,
                 double irf_fwhm_ps, double irf_center_ps, double head_cut_ns,
                 double tail_fraction, int threads, const std::string& plot_path) {
    const FlimCube cube = read_flim_cube(in_path);
    const GateSpec gate{head_cut_ns, tail_fraction};
    const IrfSpec irf{irf_fwhm_ps, irf_center_ps};
    const LifetimeMap map = fit_flim_cube(cube, gate, irf, min_counts, threads);
    write_lifetime_map_csv(out_path, map);

    int on = 0, off = 0, low = 0;
    for (const auto& px : map.pixels) {
        if (px.cls == PixelClass::OnFlake) ++on;
        else if (px.cls == PixelClass::OffFlake) ++off;
        else ++low;
    }
    std::cout << "wrote " << out_path << " (" << on << " on-flake, " << off << " off-flake, "
              << low << " low-signal)\n";

    if (!plot_path.empty()) {
        std::vector<double> tau(map.pixels.size());
        for (std::size_t i = 0; i < map.pixels.size(); ++i) tau[i] = map.pixels[i].tau_slow_ns;
        svg::plot_map(plot_path, "Donor lifetime map", map.width_px, map.height_px, tau, "ns");
        std::cout << "wrote " << plot_path << '\n';
    }
    return 0;
}

int cmd_edge(const std::string& map_path, double start_row, double start_col, double end_row,
             double end_col, int halfwidth, std::optional<double> pixel_size,
             const std::string& plot_path) {
    LifetimeMap map = read_lifetime_map_csv(map_path);
    if (pixel_size) map.pixel_size_nm = *pixel_size;
    const EdgeProfileResult edge =
        edge_profile(map, start_row, start_col, end_row, end_col, halfwidth);
    std::cout << "edge position = " << fmt(edge.edge_position_nm, "%.5g") << " nm +- "
              << fmt(edge.edge_position_sigma_nm, "%.3g") << " nm\n";
    std::cout << "psf fwhm = " << fmt(edge.psf_fwhm_nm, "%.5g") << " nm +- "
              << fmt(edge.psf_fwhm_sigma_nm, "%.3g") << " nm\n";
    std::cout << "plateaus: " << fmt(edge.tau_bulk_side_ns, "%.4g") << " ns (bulk side), "
              << fmt(edge.tau_quenched_side_ns, "%.4g") << " ns (flake side)\n";
    if (!plot_path.empty()) {
        // Re-sample the profile for display.
        const double len = std::hypot(end_row - start_row, end_col - start_col);
        svg::Series data, fit;
        data.label = "tau_slow";
        data.points_only = true;
        fit.label = "erf fit";
        fit.color = "#d62728";
        const double ur = (end_row - start_row) / len, uc = (end_col - start_col) / len;
        for (int i = 0; i <= static_cast<int>(len); ++i) {
            const int r = static_cast<int>(std::lround(start_row + ur * i));
            const int c = static_cast<int>(std::lround(start_col + uc * i));
            if (r < 0 || r >= map.height_px || c < 0 || c >= map.width_px) continue;
            const auto& px = map.at(r, c);
            if (px.cls == PixelClass::LowSignal) continue;
            data.x.push_back(i * map.pixel_size_nm);
            data.y.push_back(px.tau_slow_ns);
        }
        const double lo = std::min(edge.tau_bulk_side_ns, edge.tau_quenched_side_ns);
        const double hi = std::max(edge.tau_bulk_side_ns, edge.tau_quenched_side_ns);
        const bool rising = !data.y.empty() && data.y.front() < data.y.back();
        const double sg = edge.psf_fwhm_nm / (2.0 * std::sqrt(2.0 * std::log(2.0)));
        for (int i = 0; i <= 200; ++i) {
            const double s = data.x.empty() ? 0.0 : data.x.front() +
                             (data.x.back() - data.x.front()) * i / 200.0;
            const double u = (s - edge.edge_position_nm) / sg;
            const double cdf = 0.5 * std::erfc(-u / std::sqrt(2.0));
            fit.x.push_back(s);
            fit.y.push_back(rising ? lo + (hi - lo) * cdf : hi - (hi - lo) * cdf);
        }
        svg::plot_xy(plot_path, "Lifetime edge profile", "position (nm)", "tau_slow (ns)",
                     {data, fit}, false);
        std::cout << "wrote " << plot_path << '\n';
    }
    return 0;
}

int cmd_budget(double count_rate, double min_photons) {
    const double dwell_s = photon_budget_s(count_rate, min_photons);
    std::cout << "dwell time = " << fmt(dwell_s * 1e3, "%.2f") << " ms (" << fmt(dwell_s, "%.6g")
              << " s)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"FRET quenching simulator and lifetime-imaging analysis toolkit"};
    app.require_subcommand(1);

    // simulate-decay
    std::string sd_config, sd_out, sd_plot;
    std::optional<double> sd_photons;
    std::optional<std::uint64_t> sd_seed;
    bool sd_dump = false;
    auto* sd = app.add_subcommand("simulate-decay", "Simulate an ensemble TCSPC histogram");
    sd->add_option("--config", sd_config, "Config file (defaults used when omitted)");
    sd->add_option("--out", sd_out, "Output histogram CSV");
    sd->add_option("--photons", sd_photons, "Total expected photons");
    sd->add_option("--seed", sd_seed, "Random seed");
    sd->add_option("--plot", sd_plot, "Optional SVG decay plot");
    sd->add_flag("--dump-config", sd_dump, "Print the effective config and exit");

    // fit-decay
    std::string fd_in, fd_objective = "mle", fd_report, fd_plot;
    int fd_components = 2;
    double fd_irf_fwhm = 326.0, fd_irf_center = 0.0, fd_head = 3.0, fd_tail = 0.01;
    bool fd_no_irf = false, fd_gate = false;
    auto* fd = app.add_subcommand("fit-decay", "Fit exponential components to a histogram");
    fd->add_option("--in", fd_in, "Input histogram CSV")->required();
    fd->add_option("--components", fd_components, "Number of components (1 or 2)");
    fd->add_option("--objective", fd_objective, "Objective: mle or wls");
    fd->add_option("--irf-fwhm-ps", fd_irf_fwhm, "Gaussian IRF FWHM in ps");
    fd->add_option("--irf-center-ps", fd_irf_center, "IRF center shift in ps");
    fd->add_flag("--no-irf", fd_no_irf, "Fit plain exponentials without the IRF");
    fd->add_flag("--gate", fd_gate, "Apply the head-cut/tail gate before fitting");
    fd->add_option("--head-cut-ns", fd_head, "Gate head cut after the peak");
    fd->add_option("--tail-fraction", fd_tail, "Gate tail threshold fraction");
    fd->add_option("--report", fd_report, "Fit report CSV");
    fd->add_option("--plot", fd_plot, "Optional SVG fit plot");

    // invert-radius
    double ir_tau = 0.0, ir_sigma = 0.0, ir_rmin = 5.0, ir_rmax = 30.0;
    int ir_points = 26, ir_threads = 0;
    std::string ir_curve, ir_config, ir_save, ir_plot;
    auto* ir = app.add_subcommand("invert-radius", "Invert tau_eff to a Foerster radius");
    ir->add_option("--tau-eff", ir_tau, "Measured effective lifetime in ns")->required();
    ir->add_option("--sigma", ir_sigma, "1-sigma uncertainty of tau_eff in ns");
    ir->add_option("--curve", ir_curve, "Calibration curve CSV (skips generation)");
    ir->add_option("--config", ir_config, "Config for curve generation");
    ir->add_option("--r-min", ir_rmin, "Curve grid minimum radius in nm");
    ir->add_option("--r-max", ir_rmax, "Curve grid maximum radius in nm");
    ir->add_option("--points", ir_points, "Curve grid size");
    ir->add_option("--threads", ir_threads, "Worker cap (0 = all cores)");
    ir->add_option("--save-curve", ir_save, "Write the generated curve CSV");
    ir->add_option("--plot", ir_plot, "Optional SVG curve plot");

    // simulate-flim
    std::string sf_config, sf_out;
    std::optional<std::uint64_t> sf_seed;
    int sf_threads = 0;
    bool sf_dump = false;
    auto* sf = app.add_subcommand("simulate-flim", "Simulate a lifetime-imaging cube");
    sf->add_option("--config", sf_config, "Config file (defaults used when omitted)");
    sf->add_option("--out", sf_out, "Output cube base path");
    sf->add_option("--seed", sf_seed, "Random seed");
    sf->add_option("--threads", sf_threads, "Worker cap (0 = all cores)");
    sf->add_flag("--dump-config", sf_dump, "Print the effective config and exit");

    // fit-flim
    std::string ff_in, ff_out, ff_plot;
    long ff_min_counts = 500;
    double ff_irf_fwhm = 326.0, ff_irf_center = 0.0, ff_head = 3.0, ff_tail = 0.01;
    int ff_threads = 0;
    auto* ff = app.add_subcommand("fit-flim", "Fit a cube into a lifetime map");
    ff->add_option("--in", ff_in, "Input cube base path or .meta path")->required();
    ff->add_option("--out", ff_out, "Output lifetime map CSV")->required();
    ff->add_option("--min-counts", ff_min_counts, "Low-signal threshold (photons per pixel)");
    ff->add_option("--irf-fwhm-ps", ff_irf_fwhm, "Gaussian IRF FWHM in ps");
    ff->add_option("--irf-center-ps", ff_irf_center, "IRF center shift in ps");
    ff->add_option("--head-cut-ns", ff_head, "Gate head cut for mono refits");
    ff->add_option("--tail-fraction", ff_tail, "Gate tail threshold fraction");
    ff->add_option("--threads", ff_threads, "Worker cap (0 = all cores)");
    ff->add_option("--plot", ff_plot, "Optional SVG lifetime map");

    // edge
    std::string ed_map, ed_plot;
    double ed_r0 = 0, ed_c0 = 0, ed_r1 = 0, ed_c1 = 0;
    int ed_halfwidth = 1;
    std::optional<double> ed_pixel;
    auto* ed = app.add_subcommand("edge", "Fit a blurred step to a lifetime line profile");
    ed->add_option("--map", ed_map, "Lifetime map CSV")->required();
    ed->add_option("--start-row", ed_r0, "Line start row (px)")->required();
    ed->add_option("--start-col", ed_c0, "Line start column (px)")->required();
    ed->add_option("--end-row", ed_r1, "Line end row (px)")->required();
    ed->add_option("--end-col", ed_c1, "Line end column (px)")->required();
    ed->add_option("--halfwidth", ed_halfwidth, "Transverse averaging halfwidth (px)");
    ed->add_option("--pixel-size", ed_pixel, "Pixel size override (nm)");
    ed->add_option("--plot", ed_plot, "Optional SVG profile plot");

    // budget
    double bu_rate = 0.0, bu_photons = 1000.0;
    auto* bu = app.add_subcommand("budget", "Dwell time for a photon budget");
    bu->add_option("--count-rate", bu_rate, "Detected count rate (counts/s)")->required();
    bu->add_option("--min-photons", bu_photons, "Required photons per pixel");

    try {
        app.parse(argc, argv);
        if (sd->parsed()) {
            if (!sd_dump && sd_out.empty()) throw UsageError("simulate-decay requires --out");
            return cmd_simulate_decay(sd_config, sd_out, sd_photons, sd_seed, sd_plot, sd_dump);
        }
        if (fd->parsed())
            return cmd_fit_decay(fd_in, fd_components, fd_objective, fd_irf_fwhm, fd_irf_center,
                                 fd_no_irf, fd_gate, fd_head, fd_tail, fd_report, fd_plot);
        if (ir->parsed())
            return cmd_invert_radius(ir_tau, ir_sigma, ir_curve, ir_config, ir_rmin, ir_rmax,
                                     ir_points, ir_threads, ir_save, ir_plot);
        if (sf->parsed()) {
            if (!sf_dump && sf_out.empty()) throw UsageError("simulate-flim requires --out");
            return cmd_simulate_flim(sf_config, sf_out, sf_seed, sf_threads, sf_dump);
        }
        if (ff->parsed())
            return cmd_fit_flim(ff_in, ff_out, ff_min_counts, ff_irf_fwhm, ff_irf_center, ff_head,
                                ff_tail, ff_threads, ff_plot);
        if (ed->parsed())
            return cmd_edge(ed_map, ed_r0, ed_c0, ed_r1, ed_c1, ed_halfwidth, ed_pixel, ed_plot);
        if (bu->parsed()) return cmd_budget(bu_rate, bu_photons);
        return 2;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
