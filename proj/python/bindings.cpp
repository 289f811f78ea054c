// Python bindings for the core simulation and analysis operations.
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fretflim/config.hpp"
#include "fretflim/errors.hpp"
#include "fretflim/fit.hpp"
#include "fretflim/flim.hpp"
#include "fretflim/inversion.hpp"
#include "fretflim/io.hpp"
#include "fretflim/model.hpp"
#include "fretflim/simulate.hpp"

namespace py = pybind11;
using namespace fretflim;

namespace {

py::array_t<double> curve_values(const DecayCurve& c) {
    return py::array_t<double>(static_cast<py::ssize_t>(c.values.size()), c.values.data());
}

py::array_t<double> curve_times(const DecayCurve& c) {
    std::vector<double> t(static_cast<std::size_t>(c.grid.n_bins));
    for (int k = 0; k < c.grid.n_bins; ++k) t[static_cast<std::size_t>(k)] = c.grid.rel_time_ns(k);
    return py::array_t<double>(static_cast<py::ssize_t>(t.size()), t.data());
}

}  // namespace

PYBIND11_MODULE(_fretflim, m) {
    m.doc() = "FRET quenching simulator and lifetime-imaging analysis toolkit";

    py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
    py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);

    py::class_<ModelParams>(m, "ModelParams")
        .def(py::init<>())
        .def_readwrite("foerster_radius_nm", &ModelParams::foerster_radius_nm)
        .def_readwrite("bulk_lifetime_ns", &ModelParams::bulk_lifetime_ns)
        .def_readwrite("distance_exponent", &ModelParams::distance_exponent)
        .def_readwrite("depth_mean_nm", &ModelParams::depth_mean_nm)
        .def_readwrite("depth_sigma_nm", &ModelParams::depth_sigma_nm)
        .def_readwrite("unquenched_intensity", &ModelParams::unquenched_intensity)
        .def("validate", &ModelParams::validate);

    py::class_<DepthDistribution>(m, "DepthDistribution")
        .def(py::init<>())
        .def_static("from_params", &DepthDistribution::from_params)
        .def_readwrite("mean_nm", &DepthDistribution::mean_nm)
        .def_readwrite("sigma_nm", &DepthDistribution::sigma_nm)
        .def_readwrite("z_min_nm", &DepthDistribution::z_min_nm)
        .def_readwrite("z_max_nm", &DepthDistribution::z_max_nm)
        .def("density", &DepthDistribution::density, py::arg("z_nm"));

    py::class_<TimeGrid>(m, "TimeGrid")
        .def(py::init<>())
        .def(py::init([](double bin_width_ps, int n_bins, double origin_ps) {
                 return TimeGrid{bin_width_ps, n_bins, origin_ps};
             }),
             py::arg("bin_width_ps") = 32.0, py::arg("n_bins") = 4096,
             py::arg("origin_ps") = 4096.0)
        .def_readwrite("bin_width_ps", &TimeGrid::bin_width_ps)
        .def_readwrite("n_bins", &TimeGrid::n_bins)
        .def_readwrite("origin_ps", &TimeGrid::origin_ps)
        .def("rel_time_ns", &TimeGrid::rel_time_ns);

    py::class_<IrfSpec>(m, "IrfSpec")
        .def(py::init<>())
        .def(py::init([](double fwhm_ps, double center_ps) {
                 return IrfSpec{fwhm_ps, center_ps};
             }),
             py::arg("fwhm_ps") = 326.0, py::arg("center_ps") = 0.0)
        .def_readwrite("fwhm_ps", &IrfSpec::fwhm_ps)
        .def_readwrite("center_ps", &IrfSpec::center_ps)
        .def("sigma_ns", &IrfSpec::sigma_ns);

    py::class_<DecayCurve>(m, "DecayCurve")
        .def_readonly("grid", &DecayCurve::grid)
        .def_property_readonly("values", &curve_values)
        .def_property_readonly("times_ns", &curve_times);

    py::class_<TcspcHistogram>(m, "TcspcHistogram")
        .def_readonly("grid", &TcspcHistogram::grid)
        .def_property_readonly("counts",
                               [](const TcspcHistogram& h) {
                                   return py::array_t<std::uint32_t>(
                                       static_cast<py::ssize_t>(h.counts.size()), h.counts.data());
                               })
        .def("total", &TcspcHistogram::total);

    py::class_<SignalComposition>(m, "SignalComposition")
        .def(py::init<>())
        .def(py::init([](double donor, double acceptor, double background, double tau_acc) {
                 return SignalComposition{donor, acceptor, background, tau_acc};
             }),
             py::arg("donor_weight") = 1.0, py::arg("acceptor_weight") = 0.0,
             py::arg("background_rate") = 0.0, py::arg("acceptor_lifetime_ns") = 0.41)
        .def_readwrite("donor_weight", &SignalComposition::donor_weight)
        .def_readwrite("acceptor_weight", &SignalComposition::acceptor_weight)
        .def_readwrite("background_rate", &SignalComposition::background_rate)
        .def_readwrite("acceptor_lifetime_ns", &SignalComposition::acceptor_lifetime_ns);

    py::class_<FlimScene>(m, "FlimScene")
        .def(py::init<>())
        .def_readwrite("width_px", &FlimScene::width_px)
        .def_readwrite("height_px", &FlimScene::height_px)
        .def_readwrite("pixel_size_nm", &FlimScene::pixel_size_nm)
        .def_readwrite("flakes", &FlimScene::flakes)
        .def_readwrite("on_flake", &FlimScene::on_flake)
        .def_readwrite("off_flake", &FlimScene::off_flake)
        .def_readwrite("psf_fwhm_nm", &FlimScene::psf_fwhm_nm)
        .def_readwrite("photons_per_pixel", &FlimScene::photons_per_pixel);

    py::class_<ExpComponent>(m, "ExpComponent")
        .def(py::init<>())
        .def(py::init([](double amplitude, double lifetime_ns) {
                 return ExpComponent{amplitude, lifetime_ns};
             }),
             py::arg("amplitude") = 0.0, py::arg("lifetime_ns") = 0.0)
        .def_readwrite("amplitude", &ExpComponent::amplitude)
        .def_readwrite("lifetime_ns", &ExpComponent::lifetime_ns);

    py::enum_<FitObjective>(m, "FitObjective")
        .value("WeightedLeastSquares", FitObjective::WeightedLeastSquares)
        .value("PoissonMle", FitObjective::PoissonMle);

    py::class_<FitModelSpec>(m, "FitModelSpec")
        .def(py::init<>())
        .def_readwrite("components", &FitModelSpec::components)
        .def_readwrite("irf", &FitModelSpec::irf)
        .def_readwrite("use_irf", &FitModelSpec::use_irf)
        .def_readwrite("background", &FitModelSpec::background)
        .def_readwrite("t0_ns", &FitModelSpec::t0_ns)
        .def_readwrite("fit_background", &FitModelSpec::fit_background)
        .def_readwrite("freeze_t0", &FitModelSpec::freeze_t0)
        .def_readwrite("objective", &FitModelSpec::objective)
        .def_readwrite("max_iterations", &FitModelSpec::max_iterations);

    py::class_<FittedComponent>(m, "FittedComponent")
        .def_readonly("amplitude", &FittedComponent::amplitude)
        .def_readonly("amplitude_sigma", &FittedComponent::amplitude_sigma)
        .def_readonly("lifetime_ns", &FittedComponent::lifetime_ns)
        .def_readonly("lifetime_sigma_ns", &FittedComponent::lifetime_sigma_ns);

    py::class_<FitResult>(m, "FitResult")
        .def_readonly("components", &FitResult::components)
        .def_readonly("background", &FitResult::background)
        .def_readonly("background_sigma", &FitResult::background_sigma)
        .def_readonly("t0_ns", &FitResult::t0_ns)
        .def_readonly("goodness", &FitResult::goodness)
        .def_readonly("objective", &FitResult::objective)
        .def_readonly("iterations", &FitResult::iterations)
        .def_readonly("converged", &FitResult::converged);

    py::class_<GateSpec>(m, "GateSpec")
        .def(py::init<>())
        .def(py::init([](double head_cut_ns, double tail_fraction) {
                 return GateSpec{head_cut_ns, tail_fraction};
             }),
             py::arg("head_cut_ns") = 3.0, py::arg("tail_threshold_fraction") = 0.01)
        .def_readwrite("head_cut_ns", &GateSpec::head_cut_ns)
        .def_readwrite("tail_threshold_fraction", &GateSpec::tail_threshold_fraction);

    py::class_<LifetimeEstimate>(m, "LifetimeEstimate")
        .def_readonly("tau_ns", &LifetimeEstimate::tau_ns)
        .def_readonly("sigma_ns", &LifetimeEstimate::sigma_ns)
        .def_readonly("detail", &LifetimeEstimate::detail);

    py::class_<RadiusCurvePoint>(m, "RadiusCurvePoint")
        .def_readonly("r_nm", &RadiusCurvePoint::r_nm)
        .def_readonly("tau_eff_ns", &RadiusCurvePoint::tau_eff_ns);

    py::class_<TauEffCurveParams>(m, "TauEffCurveParams")
        .def(py::init<>())
        .def_readwrite("model", &TauEffCurveParams::model)
        .def_readwrite("depth", &TauEffCurveParams::depth)
        .def_readwrite("grid", &TauEffCurveParams::grid)
        .def_readwrite("gate", &TauEffCurveParams::gate);

    py::class_<RadiusCurve>(m, "RadiusCurve")
        .def(py::init<>())
        .def_readwrite("points", &RadiusCurve::points)
        .def_readonly("generation", &RadiusCurve::generation)
        .def("validate", &RadiusCurve::validate);

    py::class_<RadiusEstimate>(m, "RadiusEstimate")
        .def_readonly("r_nm", &RadiusEstimate::r_nm)
        .def_readonly("sigma_nm", &RadiusEstimate::sigma_nm);

    py::enum_<PixelClass>(m, "PixelClass")
        .value("OnFlake", PixelClass::OnFlake)
        .value("OffFlake", PixelClass::OffFlake)
        .value("LowSignal", PixelClass::LowSignal);

    py::class_<PixelFit>(m, "PixelFit")
        .def_readonly("cls", &PixelFit::cls)
        .def_readonly("tau_slow_ns", &PixelFit::tau_slow_ns)
        .def_readonly("tau_slow_sigma_ns", &PixelFit::tau_slow_sigma_ns)
        .def_readonly("tau_fast_ns", &PixelFit::tau_fast_ns)
        .def_readonly("tau_fast_sigma_ns", &PixelFit::tau_fast_sigma_ns)
        .def_readonly("amp_slow", &PixelFit::amp_slow)
        .def_readonly("amp_fast", &PixelFit::amp_fast)
        .def_readonly("total_counts", &PixelFit::total_counts)
        .def_readonly("goodness", &PixelFit::goodness);

    py::class_<FlimCube>(m, "FlimCube")
        .def_readonly("width_px", &FlimCube::width_px)
        .def_readonly("height_px", &FlimCube::height_px)
        .def_readonly("grid", &FlimCube::grid)
        .def_readonly("pixel_size_nm", &FlimCube::pixel_size_nm)
        .def_property_readonly("counts", [](const FlimCube& c) {
            return py::array_t<std::uint32_t>(
                {c.height_px, c.width_px, c.grid.n_bins},
                {static_cast<py::ssize_t>(sizeof(std::uint32_t)) * c.width_px * c.grid.n_bins,
                 static_cast<py::ssize_t>(sizeof(std::uint32_t)) * c.grid.n_bins,
                 static_cast<py::ssize_t>(sizeof(std::uint32_t))},
                c.counts.data());
        });

    py::class_<LifetimeMap>(m, "LifetimeMap")
        .def_readonly("width_px", &LifetimeMap::width_px)
        .def_readonly("height_px", &LifetimeMap::height_px)
        .def_readonly("pixel_size_nm", &LifetimeMap::pixel_size_nm)
        .def_readonly("pixels", &LifetimeMap::pixels)
        .def("at", &LifetimeMap::at, py::return_value_policy::reference_internal);

    py::class_<EdgeProfileResult>(m, "EdgeProfileResult")
        .def_readonly("edge_position_nm", &EdgeProfileResult::edge_position_nm)
        .def_readonly("edge_position_sigma_nm", &EdgeProfileResult::edge_position_sigma_nm)
        .def_readonly("psf_fwhm_nm", &EdgeProfileResult::psf_fwhm_nm)
        .def_readonly("psf_fwhm_sigma_nm", &EdgeProfileResult::psf_fwhm_sigma_nm)
        .def_readonly("tau_bulk_side_ns", &EdgeProfileResult::tau_bulk_side_ns)
        .def_readonly("tau_quenched_side_ns", &EdgeProfileResult::tau_quenched_side_ns)
        .def_readonly("residual_norm", &EdgeProfileResult::residual_norm);

    // fret-core
    m.def("nonradiative_rate", &nonradiative_rate, py::arg("z_nm"), py::arg("params"));
    m.def("quenched_lifetime", &quenched_lifetime, py::arg("z_nm"), py::arg("params"));
    m.def("fret_efficiency", &fret_efficiency, py::arg("z_nm"), py::arg("params"));
    m.def("quenched_intensity", &quenched_intensity, py::arg("z_nm"), py::arg("params"));

    // decay simulation
    m.def("ensemble_decay", &ensemble_decay, py::arg("params"), py::arg("depth"), py::arg("grid"));
    m.def("mono_exp_curve", &mono_exp_curve, py::arg("lifetime_ns"), py::arg("grid"));
    m.def("irf_convolve", &irf_convolve, py::arg("curve"), py::arg("irf"));
    m.def("compose_signal", &compose_signal, py::arg("donor"), py::arg("composition"),
          py::arg("irf"));
    m.def("sample_histogram", &sample_histogram, py::arg("model"), py::arg("total_photons"),
          py::arg("seed"));
    m.def("simulate_flim_cube", &simulate_flim_cube, py::arg("scene"), py::arg("params"),
          py::arg("depth"), py::arg("irf"), py::arg("grid"), py::arg("seed"),
          py::arg("threads") = 0);
    m.def("coverage_map", &coverage_map, py::arg("scene"));

    // fitting
    m.def("exp_gauss_model", &exp_gauss_model, py::arg("t_ns"), py::arg("component"),
          py::arg("irf"), py::arg("t0_ns"));
    m.def("fit_decay", &fit_decay, py::arg("histogram"), py::arg("spec"));
    m.def("gate_histogram", &gate_histogram, py::arg("histogram"), py::arg("gate"));
    m.def("effective_lifetime",
          py::overload_cast<const TcspcHistogram&, const GateSpec&, const IrfSpec&, bool>(
              &effective_lifetime),
          py::arg("histogram"), py::arg("gate"), py::arg("irf"), py::arg("use_irf") = false);
    m.def("effective_lifetime_curve",
          py::overload_cast<const DecayCurve&, const GateSpec&, const IrfSpec&, bool>(
              &effective_lifetime),
          py::arg("curve"), py::arg("gate"), py::arg("irf"), py::arg("use_irf") = false);

    // inversion
    m.def("tau_eff_curve", &tau_eff_curve, py::arg("r_min_nm"), py::arg("r_max_nm"),
          py::arg("n_points"), py::arg("params"), py::arg("threads") = 0);
    m.def("invert_radius", &invert_radius, py::arg("tau_eff_ns"), py::arg("sigma_ns"),
          py::arg("curve"));

    // lifetime imaging
    m.def("fit_flim_cube", &fit_flim_cube, py::arg("cube"), py::arg("gate"), py::arg("irf"),
          py::arg("min_counts"), py::arg("threads") = 0);
    m.def("edge_profile", &edge_profile, py::arg("map"), py::arg("start_row"),
          py::arg("start_col"), py::arg("end_row"), py::arg("end_col"),
          py::arg("halfwidth_px") = 1);
    m.def("photon_budget_s", &photon_budget_s, py::arg("count_rate_cps"), py::arg("min_photons"));
    m.def(
        "empirical_min_photons",
        [](double tau_true_ns, double target_rel_error, std::uint64_t seed, int trials) {
            MinPhotonsSetup setup;
            setup.tau_true_ns = tau_true_ns;
            setup.trials = trials;
            return empirical_min_photons(setup, target_rel_error, seed);
        },
        py::arg("tau_true_ns"), py::arg("target_rel_error"), py::arg("seed") = 1,
        py::arg("trials") = 200);

    // file I/O
    m.def("write_histogram_csv", &write_histogram_csv);
    m.def("read_histogram_csv", &read_histogram_csv);
    m.def("write_radius_curve_csv", &write_radius_curve_csv);
    m.def("read_radius_curve_csv", &read_radius_curve_csv);
    m.def("write_lifetime_map_csv", &write_lifetime_map_csv);
    m.def("read_lifetime_map_csv", &read_lifetime_map_csv);
    m.def("write_flim_cube", &write_flim_cube);
    m.def("read_flim_cube", &read_flim_cube);
}
