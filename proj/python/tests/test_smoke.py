"""Smoke tests for the _fretflim python module."""

import math

import numpy as np
import pytest

import _fretflim as ff


def reference_params():
    p = ff.ModelParams()
    p.foerster_radius_nm = 13.0
    p.bulk_lifetime_ns = 12.0
    p.distance_exponent = 4
    p.depth_mean_nm = 6.5
    p.depth_sigma_nm = 2.7
    return p


def test_efficiency_is_half_at_the_radius():
    p = reference_params()
    assert ff.fret_efficiency(13.0, p) == 0.5
    assert ff.quenched_lifetime(13.0, p) == pytest.approx(6.0)


def test_hand_values_at_mean_depth():
    p = reference_params()
    assert ff.nonradiative_rate(6.5, p) == pytest.approx(16.0 / 12.0)
    assert ff.quenched_intensity(6.5, p) == pytest.approx(1.0 / 17.0)


def test_invalid_depth_raises_value_error():
    with pytest.raises(ValueError):
        ff.quenched_lifetime(-1.0, reference_params())


def test_bulk_decay_is_a_plain_exponential():
    p = reference_params()
    p.foerster_radius_nm = 0.0
    d = ff.DepthDistribution.from_params(p)
    grid = ff.TimeGrid(32.0, 1024, 1024.0)
    curve = ff.ensemble_decay(p, d, grid)
    t = curve.times_ns
    v = curve.values
    mask = t >= 0
    assert np.allclose(v[mask], np.exp(-t[mask] / 12.0), rtol=1e-10)


def test_sampling_is_seed_reproducible():
    grid = ff.TimeGrid(32.0, 1024, 1024.0)
    model = ff.mono_exp_curve(5.0, grid)
    a = ff.sample_histogram(model, 20000, 7)
    b = ff.sample_histogram(model, 20000, 7)
    assert np.array_equal(a.counts, b.counts)
    assert abs(int(a.total()) - 20000) < 5 * math.sqrt(20000)


def test_fit_round_trip():
    grid = ff.TimeGrid(32.0, 4096, 4096.0)
    model = ff.irf_convolve(ff.mono_exp_curve(12.0, grid), ff.IrfSpec(326.0, 0.0))
    hist = ff.sample_histogram(model, 100000, 3)
    spec = ff.FitModelSpec()
    spec.components = [ff.ExpComponent()]
    fit = ff.fit_decay(hist, spec)
    assert fit.converged
    assert fit.components[0].lifetime_ns == pytest.approx(12.0, rel=0.02)


def test_effective_lifetime_and_inversion():
    params = ff.TauEffCurveParams()
    params.model = reference_params()
    params.depth = ff.DepthDistribution.from_params(params.model)
    params.grid = ff.TimeGrid()
    params.gate = ff.GateSpec()
    curve = ff.tau_eff_curve(5.0, 30.0, 11, params)
    taus = [pt.tau_eff_ns for pt in curve.points]
    assert all(a > b for a, b in zip(taus, taus[1:]))
    est = ff.invert_radius(taus[4], 0.1, curve)
    assert est.r_nm == pytest.approx(curve.points[4].r_nm, rel=0.01)
    with pytest.raises(ValueError):
        ff.invert_radius(100.0, 0.0, curve)


def test_photon_budget():
    assert ff.photon_budget_s(70000.0, 1000.0) * 1e3 == pytest.approx(14.2857, rel=1e-4)
    with pytest.raises(ValueError):
        ff.photon_budget_s(0.0, 1000.0)


def test_flim_cube_shape_and_coverage():
    scene = ff.FlimScene()
    scene.width_px = 8
    scene.height_px = 4
    scene.pixel_size_nm = 100.0
    scene.psf_fwhm_nm = 0.0
    scene.photons_per_pixel = 2000.0
    scene.flakes = [[(0.0, 0.0), (400.0, 0.0), (400.0, 400.0), (0.0, 400.0)]]
    p = reference_params()
    d = ff.DepthDistribution.from_params(p)
    grid = ff.TimeGrid(64.0, 512, 1024.0)
    cube = ff.simulate_flim_cube(scene, p, d, ff.IrfSpec(), grid, 5)
    assert cube.counts.shape == (4, 8, 512)
    cov = np.asarray(ff.coverage_map(scene)).reshape(4, 8)
    assert cov[1, 1] == pytest.approx(1.0)
    assert cov[3, 7] == pytest.approx(0.0)


def test_flim_map_fitting():
    scene = ff.FlimScene()
    scene.width_px = 6
    scene.height_px = 3
    scene.pixel_size_nm = 100.0
    scene.psf_fwhm_nm = 0.0
    scene.photons_per_pixel = 5000.0
    scene.flakes = [[(0.0, 0.0), (300.0, 0.0), (300.0, 300.0), (0.0, 300.0)]]
    scene.on_flake = ff.SignalComposition(1.0, 5.0, 0.0, 0.41)
    p = reference_params()
    d = ff.DepthDistribution.from_params(p)
    grid = ff.TimeGrid(64.0, 2048, 2048.0)
    cube = ff.simulate_flim_cube(scene, p, d, ff.IrfSpec(), grid, 9)
    fmap = ff.fit_flim_cube(cube, ff.GateSpec(), ff.IrfSpec(), 500)
    on = fmap.at(1, 1)
    off = fmap.at(1, 5)
    assert on.cls == ff.PixelClass.OnFlake
    assert on.tau_fast_ns == pytest.approx(0.41, rel=0.2)
    assert on.tau_slow_ns < 6.0
    assert off.cls == ff.PixelClass.OffFlake
    assert off.tau_slow_ns == pytest.approx(12.0, rel=0.1)
