import math

import numpy as np
import pytest

from ndcsim import measurement, quantum, spectral
from ndcsim.dispersion import ZERO_BUDGET, DispersionBudget
from ndcsim.measurement import (
    DisjointFilterWarning,
    FitError,
    InstrumentResponse,
    MeasurementSetup,
    SpectralFilter,
)
from ndcsim.quantum import CorrelationFunction
from ndcsim.spectral import C_LIGHT, FWHM_PER_SIGMA

IRF = InstrumentResponse(762e-12)
FIBER = DispersionBudget(0.0, 3.137787465564776e-23)
CENTER_750 = 2 * math.pi * C_LIGHT / 750e-9


def _gaussian_curve(fwhm, center=0.0, points=4001, span=8.0, peak=1.0):
    sigma = fwhm / FWHM_PER_SIGMA
    t = center + np.linspace(-span * fwhm / 2, span * fwhm / 2, points)
    return CorrelationFunction(t, peak * np.exp(-((t - center) ** 2) / (2 * sigma**2)))


@pytest.fixture(scope="module")
def fiber_setup(gauss_jsa, pm):
    return MeasurementSetup(gauss_jsa, FIBER, ZERO_BUDGET, IRF, pm.center_idler, 2)


def test_filter_detuning_width_analytic():
    f = SpectralFilter(750e-9, 1.2e-9)
    expected = 2 * math.pi * C_LIGHT * (1 / 749.4e-9 - 1 / 750.6e-9)
    assert f.detuning_fwhm() == pytest.approx(expected, rel=1e-12)
    back = SpectralFilter.from_detuning_fwhm(750e-9, f.detuning_fwhm())
    assert back.passband_fwhm == pytest.approx(1.2e-9, rel=1e-10)


@pytest.mark.parametrize(
    "kwargs",
    [dict(center_wavelength=750e-9, passband_fwhm=0.0), dict(center_wavelength=-1.0, passband_fwhm=1e-9),
     dict(center_wavelength=750e-9, passband_fwhm=1e-9, shape="lorentzian")],
)
def test_filter_validation(kwargs):
    with pytest.raises(ValueError):
        SpectralFilter(**kwargs)


def test_narrow_filter_sets_output_bandwidth(gauss_jsa):
    f = SpectralFilter(750e-9, 1.2e-9)
    out = measurement.apply_filter(gauss_jsa, f, CENTER_750, arm=2)
    amp = np.abs(out.values)
    assert quantum.fwhm_of_samples(out.nu, amp) == pytest.approx(f.detuning_fwhm(), rel=0.02)


def test_filter_on_arm_two_mirrors_detuning(gauss_jsa):
    f = SpectralFilter(740e-9, 1.2e-9)
    nu2 = spectral.wavelength_to_detuning(740e-9, CENTER_750)
    on2 = measurement.apply_filter(gauss_jsa, f, CENTER_750, arm=2)
    on1 = measurement.apply_filter(gauss_jsa, f, CENTER_750, arm=1)
    assert on2.nu[np.argmax(np.abs(on2.values))] == pytest.approx(-nu2, abs=2 * gauss_jsa.grid.spacing)
    assert on1.nu[np.argmax(np.abs(on1.values))] == pytest.approx(nu2, abs=2 * gauss_jsa.grid.spacing)


def test_disjoint_filter_warns(gauss_jsa):
    with pytest.warns(DisjointFilterWarning):
        measurement.apply_filter(gauss_jsa, SpectralFilter(500e-9, 1e-9), CENTER_750)


def test_rectangular_filter_passes_band_unchanged(gauss_jsa):
    f = SpectralFilter(750e-9, 40e-9, "rectangular")
    out = measurement.apply_filter(gauss_jsa, f, CENTER_750)
    window = measurement.filter_window(gauss_jsa, f, CENTER_750)
    assert set(np.unique(window)) <= {0.0, 1.0}
    kept = window == 1.0
    np.testing.assert_array_equal(out.values[kept], gauss_jsa.values[kept])


def test_irf_of_delta_is_irf():
    t = np.linspace(-4e-9, 4e-9, 4001)
    values = np.zeros_like(t)
    values[2000] = 1.0
    out = measurement.convolve_irf(CorrelationFunction(t, values), IRF)
    assert out.fwhm() == pytest.approx(762e-12, rel=1e-3)


def test_irf_adds_in_quadrature():
    out = measurement.convolve_irf(_gaussian_curve(3.785e-9), IRF)
    assert out.fwhm() == pytest.approx(math.hypot(3.785e-9, 762e-12), rel=1e-4)
    assert out.fwhm() == pytest.approx(3.861e-9, rel=1e-3)


def test_irf_needs_fine_grid():
    with pytest.raises(ValueError, match="FWHM/8"):
        measurement.convolve_irf(_gaussian_curve(1e-9, points=41), IRF)


def test_zero_irf_is_identity():
    curve = _gaussian_curve(1e-9)
    assert measurement.convolve_irf(curve, InstrumentResponse(0.0)) is curve


def test_deconvolve_irf_width():
    assert measurement.deconvolve_irf_width(3.861e-9, IRF) == pytest.approx(3.785059708908e-9, rel=1e-10)
    with pytest.raises(ValueError):
        measurement.deconvolve_irf_width(500e-12, IRF)


def test_fit_recovers_exact_gaussian():
    fit = measurement.fit_gaussian_fwhm(_gaussian_curve(3.861e-9, center=2e-10))
    assert fit.converged
    assert fit.fwhm == pytest.approx(3.861e-9, rel=1e-6)
    assert fit.center == pytest.approx(2e-10, abs=1e-15)


def test_fit_report_format():
    report = measurement.fit_gaussian_fwhm(_gaussian_curve(1e-9)).to_report()
    keys = [line.split("=")[0] for line in report.strip().splitlines()]
    assert keys == ["fwhm_s", "center_s", "uncertainty_s", "converged"]


def test_fit_noisy_histogram_within_two_percent():
    rng = np.random.default_rng(11)
    curve = _gaussian_curve(3.861e-9, points=1001, peak=1000.0)
    noisy = CorrelationFunction(curve.delays, rng.poisson(curve.values).astype(float))
    assert measurement.fit_gaussian_fwhm(noisy).fwhm == pytest.approx(3.861e-9, rel=0.02)


def test_fit_rejects_flat_and_narrow_inputs():
    t = np.linspace(0, 1, 100)
    with pytest.raises(FitError):
        measurement.fit_gaussian_fwhm(CorrelationFunction(t, np.ones(100)))
    spike = np.zeros(100)
    spike[50] = 1.0
    with pytest.raises(FitError) as info:
        measurement.fit_gaussian_fwhm(CorrelationFunction(t, spike))
    assert info.value.estimate is not None


def test_tcspc_deterministic_per_seed():
    curve = _gaussian_curve(3.861e-9)
    a = measurement.simulate_tcspc(curve, 10000, 16e-12, seed=3)
    b = measurement.simulate_tcspc(curve, 10000, 16e-12, seed=3)
    c = measurement.simulate_tcspc(curve, 10000, 16e-12, seed=4)
    assert a.to_csv() == b.to_csv()
    assert not np.array_equal(a.counts, c.counts)
    assert a.counts.sum() == 10000
    assert a.to_csv().startswith("bin_start_s,counts\n")


def test_tcspc_zero_counts():
    hist = measurement.simulate_tcspc(_gaussian_curve(1e-9), 0, 16e-12, seed=0)
    assert hist.counts.sum() == 0


def test_tcspc_bins_on_integer_multiples():
    hist = measurement.simulate_tcspc(_gaussian_curve(1e-9, center=3.3e-11), 100, 16e-12, seed=0)
    ratio = hist.bin_starts / 16e-12
    np.testing.assert_allclose(ratio, np.round(ratio), atol=1e-9)


def test_tcspc_mean_counts_follow_bin_mass():
    curve = _gaussian_curve(1e-9, points=2001)
    origin, mass = measurement.bin_masses(curve, 50e-12)
    probs = mass / mass.sum()
    n = 5000
    draws = np.array([measurement.simulate_tcspc(curve, n, 50e-12, seed=s).counts for s in range(100)])
    mean = draws.mean(axis=0)
    sigma = np.sqrt(n * probs * (1 - probs) / 100)
    busy = probs > 1e-3
    assert np.all(np.abs(mean[busy] - n * probs[busy]) < 3.5 * sigma[busy] + 1e-12)


def test_bin_masses_conserve_total():
    curve = _gaussian_curve(1e-9, points=2001)
    _, mass = measurement.bin_masses(curve, 16e-12)
    assert mass.sum() == pytest.approx(curve.mass(), rel=1e-3)


def test_fiber_only_measured_width(fiber_setup):
    curve = measurement.measured_curve(fiber_setup)
    assert measurement.fit_gaussian_fwhm(curve).fwhm == pytest.approx(3.861e-9, rel=0.002)


def test_slice_at_idler_center_peaks_at_zero(fiber_setup):
    lam = 2 * math.pi * C_LIGHT / fiber_setup.filter_center
    (peak,) = measurement.slice_peak_spacing(fiber_setup, [lam])
    assert not peak.excluded
    assert abs(peak.peak_delay) < 1e-12


def test_slice_spacing_follows_chirp(fiber_setup):
    peaks = measurement.slice_peak_spacing(fiber_setup, [740e-9, 760e-9])
    dnu = spectral.wavelength_to_detuning(740e-9, fiber_setup.filter_center) - spectral.wavelength_to_detuning(
        760e-9, fiber_setup.filter_center
    )
    spacing = peaks[0].peak_delay - peaks[1].peak_delay
    assert spacing == pytest.approx(2 * FIBER.total_gdd * dnu, rel=0.02)
    for p in peaks:
        assert p.peak_delay == pytest.approx(measurement.predicted_slice_delay(fiber_setup, p.wavelength), rel=0.01)


def test_far_slice_excluded(fiber_setup):
    (peak,) = measurement.slice_peak_spacing(fiber_setup, [600e-9])
    assert peak.excluded and peak.fit is None


def test_clipping_cannot_widen(fiber_setup):
    with pytest.raises(ValueError, match="already below"):
        measurement.fit_clipping_window(fiber_setup, 5e-9, 750e-9)
