import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ndcsim import spectral
from ndcsim.spectral import C_LIGHT, DetuningGrid, PumpSpec


def test_match_gamma_against_root_finding_oracle():
    x = mpmath.findroot(lambda x: mpmath.sin(x) - x / 2, 1.9)
    oracle = float(mpmath.log(2) / (2 * x) ** 2)
    assert spectral.match_gamma() == pytest.approx(oracle, rel=1e-13)
    assert spectral.match_gamma() == pytest.approx(0.0482303617402498, rel=1e-12)


def test_match_gamma_agrees_with_quoted_constant_to_four_figures():
    # 0.04822 is the four-figure truncation of 0.048230...
    assert spectral.match_gamma() == pytest.approx(0.04822, abs=0.5e-4 * 2.2)


def test_matched_gaussian_and_sinc_share_half_points(pm):
    g = spectral.match_gamma()
    w_sinc = spectral.sinc_amplitude_fwhm(pm)
    w_gauss = spectral.gaussian_amplitude_fwhm(pm, g)
    assert w_gauss == pytest.approx(w_sinc, rel=1e-12)
    assert spectral.sinc_amplitude(w_sinc / 2, pm) == pytest.approx(0.5, rel=1e-12)
    assert spectral.gaussian_amplitude(w_gauss / 2, pm, g) == pytest.approx(0.5, rel=1e-12)


@pytest.mark.parametrize("n", [0, 128, 255, 1000, 3000])
def test_grid_rejects_bad_point_counts(n):
    with pytest.raises(ValueError):
        DetuningGrid(1e13, n)


def test_grid_is_mirror_symmetric_and_read_only():
    grid = DetuningGrid(3e13, 1024)
    nu = grid.samples
    np.testing.assert_array_equal(nu, -nu[::-1])
    assert nu[1] - nu[0] == pytest.approx(grid.spacing)
    with pytest.raises(ValueError):
        nu[0] = 1.0


def test_gaussian_intensity_width_and_energy(gauss_jsa, pm, gamma):
    a = gamma * pm.dl**2
    # |S|^2 = exp(-2 a nu^2)
    assert gauss_jsa.intensity_fwhm() == pytest.approx(2 * math.sqrt(math.log(2) / (2 * a)), rel=1e-5)
    assert gauss_jsa.energy() == pytest.approx(math.sqrt(math.pi / (2 * a)), rel=1e-10)


def test_jsa_values_are_immutable(gauss_jsa):
    with pytest.raises(ValueError):
        gauss_jsa.values[0] = 0.0


def test_grid_must_cover_eight_widths(pm, gamma):
    width = spectral.gaussian_amplitude_fwhm(pm, gamma)
    with pytest.raises(ValueError, match="8x"):
        spectral.gaussian_jsa(pm, gamma, DetuningGrid.covering(width, 1024, factor=4))


def test_sinc_rejects_coarse_grid(pm):
    # 256 points over a span of ~100 main lobes leaves < 16 samples per lobe
    grid = DetuningGrid(50 * 4 * math.pi / pm.dl, 256)
    with pytest.raises(ValueError, match="main lobe"):
        spectral.sinc_jsa(pm, grid)


def test_sinc_jsa_on_adequate_grid(pm):
    width = spectral.sinc_amplitude_fwhm(pm)
    jsa = spectral.sinc_jsa(pm, DetuningGrid.covering(width, 4096, factor=64))
    assert jsa.model_tag == "sinc"
    # cell-centred grid: the nearest samples sit half a spacing from zero
    assert np.max(np.abs(jsa.values)) == pytest.approx(1.0, abs=1e-3)


def test_conjugate_wavelength_energy_conservation():
    pump = PumpSpec(408.2e-9)
    idler = spectral.conjugate_wavelength(896e-9, pump)
    assert idler == pytest.approx(749.7892578925789e-9, rel=1e-12)
    assert 1 / 896e-9 + 1 / idler == pytest.approx(1 / 408.2e-9, rel=1e-14)
    with pytest.raises(ValueError):
        spectral.conjugate_wavelength(400e-9, pump)


@pytest.mark.parametrize(
    "wavelength, expected",
    [(740e-9, 3.39396678794385e13), (760e-9, -3.3046518724717e13), (750e-9, 0.0)],
)
def test_wavelength_to_detuning_about_750nm(wavelength, expected):
    center = 2 * math.pi * C_LIGHT / 750e-9
    assert spectral.wavelength_to_detuning(wavelength, center) == pytest.approx(expected, rel=1e-9, abs=1e-3)


def test_detuning_spacing_740_to_760():
    center = 2 * math.pi * C_LIGHT / 750e-9
    spacing = spectral.wavelength_to_detuning(740e-9, center) - spectral.wavelength_to_detuning(760e-9, center)
    assert spacing == pytest.approx(6.7e13, rel=0.01)


@settings(max_examples=60, deadline=None)
@given(st.floats(600e-9, 1000e-9), st.floats(-5e13, 5e13))
def test_detuning_wavelength_round_trip(wavelength, nu):
    center = 2 * math.pi * C_LIGHT / wavelength
    lam = spectral.detuning_to_wavelength(nu, center)
    assert spectral.wavelength_to_detuning(lam, center) == pytest.approx(nu, abs=1e-6 * abs(center))


def test_negative_pump_wavelength_rejected():
    with pytest.raises(ValueError):
        PumpSpec(-1.0)
