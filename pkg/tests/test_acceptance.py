"""Acceptance criteria, each at its stated tolerance.

A PASS/FAIL line per criterion is printed in the terminal summary by conftest.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ndcsim import classical, dispersion, quantum, reproduce
from ndcsim.dispersion import ZERO_BUDGET, DispersionBudget, GratingPair
from ndcsim.scenario import load_canned, run_scenario

QUOTED_GDD = -((2.03e-12) ** 2)
MATCHED_SIGMA0 = 51225314801739.375  # 1/sqrt(gamma D^2 L^2): equal undispersed widths


@pytest.fixture(scope="module")
def fig3a():
    return run_scenario(load_canned("fig3a")).derived


@pytest.fixture(scope="module")
def fig3b():
    return run_scenario(load_canned("fig3b")).derived


@pytest.fixture(scope="module")
def fig4():
    a = run_scenario(load_canned("fig4a")).derived["slice_peaks"]
    b = run_scenario(load_canned("fig4b")).derived["slice_peaks"]
    return [p["peak_delay_s"] for p in a], [p["peak_delay_s"] for p in b]


def test_ac1_grating_double_pass_gdd(record_property):
    gp = GratingPair(1e-3 / 2400, 0.1, math.radians(60.45), passes=2)
    gdd = dispersion.grating_pair_gdd(gp, 750e-9)
    single = dispersion.grating_pair_gdd(GratingPair(1e-3 / 2400, 0.1, math.radians(60.45), passes=1), 750e-9)
    record_property("gdd_s2", gdd)
    record_property("single_pass_sqrt_abs_s", math.sqrt(-single))
    assert gdd == pytest.approx(QUOTED_GDD, rel=0.04)


def test_ac2_ndc_reduction_magnitude(pm, gamma, record_property):
    value = quantum.ndc_reduction(pm, gamma, QUOTED_GDD)
    record_property("reduction_s", value)
    assert value == pytest.approx(496e-12, rel=0.01)


def test_ac3_fig3a_fitted_width(fig3a, record_property):
    record_property("fitted_fwhm_s", fig3a["fitted_fwhm_s"])
    record_property("tcspc_fitted_fwhm_s", fig3a["tcspc_fitted_fwhm_s"])
    assert fig3a["fitted_fwhm_s"] == pytest.approx(3.861e-9, rel=0.01)
    assert fig3a["tcspc_fitted_fwhm_s"] == pytest.approx(3.861e-9, rel=0.01)


def test_ac4_fig3b_unclipped_drop(fig3b, record_property):
    drop = fig3b["predicted_width_drop_s"]
    record_property("drop_s", drop)
    assert 0.49e-9 <= drop <= 0.50e-9


def test_ac4_fig3b_clipped_total_width(fig3b, record_property):
    record_property("fitted_fwhm_s", fig3b["fitted_fwhm_s"])
    record_property("passband_m", fig3b["clipping_passband_fwhm_m"])
    assert fig3b["fitted_fwhm_s"] == pytest.approx(2.436e-9, rel=0.05)


def test_ac4_fig3b_ndc_share(fig3b, record_property):
    share = fig3b["ndc_share_width_law_s"]
    record_property("ndc_share_s", share)
    record_property("clipping_share_s", fig3b["clipping_share_s"])
    assert 478e-12 * 0.99 <= share <= 496e-12 * 1.01


def test_ac5_fig4_outer_spacing_reduction(fig4, record_property):
    fiber, grating = fig4
    reduction = abs(fiber[0] - fiber[-1]) - abs(grating[0] - grating[-1])
    record_property("reduction_s", reduction)
    assert 450e-12 <= reduction <= 560e-12


def test_ac5_fig4_every_adjacent_spacing_reduced(fig4, record_property):
    fiber, grating = fig4
    drops = [abs(fiber[i + 1] - fiber[i]) - abs(grating[i + 1] - grating[i]) for i in range(len(fiber) - 1)]
    record_property("min_adjacent_reduction_s", min(drops))
    assert all(d > 0 for d in drops)


@pytest.fixture(scope="module")
def zero_width(gauss_jsa):
    delays = quantum.delay_grid(4 * quantum.expected_fwhm(gauss_jsa, 0.0), 2**14)
    return quantum.g2_numeric(gauss_jsa, ZERO_BUDGET, ZERO_BUDGET, delays).fwhm()


@pytest.mark.parametrize("b", [1e-24, 1e-23, 3.2e-23])
def test_ac6_cancellation_vs_classical(gauss_jsa, zero_width, b, record_property):
    delays = quantum.delay_grid(4 * zero_width, 2**14)
    q = quantum.g2_numeric(gauss_jsa, DispersionBudget(0.0, b), DispersionBudget(0.0, -b), delays).fwhm()
    c = classical.classical_fwhm(MATCHED_SIGMA0, b, -b).fwhm
    record_property("quantum_fwhm_s", q)
    record_property("classical_fwhm_s", c)
    assert zero_width == pytest.approx(46e-15, rel=0.01)
    assert q == pytest.approx(zero_width, rel=0.01)
    assert c >= 10 * zero_width


B_SWEEP = [0.0, 1e-28, -3e-28, 1e-27, 4e-27, -2e-26, 1e-25, -1e-24, 4.1209e-24, 1e-23, -2.7257e-23, 3.2e-23]


@pytest.mark.parametrize("b", B_SWEEP)
def test_ac7_numeric_matches_closed_form(gauss_jsa, pm, gamma, b, record_property):
    arm1 = DispersionBudget(1e-12, 0.6 * b)
    arm2 = DispersionBudget(3e-12, 0.4 * b)
    cf = quantum.g2_closed_form(pm, gamma, arm1, arm2)
    delays = quantum.delay_grid(4 * cf.fwhm, 2**14, center=cf.peak_delay)
    g2 = quantum.g2_numeric(gauss_jsa, arm1, arm2, delays)
    record_property("rel_err", abs(g2.fwhm() - cf.fwhm) / cf.fwhm)
    assert g2.fwhm() == pytest.approx(cf.fwhm, rel=0.005)


@settings(max_examples=40, deadline=None)
@given(st.floats(-27.5, -22.3), st.sampled_from([-1.0, 1.0]), st.floats(0.0, 1.0))
def test_ac7_closed_form_property(gauss_jsa, pm, gamma, log_b, sign, split):
    b = sign * 10**log_b
    arm1, arm2 = DispersionBudget(0.0, split * b), DispersionBudget(0.0, (1 - split) * b)
    cf = quantum.g2_closed_form(pm, gamma, arm1, arm2)
    delays = quantum.delay_grid(4 * cf.fwhm, 2**12, center=cf.peak_delay)
    assert quantum.g2_numeric(gauss_jsa, arm1, arm2, delays).fwhm() == pytest.approx(cf.fwhm, rel=0.005)


@pytest.mark.parametrize(
    "sigma, b1, b2",
    [(1e13, 0.0, 0.0), (1e13, 3.2e-23, 0.0), (1e13, 3.2e-23, -4.1209e-24), (5e13, 1e-23, 1e-23), (5e13, 1e-24, -1e-24)],
)
def test_ac8_mixed_state_flatness(sigma, b1, b2, record_property):
    out = quantum.g2_mixed_state(sigma, DispersionBudget(1e-9, b1), DispersionBudget(0.0, b2), quantum.delay_grid(2e-9, 2048))
    record_property("flatness", out.flatness)
    assert out.flatness < 1e-9


def test_ac9_mixture_ordering_and_floor(record_property):
    ordered, margins = [], []
    for step in reproduce.MIXTURE_STEP_SWEEP:
        for gdd in reproduce.MIXTURE_GDD_SWEEP:
            spec = classical.MixtureSpec(2.5e15, step, 200, 5e13, 1e13)
            ordered.append(classical.mixture_case_widths(spec, gdd).ordered())
            b1, b2 = classical.case_budgets(gdd)["plus_minus"]
            pair = classical.FWHM_PER_SIGMA * math.hypot(classical.dispersed_sigma(1e13, gdd), classical.dispersed_sigma(1e13, -gdd))
            tau = quantum.delay_grid(4 * pair, 4096)
            h = classical.mixture_histogram(spec, b1, b2, tau)
            # one delay step of slack for the sampled half-maximum crossing
            margins.append((h.fwhm - (pair - (tau[1] - tau[0]))) / pair)
    record_property("all_ordered", all(ordered))
    record_property("min_floor_margin", min(margins))
    assert all(ordered)
    assert min(margins) >= 0


def test_ac10_reproduce_is_byte_identical(tmp_path, record_property):
    for name in ("a", "b"):
        for report in reproduce.reproduce("all", seed=7):
            report.write(tmp_path / name)
    files_a = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(tmp_path / "b") for p in (tmp_path / "b").rglob("*") if p.is_file())
    assert files_a == files_b
    differing = [f for f in files_a if (tmp_path / "a" / f).read_bytes() != (tmp_path / "b" / f).read_bytes()]
    record_property("files_compared", len(files_a))
    assert not differing
    assert np.all([str(f).endswith((".csv", ".json", ".txt")) for f in files_a])
