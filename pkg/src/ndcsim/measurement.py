"""Measurement chain: spectral filtering, timing jitter, TCSPC histograms, Gaussian fits."""

from __future__ import annotations

import io
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.optimize import OptimizeWarning, brentq, curve_fit
from scipy.signal import fftconvolve

from .dispersion import DispersionBudget, relative_delay_slope, total_gdd
from .quantum import CorrelationFunction, delay_grid, expected_fwhm, g2_numeric
from .spectral import C_LIGHT, FWHM_PER_SIGMA, JointSpectralAmplitude, wavelength_to_detuning

FILTER_SHAPES = ("gaussian", "rectangular")
# slices keeping less than this fraction of the biphoton energy are not fitted
MIN_SLICE_ENERGY = 1e-6


class DisjointFilterWarning(UserWarning):
    """Filter passband misses the biphoton spectrum."""


class FitError(RuntimeError):
    """Gaussian fit did not converge; ``estimate`` holds the moment-based guess."""

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


@dataclass(frozen=True)
class SpectralFilter:
    """Band-pass filter. ``passband_fwhm`` is the FWHM of the amplitude transmission."""

    center_wavelength: float
    passband_fwhm: float
    shape: str = "gaussian"

    def __post_init__(self):
        if not self.passband_fwhm > 0:
            raise ValueError("passband_fwhm must be positive")
        if not self.center_wavelength > 0:
            raise ValueError("center_wavelength must be positive")
        if self.shape not in FILTER_SHAPES:
            raise ValueError(f"filter shape must be one of {FILTER_SHAPES}")
        if self.passband_fwhm >= 2.0 * self.center_wavelength:
            raise ValueError("passband wider than twice the centre wavelength")

    def detuning_fwhm(self) -> float:
        """Passband edges mapped to angular frequency (rad/s)."""
        lam, w = self.center_wavelength, self.passband_fwhm
        return 2.0 * math.pi * C_LIGHT * (1.0 / (lam - w / 2.0) - 1.0 / (lam + w / 2.0))

    @classmethod
    def from_detuning_fwhm(cls, center_wavelength, width, shape="gaussian"):
        k = 2.0 * math.pi * C_LIGHT
        lam = center_wavelength
        # solve k w / (lam^2 - w^2/4) = width for the wavelength passband w
        w = (-k + math.sqrt(k**2 + width**2 * lam**2)) / (width / 2.0)
        return cls(center_wavelength, w, shape)


@dataclass(frozen=True)
class InstrumentResponse:
    fwhm: float
    shape: str = "gaussian"

    def __post_init__(self):
        if self.fwhm < 0:
            raise ValueError("IRF FWHM must be non-negative")
        if self.shape != "gaussian":
            raise ValueError("only Gaussian instrument responses are modelled")


def filter_window(jsa: JointSpectralAmplitude, filt: SpectralFilter, center: float, arm: int = 2) -> np.ndarray:
    """Amplitude transmission of ``filt`` on the JSA detuning grid.

    ``center`` is the centre angular frequency of the filtered photon. Photon 1
    sits at Omega1 + nu and photon 2 at Omega2 - nu, so for arm 2 the
    detuning axis is mirrored.
    """
    if arm not in (1, 2):
        raise ValueError("arm must be 1 or 2")
    x = jsa.nu if arm == 1 else -jsa.nu
    offset = x - wavelength_to_detuning(filt.center_wavelength, center)
    width = filt.detuning_fwhm()
    if filt.shape == "gaussian":
        return np.exp(-4.0 * math.log(2.0) * offset**2 / width**2)
    return (np.abs(offset) <= width / 2.0).astype(float)


def apply_filter(jsa: JointSpectralAmplitude, filt: SpectralFilter, center: float, arm: int = 2) -> JointSpectralAmplitude:
    window = filter_window(jsa, filt, center, arm)
    if np.all(window == 1.0):
        return jsa
    out = jsa.with_values(jsa.values * window)
    if out.energy() < 1e-12 * jsa.energy():
        warnings.warn(
            f"filter at {filt.center_wavelength:.6g} m does not overlap the biphoton spectrum",
            DisjointFilterWarning,
            stacklevel=2,
        )
    return out


def clip_bandwidth(jsa: JointSpectralAmplitude, window: SpectralFilter, center: float, arm: int = 2) -> JointSpectralAmplitude:
    """Aperture clipping of one photon's spectrum, e.g. by an undersized grating."""
    return apply_filter(jsa, window, center, arm)


def convolve_irf(corr: CorrelationFunction, irf: InstrumentResponse) -> CorrelationFunction:
    if irf.fwhm == 0:
        return corr
    step = corr.step
    if not step < irf.fwhm / 8.0:
        raise ValueError(f"delay step {step:.3g} s must be below IRF FWHM/8 = {irf.fwhm / 8.0:.3g} s")
    sigma = irf.fwhm / FWHM_PER_SIGMA
    half = int(math.ceil(8.0 * sigma / step))
    offsets = np.arange(-half, half + 1) * step
    kernel = np.exp(-(offsets**2) / (2.0 * sigma**2))
    kernel /= kernel.sum()
    out = fftconvolve(corr.values, kernel, mode="same")
    return CorrelationFunction(corr.delays, np.clip(out, 0.0, None))


def deconvolve_irf_width(measured_fwhm: float, irf: InstrumentResponse) -> float:
    """Gaussian quadrature subtraction sqrt(measured^2 - irf^2); exact only for Gaussian shapes."""
    if not measured_fwhm > irf.fwhm:
        raise ValueError("measured width must exceed the IRF width")
    return math.sqrt(measured_fwhm**2 - irf.fwhm**2)


@dataclass(frozen=True)
class TcspcHistogram:
    bin_width: float
    counts: np.ndarray
    origin: float
    seed: int

    def __post_init__(self):
        if not self.bin_width > 0:
            raise ValueError("bin_width must be positive")
        counts = np.asarray(self.counts, dtype=np.int64)
        if np.any(counts < 0):
            raise ValueError("counts must be non-negative")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def bin_starts(self) -> np.ndarray:
        first = round(self.origin / self.bin_width)
        return (first + np.arange(self.counts.size)) * self.bin_width

    def as_correlation(self) -> CorrelationFunction:
        return CorrelationFunction(self.bin_starts + 0.5 * self.bin_width, self.counts.astype(float))

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        buf.write("bin_start_s,counts\n")
        for t, n in zip(self.bin_starts.tolist(), self.counts.tolist()):
            buf.write(f"{t!r},{n}\n")
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def bin_masses(corr: CorrelationFunction, bin_width: float):
    """Integrated correlation per bin; bins start on integer multiples of ``bin_width``."""
    first = math.floor(corr.delays[0] / bin_width)
    n_bins = math.ceil(corr.delays[-1] / bin_width) - first
    edges = (first + np.arange(n_bins + 1)) * bin_width
    cumulative = cumulative_trapezoid(corr.values, corr.delays, initial=0.0)
    return first * bin_width, np.diff(np.interp(edges, corr.delays, cumulative))


def simulate_tcspc(corr: CorrelationFunction, total_counts: int, bin_width: float, seed: int) -> TcspcHistogram:
    """Multinomial draw of ``total_counts`` detection-time differences binned at ``bin_width``."""
    if total_counts < 0:
        raise ValueError("total_counts must be non-negative")
    origin, mass = bin_masses(corr, bin_width)
    total = mass.sum()
    if not total > 0:
        raise ValueError("correlation has zero mass")
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(int(total_counts), mass / total)
    return TcspcHistogram(bin_width, counts, origin, seed)


@dataclass(frozen=True)
class GaussianFit:
    fwhm: float
    center: float
    uncertainty: float
    amplitude: float
    baseline: float
    converged: bool = True

    def to_report(self) -> str:
        return (
            f"fwhm_s={self.fwhm!r}\ncenter_s={self.center!r}\n"
            f"uncertainty_s={self.uncertainty!r}\nconverged={str(self.converged).lower()}\n"
        )


def _gauss(x, amp, center, sigma, base):
    return amp * np.exp(-((x - center) ** 2) / (2.0 * sigma**2)) + base


def fit_gaussian_fwhm(data, max_iterations: int = 4000) -> GaussianFit:
    """Least-squares fit of amp exp(-(t - c)^2 / 2 s^2) + baseline.

    ``data`` is a CorrelationFunction or a TcspcHistogram. Starting values come
    from the baseline-subtracted moments, and the fit runs in units scaled by
    them so results do not depend on the absolute scale of either axis.
    ``uncertainty`` is the one-sigma standard error of the fitted FWHM.
    """
    if isinstance(data, TcspcHistogram):
        data = data.as_correlation()
    x, y = data.delays, data.values
    top, base0 = float(y.max()), float(y.min())
    if not top - base0 > 1e-12 * max(abs(top), 1e-300):
        raise FitError("input has no peak to fit")
    w = y - base0
    c0 = float(np.sum(x * w) / np.sum(w))
    s0 = float(math.sqrt(np.sum((x - c0) ** 2 * w) / np.sum(w)))
    estimate = {"fwhm": FWHM_PER_SIGMA * s0, "center": c0}
    if np.count_nonzero(w >= 0.5 * (top - base0)) < 8:
        raise FitError("fewer than 8 samples above half maximum", estimate)

    # start the centre at the maximum, the moment centre is biased by asymmetric tails
    c_start = float(x[np.argmax(y)])
    xs = (x - c_start) / s0
    ys = (y - base0) / (top - base0)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", OptimizeWarning)
            popt, pcov = curve_fit(_gauss, xs, ys, p0=[1.0, 0.0, 1.0, 0.0], maxfev=max_iterations)
    except (RuntimeError, OptimizeWarning, ValueError) as exc:
        raise FitError(f"Gaussian fit did not converge: {exc}", estimate) from exc
    amp, center, sigma, base = popt
    sigma = abs(sigma)
    if not (np.all(np.isfinite(popt)) and amp > 0 and sigma > 0 and abs(center) < abs(xs).max()):
        raise FitError("Gaussian fit converged to an unphysical solution", estimate)
    sigma_err = math.sqrt(pcov[2, 2]) if np.isfinite(pcov[2, 2]) else math.inf
    return GaussianFit(
        fwhm=FWHM_PER_SIGMA * sigma * s0,
        center=c_start + center * s0,
        uncertainty=FWHM_PER_SIGMA * sigma_err * s0,
        amplitude=amp * (top - base0),
        baseline=base0 + base * (top - base0),
    )


@dataclass(frozen=True)
class MeasurementSetup:
    """Everything the slice and clipping analyses need.

    Attributes:
        jsa: biphoton amplitude (already clipped, if clipping applies).
        arm1, arm2: dispersion budgets.
        irf: timing response convolved onto every curve.
        filter_center: centre angular frequency of the filtered photon.
        filter_arm: which photon carries the monochromator (1 or 2).
        delays: common delay grid; built automatically when None.
    """

    jsa: JointSpectralAmplitude
    arm1: DispersionBudget
    arm2: DispersionBudget
    irf: InstrumentResponse
    filter_center: float
    filter_arm: int = 2
    delays: np.ndarray | None = None

    @property
    def gdd_sum(self) -> float:
        return total_gdd(self.arm1, self.arm2)

    @property
    def peak_delay(self) -> float:
        return -relative_delay_slope(self.arm1, self.arm2)

    def delay_samples(self, points=2**14) -> np.ndarray:
        if self.delays is not None:
            return np.asarray(self.delays, dtype=float)
        return auto_delays(self.jsa, self.arm1, self.arm2, self.irf, points)


def auto_delays(jsa, arm1, arm2, irf: InstrumentResponse, points=2**14, factor=8.0) -> np.ndarray:
    """Delay grid spanning ``factor`` times the expected measured FWHM about the G2 peak."""
    width = math.hypot(expected_fwhm(jsa, total_gdd(arm1, arm2)), irf.fwhm)
    return delay_grid(0.5 * factor * width, points, center=-relative_delay_slope(arm1, arm2))


def measured_curve(setup: MeasurementSetup, jsa: JointSpectralAmplitude | None = None, points=2**14) -> CorrelationFunction:
    """G2 of ``jsa`` (default: the setup's) through the setup's dispersion and IRF."""
    g2 = g2_numeric(jsa if jsa is not None else setup.jsa, setup.arm1, setup.arm2, setup.delay_samples(points))
    return convolve_irf(g2, setup.irf)


@dataclass(frozen=True)
class SlicePeak:
    wavelength: float
    peak_delay: float
    energy_fraction: float
    excluded: bool
    fit: GaussianFit | None = None


def slice_peak_spacing(
    setup: MeasurementSetup,
    wavelengths,
    passband_fwhm: float = 1.2e-9,
    shape: str = "gaussian",
    points=2**14,
) -> list[SlicePeak]:
    """Peak delay of the spectrally resolved biphoton for each filter setting.

    Each slice is filtered, propagated, convolved with the IRF and fitted; the
    fitted Gaussian centre is the slice delay. Slices that keep less than
    MIN_SLICE_ENERGY of the biphoton energy are returned with ``excluded=True``.
    """
    delays = setup.delay_samples(points)
    reference = setup.jsa.energy()
    out = []
    for lam in wavelengths:
        filt = SpectralFilter(float(lam), passband_fwhm, shape)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DisjointFilterWarning)
            sliced = apply_filter(setup.jsa, filt, setup.filter_center, setup.filter_arm)
        fraction = sliced.energy() / reference
        if fraction < MIN_SLICE_ENERGY:
            out.append(SlicePeak(float(lam), math.nan, fraction, True))
            continue
        curve = convolve_irf(g2_numeric(sliced, setup.arm1, setup.arm2, delays), setup.irf)
        fit = fit_gaussian_fwhm(curve)
        out.append(SlicePeak(float(lam), fit.center, fraction, False, fit))
    return out


def predicted_slice_delay(setup: MeasurementSetup, wavelength: float) -> float:
    """Narrow-filter limit: the slice peaks where the stationary phase maps its detuning."""
    nu_photon = wavelength_to_detuning(wavelength, setup.filter_center)
    nu = nu_photon if setup.filter_arm == 1 else -nu_photon
    return setup.peak_delay - 2.0 * setup.gdd_sum * nu


def fit_clipping_window(
    setup: MeasurementSetup,
    target_fwhm: float,
    center_wavelength: float,
    arm: int = 2,
    shape: str = "gaussian",
    points=2**14,
) -> SpectralFilter:
    """Clipping passband that brings the fitted measured FWHM to ``target_fwhm``.

    Raises:
        ValueError: when the unclipped width is already below the target.
    """
    delays = setup.delay_samples(points)

    def width_for(passband):
        window = SpectralFilter(center_wavelength, passband, shape)
        clipped = clip_bandwidth(setup.jsa, window, setup.filter_center, arm)
        curve = convolve_irf(g2_numeric(clipped, setup.arm1, setup.arm2, delays), setup.irf)
        return fit_gaussian_fwhm(curve).fwhm

    lo, hi = 0.5e-9, 1.9 * center_wavelength
    f_lo, f_hi = width_for(lo) - target_fwhm, width_for(hi) - target_fwhm
    if f_hi < 0:
        raise ValueError("unclipped width is already below the target")
    if f_lo > 0:
        raise ValueError("target width is below what a 0.5 nm window can reach")
    passband = brentq(lambda w: width_for(w) - target_fwhm, lo, hi, xtol=1e-13, rtol=1e-10)
    return SpectralFilter(center_wavelength, passband, shape)
