"""Biphoton joint spectral amplitude models and wavelength/detuning algebra.

Detunings ``nu`` are angular frequencies in rad/s measured from the centre
frequencies of the two photons: photon 1 sits at ``Omega_1 + nu`` and photon 2
at ``Omega_2 - nu``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

C_LIGHT = 299_792_458.0  # m/s, exact

FWHM_PER_SIGMA = 2.0 * np.sqrt(2.0 * np.log(2.0))

MODEL_TAGS = ("sinc", "gaussian", "custom")


@dataclass(frozen=True)
class PumpSpec:
    wavelength_pump: float

    def __post_init__(self):
        if not self.wavelength_pump > 0:
            raise ValueError(f"pump wavelength must be positive, got {self.wavelength_pump}")

    @property
    def angular_frequency(self) -> float:
        return 2.0 * np.pi * C_LIGHT / self.wavelength_pump


@dataclass(frozen=True)
class PhaseMatching:
    """Crystal parameters entering the type-I phase-matching amplitude.

    Attributes:
        crystal_length: crystal thickness L in metres.
        inverse_group_velocity_difference: D = 1/u2 - 1/u1 in s/m.
        center_signal: centre angular frequency of photon 1 (rad/s).
        center_idler: centre angular frequency of photon 2 (rad/s).
    """

    crystal_length: float
    inverse_group_velocity_difference: float
    center_signal: float
    center_idler: float

    def __post_init__(self):
        if not self.crystal_length > 0:
            raise ValueError("crystal_length must be positive")
        if not self.crystal_length * self.inverse_group_velocity_difference > 0:
            raise ValueError("D*L must be positive")
        if not (self.center_signal > 0 and self.center_idler > 0):
            raise ValueError("centre frequencies must be positive")

    @property
    def dl(self) -> float:
        """Product D*L in seconds."""
        return self.crystal_length * self.inverse_group_velocity_difference

    @classmethod
    def from_dl(cls, dl, crystal_length, pump: PumpSpec, signal_wavelength):
        """Build from a quoted D*L, deriving the idler centre from energy conservation."""
        idler_wavelength = conjugate_wavelength(signal_wavelength, pump)
        return cls(
            crystal_length=crystal_length,
            inverse_group_velocity_difference=dl / crystal_length,
            center_signal=2.0 * np.pi * C_LIGHT / signal_wavelength,
            center_idler=2.0 * np.pi * C_LIGHT / idler_wavelength,
        )


@dataclass(frozen=True)
class DetuningGrid:
    """Uniform cell-centred detuning grid, exactly symmetric about zero.

    Sample k sits at ``(k - (N - 1)/2) * spacing`` with ``spacing = 2*half_span/N``,
    so the grid is mirror symmetric and zero falls between the two middle samples.
    """

    half_span: float
    point_count: int
    samples: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = self.point_count
        if n < 2**8 or n & (n - 1):
            raise ValueError(f"point_count must be a power of two >= 256, got {n}")
        if not (self.half_span > 0 and np.isfinite(self.half_span)):
            raise ValueError("half_span must be positive and finite")
        offsets = np.arange(n) - (n - 1) / 2.0
        samples = offsets * self.spacing
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_span / self.point_count

    @property
    def span(self) -> float:
        return 2.0 * self.half_span

    @classmethod
    def covering(cls, amplitude_fwhm, point_count=2**14, factor=8.0):
        """Grid whose full span is ``factor`` times the given amplitude FWHM."""
        return cls(half_span=0.5 * factor * amplitude_fwhm, point_count=point_count)


@dataclass(frozen=True)
class JointSpectralAmplitude:
    grid: DetuningGrid
    values: np.ndarray = field(repr=False)
    model_tag: str = "custom"
    gamma: float | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.shape != self.grid.samples.shape:
            raise ValueError("values must match the grid shape")
        if not np.all(np.isfinite(values)):
            raise ValueError("JSA values must be finite")
        if self.model_tag not in MODEL_TAGS:
            raise ValueError(f"unknown model tag {self.model_tag!r}")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def nu(self) -> np.ndarray:
        return self.grid.samples

    def energy(self) -> float:
        """Discrete norm sum |S|^2 dnu."""
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.spacing)

    def intensity_fwhm(self) -> float:
        """FWHM of |S(nu)|^2 in rad/s, by interpolation between half-maximum crossings."""
        from .quantum import fwhm_of_samples

        return fwhm_of_samples(self.nu, np.abs(self.values) ** 2)

    def with_values(self, values, model_tag="custom") -> JointSpectralAmplitude:
        return replace(self, values=values, model_tag=model_tag, gamma=None)


def sinc_amplitude(nu, pm: PhaseMatching):
    """sinc(nu*D*L/2) with sinc(x) = sin(x)/x."""
    x = np.asarray(nu, dtype=float) * pm.dl / 2.0
    # np.sinc is the normalised sinc sin(pi x)/(pi x)
    return np.sinc(x / np.pi)


def gaussian_amplitude(nu, pm: PhaseMatching, gamma):
    u = np.asarray(nu, dtype=float) * pm.dl
    return np.exp(-gamma * u**2)


@lru_cache(maxsize=1)
def _sinc_half_point() -> float:
    # positive root of sin(x) = x/2 inside the main lobe
    return brentq(lambda x: np.sin(x) - x / 2.0, 1.0, 2.5, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def sinc_amplitude_fwhm(pm: PhaseMatching) -> float:
    """Amplitude FWHM of sinc(nu*D*L/2) in rad/s."""
    return 4.0 * _sinc_half_point() / pm.dl


def gaussian_amplitude_fwhm(pm: PhaseMatching, gamma) -> float:
    return 2.0 * np.sqrt(np.log(2.0) / gamma) / pm.dl


def match_gamma() -> float:
    """Gaussian exponent whose amplitude FWHM equals that of sinc(u/2).

    With x the half-amplitude point of sinc (sin x = x/2) the sinc is at half
    height at u = 2x, so exp(-gamma u^2) = 1/2 there gives ln2 / (2x)^2.
    """
    x_half = _sinc_half_point()
    return np.log(2.0) / (2.0 * x_half) ** 2


def _check_coverage(grid: DetuningGrid, amplitude_fwhm: float):
    if grid.span < 8.0 * amplitude_fwhm * (1.0 - 1e-12):
        raise ValueError(
            f"grid span {grid.span:.4g} rad/s is below 8x the amplitude FWHM "
            f"({8.0 * amplitude_fwhm:.4g} rad/s required)"
        )


def sinc_jsa(pm: PhaseMatching, grid: DetuningGrid) -> JointSpectralAmplitude:
    main_lobe = 4.0 * np.pi / pm.dl
    if main_lobe / grid.spacing < 16:
        raise ValueError(
            f"grid too coarse: {main_lobe / grid.spacing:.1f} points across the sinc main lobe, need 16"
        )
    _check_coverage(grid, sinc_amplitude_fwhm(pm))
    return JointSpectralAmplitude(grid, sinc_amplitude(grid.samples, pm), "sinc")


def gaussian_jsa(pm: PhaseMatching, gamma: float, grid: DetuningGrid) -> JointSpectralAmplitude:
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    _check_coverage(grid, gaussian_amplitude_fwhm(pm, gamma))
    return JointSpectralAmplitude(grid, gaussian_amplitude(grid.samples, pm, gamma), "gaussian", gamma)


def conjugate_wavelength(lambda_signal: float, pump: PumpSpec) -> float:
    """Energy-conserving partner wavelength lp*l1/(l1 - lp)."""
    lp = pump.wavelength_pump
    if not lambda_signal > lp:
        raise ValueError(
            f"signal wavelength {lambda_signal} must exceed the pump wavelength {lp}"
        )
    return lp * lambda_signal / (lambda_signal - lp)


def wavelength_to_detuning(wavelength, center: float):
    """Angular-frequency offset 2*pi*c/lambda - center (rad/s)."""
    wavelength = np.asarray(wavelength, dtype=float)
    if np.any(wavelength <= 0):
        raise ValueError("wavelength must be positive")
    out = 2.0 * np.pi * C_LIGHT / wavelength - center
    return float(out) if out.ndim == 0 else out


def detuning_to_wavelength(nu, center: float):
    return 2.0 * np.pi * C_LIGHT / (center + np.asarray(nu, dtype=float))
