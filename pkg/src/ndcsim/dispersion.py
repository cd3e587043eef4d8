"""Lumped dispersive elements and per-arm dispersion budgets.

Each element carries the path-integrated products used in the wavenumber
expansion k(Omega +/- nu) z = k z +/- (alpha z) nu + (beta z) nu^2:
``group_delay_slope`` is alpha*z (s) and ``gdd`` is beta*z (s^2).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable

from .spectral import C_LIGHT, PhaseMatching


class AsymptoticValidityWarning(UserWarning):
    """Raised when a large-dispersion formula is used outside its regime."""


@dataclass(frozen=True)
class DispersiveElement:
    name: str
    group_delay_slope: float = 0.0
    gdd: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.group_delay_slope) and math.isfinite(self.gdd)):
            raise ValueError(f"element {self.name!r} has non-finite coefficients")

    def negate(self) -> DispersiveElement:
        return DispersiveElement(f"-{self.name}", -self.group_delay_slope, -self.gdd)


@dataclass(frozen=True)
class DispersionBudget:
    total_delay_slope: float = 0.0
    total_gdd: float = 0.0

    def __add__(self, other: DispersionBudget) -> DispersionBudget:
        return DispersionBudget(
            self.total_delay_slope + other.total_delay_slope,
            self.total_gdd + other.total_gdd,
        )


ZERO_BUDGET = DispersionBudget()


@dataclass(frozen=True)
class GratingPair:
    """Parallel grating compressor.

    Attributes:
        groove_spacing: grating period d (m).
        separation: perpendicular grating separation G (m).
        diffracted_angle: diffraction angle theta' (rad).
        passes: 1 for a single transit, 2 when retro-reflected by a mirror.
    """

    groove_spacing: float
    separation: float
    diffracted_angle: float
    passes: int = 2

    def __post_init__(self):
        if not self.groove_spacing > 0:
            raise ValueError("groove spacing must be positive")
        if self.separation < 0:
            raise ValueError("grating separation must be non-negative")
        if not 0 < self.diffracted_angle < math.pi / 2:
            raise ValueError("diffracted angle must lie in (0, pi/2)")
        if self.passes not in (1, 2):
            raise ValueError("passes must be 1 or 2")


def grating_pair_gdd(gp: GratingPair, wavelength: float) -> float:
    """GDD (s^2) of a grating pair; always <= 0.

    Single-pass value is -(lambda / 2 pi c^2) (lambda / d) G / cos^3(theta').
    """
    if not wavelength > 0:
        raise ValueError("wavelength must be positive")
    single = -(wavelength / (2.0 * math.pi * C_LIGHT**2)) * (wavelength / gp.groove_spacing) * (
        gp.separation / math.cos(gp.diffracted_angle) ** 3
    )
    return gp.passes * single


def treacy_grating_gdd(gp: GratingPair, wavelength: float) -> float:
    """Standard compressor GDD -(lambda^3 G) / (2 pi c^2 d^2 cos^3 theta') per pass.

    This is the second derivative of the grating-pair spectral phase and exceeds
    ``grating_pair_gdd`` by the factor lambda/d; both are reported by the CLI.
    """
    return grating_pair_gdd(gp, wavelength) * wavelength / gp.groove_spacing


def width_per_gdd(pm: PhaseMatching, gamma: float) -> float:
    """Factor 2*sqrt(2 ln2 / (gamma D^2 L^2)) converting GDD (s^2) to FWHM (s)."""
    return 2.0 * math.sqrt(2.0 * math.log(2.0) / (gamma * pm.dl**2))


def fiber_gdd_from_measured_width(delta_t: float, pm: PhaseMatching, gamma: float) -> float:
    """Invert the large-dispersion width law for the GDD that produced ``delta_t``."""
    if not delta_t > 0:
        raise ValueError("delta_t must be positive")
    gdd = delta_t / width_per_gdd(pm, gamma)
    if gdd <= gamma * pm.dl**2:
        warnings.warn(
            f"inferred GDD {gdd:.3e} s^2 is not large against gamma*D^2*L^2 "
            f"= {gamma * pm.dl**2:.3e} s^2; the linear width law does not apply",
            AsymptoticValidityWarning,
            stacklevel=2,
        )
    return gdd


def combine(elements: Iterable[DispersiveElement]) -> DispersionBudget:
    elements = list(elements)
    # fsum keeps the total independent of element order
    return DispersionBudget(
        math.fsum(e.group_delay_slope for e in elements),
        math.fsum(e.gdd for e in elements),
    )


def fiber(gdd: float, group_delay_slope: float = 0.0, name: str = "fiber") -> DispersiveElement:
    return DispersiveElement(name, group_delay_slope, gdd)


def vacuum(name: str = "vacuum") -> DispersiveElement:
    return DispersiveElement(name, 0.0, 0.0)


def grating_element(gp: GratingPair, wavelength: float, name: str = "grating_pair") -> DispersiveElement:
    return DispersiveElement(name, 0.0, grating_pair_gdd(gp, wavelength))


ELEMENT_KINDS = ("fiber", "grating_pair", "vacuum")


def element_from_config(cfg: dict, pm: PhaseMatching | None = None, gamma: float | None = None) -> DispersiveElement:
    """Build an element from a scenario dictionary with SI-suffixed keys.

    Recognised kinds:
      fiber         gdd_s2 | measured_fwhm_s (needs pm, gamma); delay_slope_s
      grating_pair  gdd_s2 (quoted value) or geometry: groove_spacing_m,
                    separation_m, diffracted_angle_deg, passes, wavelength_m
      vacuum        no parameters
    """
    kind = cfg.get("kind")
    name = cfg.get("name", kind)
    slope = float(cfg.get("delay_slope_s", 0.0))
    if kind == "vacuum":
        return DispersiveElement(name, slope, 0.0)
    if kind == "fiber":
        if "gdd_s2" in cfg:
            return DispersiveElement(name, slope, float(cfg["gdd_s2"]))
        if "measured_fwhm_s" in cfg:
            if pm is None or gamma is None:
                raise ValueError("fiber from measured width needs the source parameters")
            return DispersiveElement(name, slope, fiber_gdd_from_measured_width(float(cfg["measured_fwhm_s"]), pm, gamma))
        raise ValueError("fiber element needs gdd_s2 or measured_fwhm_s")
    if kind == "grating_pair":
        if "gdd_s2" in cfg:
            return DispersiveElement(name, slope, float(cfg["gdd_s2"]))
        gp = GratingPair(
            groove_spacing=float(cfg["groove_spacing_m"]),
            separation=float(cfg["separation_m"]),
            diffracted_angle=math.radians(float(cfg["diffracted_angle_deg"])),
            passes=int(cfg.get("passes", 2)),
        )
        return DispersiveElement(name, slope, grating_pair_gdd(gp, float(cfg["wavelength_m"])))
    raise ValueError(f"unknown element kind {kind!r}; expected one of {ELEMENT_KINDS}")


def total_gdd(arm1: DispersionBudget, arm2: DispersionBudget) -> float:
    """Combined GDD beta1 z1 + beta2 z2 that sets the biphoton width."""
    return arm1.total_gdd + arm2.total_gdd


def relative_delay_slope(arm1: DispersionBudget, arm2: DispersionBudget) -> float:
    """alpha1 z1 - alpha2 z2, the linear spectral phase of the biphoton."""
    return arm1.total_delay_slope - arm2.total_delay_slope


__all__ = [
    "AsymptoticValidityWarning",
    "DispersiveElement",
    "DispersionBudget",
    "GratingPair",
    "ZERO_BUDGET",
    "combine",
    "element_from_config",
    "width_per_gdd",
    "fiber",
    "fiber_gdd_from_measured_width",
    "grating_element",
    "grating_pair_gdd",
    "relative_delay_slope",
    "total_gdd",
    "treacy_grating_gdd",
    "vacuum",
]
