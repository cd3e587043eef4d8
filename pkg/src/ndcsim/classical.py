"""Classical baselines: dispersed pulse pairs and anticorrelated pulse-pair mixtures.

Two transform-limited Gaussian pulses of bandwidth sigma0 each broaden
independently; their coincidence width grows with sqrt(B1^2 + B2^2), so a
negative GDD on one side cannot undo a positive GDD on the other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dispersion import DispersionBudget
from .quantum import ASYMPTOTIC_RATIO, BroadenedWidth, CorrelationFunction
from .spectral import FWHM_PER_SIGMA


@dataclass(frozen=True)
class PulseSpec:
    """Gaussian pulse with field spectrum exp(-nu^2 / 2 sigma0^2).

    Attributes:
        bandwidth: sigma0 in rad/s.
        amplitude: field scale E0 (arbitrary units).
        center: carrier angular frequency (rad/s); carried for bookkeeping only.
    """

    bandwidth: float
    amplitude: float = 1.0
    center: float = 0.0

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ValueError("pulse bandwidth must be positive")


def dispersed_sigma(sigma0: float, gdd: float) -> float:
    """Temporal rms width of the intensity after GDD ``gdd``."""
    return math.sqrt(2.0 * sigma0**2 * (1.0 / (4.0 * sigma0**4) + gdd**2))


def dispersed_intensity(pulse: PulseSpec, arm: DispersionBudget, t):
    """Intensity |E(z, t)|^2 of a dispersed pulse.

    Returns:
        (intensity, sigma) where intensity is sampled on ``t`` and sigma is
        the rms width of the Gaussian intensity envelope.
    """
    s0 = pulse.bandwidth
    gdd = arm.total_gdd
    sigma = dispersed_sigma(s0, gdd)
    mod_a2 = math.sqrt(1.0 / (4.0 * s0**4) + gdd**2)
    t = np.asarray(t, dtype=float)
    intensity = pulse.amplitude**2 / (4.0 * math.pi * mod_a2) * np.exp(
        -((arm.total_delay_slope - t) ** 2) / (2.0 * sigma**2)
    )
    return intensity, sigma


@dataclass(frozen=True)
class ClassicalCoincidence:
    analytic: CorrelationFunction
    numeric: CorrelationFunction
    fwhm_difference: float  # |analytic - numeric| FWHM, seconds


def _overlap(narrow, wide, c_narrow, s_narrow, tau, sign):
    """int narrow(u) wide(u - sign*tau) du by trapezoid over the narrow pulse's support."""
    u = c_narrow + s_narrow * np.linspace(-12.0, 12.0, 1201)
    du = u[1] - u[0]
    w_narrow = narrow(u) * du
    w_narrow[[0, -1]] *= 0.5
    out = np.empty(tau.size)
    for start in range(0, tau.size, 512):
        shift = sign * tau[start : start + 512, None]
        out[start : start + 512] = wide(u[None, :] - shift) @ w_narrow
    return out


def classical_joint_probability(
    p1: PulseSpec,
    p2: PulseSpec,
    arm1: DispersionBudget,
    arm2: DispersionBudget,
    tau,
) -> ClassicalCoincidence:
    """Coincidence distribution P(tau) = int dt1 I1(t1) I2(t1 + tau).

    The analytic result is a Gaussian centred at alpha2 z2 - alpha1 z1 with
    variance sigma1^2 + sigma2^2; the numeric one integrates the two sampled
    intensities directly. The detection efficiency is absorbed into the scale.
    """
    tau = np.asarray(tau, dtype=float)

    def i1(t):
        return dispersed_intensity(p1, arm1, t)[0]

    def i2(t):
        return dispersed_intensity(p2, arm2, t)[0]

    s1 = dispersed_sigma(p1.bandwidth, arm1.total_gdd)
    s2 = dispersed_sigma(p2.bandwidth, arm2.total_gdd)
    c1, c2 = arm1.total_delay_slope, arm2.total_delay_slope
    var = s1**2 + s2**2
    peak = i1(np.array([c1]))[0] * i2(np.array([c2]))[0] * math.sqrt(2.0 * math.pi * s1**2 * s2**2 / var)
    analytic = peak * np.exp(-((tau - (c2 - c1)) ** 2) / (2.0 * var))

    if s2 <= s1:
        # substitute u = t1 + tau so the integral runs over pulse 2's support
        numeric = _overlap(i2, i1, c2, s2, tau, +1.0)
    else:
        numeric = _overlap(i1, i2, c1, s1, tau, -1.0)
    analytic_cf = CorrelationFunction(tau, analytic)
    numeric_cf = CorrelationFunction(tau, np.clip(numeric, 0.0, None))
    return ClassicalCoincidence(analytic_cf, numeric_cf, abs(analytic_cf.fwhm() - numeric_cf.fwhm()))


def classical_fwhm(sigma0: float, gdd1: float, gdd2: float) -> BroadenedWidth:
    """Coincidence FWHM of two independently dispersed pulses.

    In the large-dispersion regime this is 4 sqrt(ln2) sigma0 sqrt(B1^2 + B2^2);
    otherwise the full total variance 2 sigma0^2 (1/2 sigma0^4 + B1^2 + B2^2) is used.
    """
    squares = gdd1**2 + gdd2**2
    floor = 1.0 / (2.0 * sigma0**4)
    if squares >= ASYMPTOTIC_RATIO**2 * floor:
        return BroadenedWidth(4.0 * math.sqrt(math.log(2.0)) * sigma0 * math.sqrt(squares), "asymptotic")
    return BroadenedWidth(FWHM_PER_SIGMA * math.sqrt(2.0 * sigma0**2 * (floor + squares)), "exact")


@dataclass(frozen=True)
class MixtureSpec:
    """Frequency-anticorrelated mixture of classical pulse pairs.

    Pair m has pulse 1 at center + m*detuning_step and pulse 2 at
    center - m*detuning_step, for m in [-max_index, max_index], weighted by a
    Gaussian filter envelope exp(-(m nu)^2 / 2 envelope_sigma^2).
    """

    center: float
    detuning_step: float
    max_index: int
    envelope_sigma: float
    pulse_bandwidth: float

    def __post_init__(self):
        if not self.detuning_step > 0:
            raise ValueError("detuning_step must be positive")
        if self.max_index < 1:
            raise ValueError("max_index must be at least 1")
        if not (self.envelope_sigma > 0 and self.pulse_bandwidth > 0):
            raise ValueError("envelope_sigma and pulse_bandwidth must be positive")

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-self.max_index, self.max_index + 1)

    def weights(self) -> np.ndarray:
        return np.exp(-((self.indices * self.detuning_step) ** 2) / (2.0 * self.envelope_sigma**2))


def mixture_peak_delay(spec: MixtureSpec, m, arm1: DispersionBudget, arm2: DispersionBudget):
    """Relative group delay z1/v1(Omega + m nu) - z2/v2(Omega - m nu).

    Group delays follow from the quadratic wavenumber model,
    z/v(Omega + d) = alpha z + 2 beta z d.
    """
    m = np.asarray(m, dtype=float)
    delta = m * spec.detuning_step
    delay1 = arm1.total_delay_slope + 2.0 * arm1.total_gdd * delta
    delay2 = arm2.total_delay_slope - 2.0 * arm2.total_gdd * delta
    out = delay1 - delay2
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class MixtureCaseWidths:
    plus_plus: float
    plus_zero: float
    plus_minus: float

    def ordered(self) -> bool:
        return self.plus_plus > self.plus_zero > self.plus_minus


def case_budgets(gdd: float):
    """Arm budgets for the (+b, +b), (+b, 0) and (+b, -b) configurations."""
    plus = DispersionBudget(0.0, gdd)
    return {
        "plus_plus": (plus, DispersionBudget(0.0, gdd)),
        "plus_zero": (plus, DispersionBudget(0.0, 0.0)),
        "plus_minus": (plus, DispersionBudget(0.0, -gdd)),
    }


def mixture_case_widths(spec: MixtureSpec, gdd: float) -> MixtureCaseWidths:
    """Peak spread tau_{+1} - tau_0 for the three dispersion cases."""
    widths = {}
    for case, (arm1, arm2) in case_budgets(gdd).items():
        widths[case] = mixture_peak_delay(spec, 1, arm1, arm2) - mixture_peak_delay(spec, 0, arm1, arm2)
    return MixtureCaseWidths(**widths)


@dataclass(frozen=True)
class MixtureHistogram:
    correlation: CorrelationFunction
    fwhm: float
    pair_fwhm: float  # single-pair coincidence FWHM (exact)


def mixture_histogram(spec: MixtureSpec, arm1: DispersionBudget, arm2: DispersionBudget, tau) -> MixtureHistogram:
    tau = np.asarray(tau, dtype=float)
    s0 = spec.pulse_bandwidth
    var = dispersed_sigma(s0, arm1.total_gdd) ** 2 + dispersed_sigma(s0, arm2.total_gdd) ** 2
    centers = mixture_peak_delay(spec, spec.indices, arm1, arm2)
    weights = spec.weights()
    values = np.zeros(tau.size)
    for c, w in zip(centers, weights):
        values += w * np.exp(-((tau - c) ** 2) / (2.0 * var))
    corr = CorrelationFunction(tau, values)
    pair = FWHM_PER_SIGMA * math.sqrt(var)
    return MixtureHistogram(corr, corr.fwhm(), pair)
