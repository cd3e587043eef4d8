"""Two-photon correlation G2(t1 - t2) of the frequency-anticorrelated biphoton.

The central quantity is

    G2(tau) = | int dnu S(nu) exp(i nu tau) exp(i a nu) exp(i B nu^2) |^2,

with a = alpha1 z1 - alpha2 z2 and B = beta1 z1 + beta2 z2. Only the sum of
the two arms' GDDs enters, which is what allows one arm to undo the other.

Two evaluation routes are provided. ``direct`` is the discretised sum over the
detuning grid; it requires the quadratic phase to be resolved on that grid,
which for nanosecond broadening would need millions of samples. ``fresnel``
first forms the transform-limited temporal amplitude a0(t) and then applies
the exact Fresnel kernel of the quadratic phase,

    A(tau) = sqrt(pi/|B|) e^{i sgn(B) pi/4} e^{-i tau^2/4B}
             int dt a0(t) e^{-i t^2/4B} e^{i tau t/2B},

which is well sampled precisely when B is large. ``auto`` picks whichever
route satisfies its sampling criterion.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy.signal import czt

from .dispersion import DispersionBudget, relative_delay_slope, total_gdd, width_per_gdd
from .spectral import FWHM_PER_SIGMA, DetuningGrid, JointSpectralAmplitude, PhaseMatching

# amplitude below this fraction of the maximum is treated as outside the support
SUPPORT_THRESHOLD = 1e-8
MAX_PHASE_STEP = math.pi / 4
# |B| above this multiple of gamma D^2 L^2 uses the linear width law
ASYMPTOTIC_RATIO = 100.0


class UndersampledGridError(ValueError):
    """The detuning grid cannot resolve the spectral phase for the requested budget."""

    def __init__(self, message, min_points):
        super().__init__(f"{message}; at least {min_points} grid points required")
        self.min_points = min_points


def fwhm_of_samples(x, y) -> float:
    """Full width at half maximum of a sampled single-peaked curve.

    Walks outward from the maximum to the first samples below half height on
    each side and interpolates linearly between the bracketing samples.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    i_peak = int(np.argmax(y))
    half = 0.5 * y[i_peak]
    if not half > 0:
        raise ValueError("curve has no positive maximum")
    below = y < half
    left = np.nonzero(below[:i_peak])[0]
    right = np.nonzero(below[i_peak:])[0]
    if left.size == 0 or right.size == 0:
        raise ValueError("curve does not drop to half maximum inside the sampled range")
    i = left[-1]
    x_left = x[i] + (half - y[i]) * (x[i + 1] - x[i]) / (y[i + 1] - y[i])
    j = i_peak + right[0]
    x_right = x[j - 1] + (half - y[j - 1]) * (x[j] - x[j - 1]) / (y[j] - y[j - 1])
    return float(x_right - x_left)


def _check_uniform(x, what):
    if x.ndim != 1 or x.size < 2:
        raise ValueError(f"{what} must be a 1-d array with at least two samples")
    steps = np.diff(x)
    step = (x[-1] - x[0]) / (x.size - 1)
    if not step > 0 or np.max(np.abs(steps - step)) > 1e-6 * step:
        raise ValueError(f"{what} must be uniform and strictly increasing")
    return step


def delay_grid(half_span, points=2**14, center=0.0) -> np.ndarray:
    """Uniform delay samples covering center +/- half_span."""
    return center + np.linspace(-half_span, half_span, points)


@dataclass(frozen=True)
class CorrelationFunction:
    delays: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    normalization_tag: str = "unnormalized"

    def __post_init__(self):
        delays = np.array(self.delays, dtype=float)
        values = np.array(self.values, dtype=float)
        if delays.shape != values.shape:
            raise ValueError("delays and values must have the same shape")
        _check_uniform(delays, "delays")
        if not np.all(np.isfinite(values)):
            raise ValueError("correlation values must be finite")
        if np.any(values < 0):
            raise ValueError("correlation values must be non-negative")
        if self.normalization_tag not in ("unnormalized", "peak_one"):
            raise ValueError(f"unknown normalization tag {self.normalization_tag!r}")
        delays.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "delays", delays)
        object.__setattr__(self, "values", values)

    @property
    def step(self) -> float:
        return (self.delays[-1] - self.delays[0]) / (self.delays.size - 1)

    @property
    def peak_delay(self) -> float:
        """Delay of the largest sample."""
        return float(self.delays[np.argmax(self.values)])

    def fwhm(self) -> float:
        return fwhm_of_samples(self.delays, self.values)

    def mass(self) -> float:
        return float(np.sum(self.values) * self.step)

    def peak_one(self) -> CorrelationFunction:
        peak = self.values.max()
        if not peak > 0:
            raise ValueError("cannot peak-normalise an all-zero curve")
        return CorrelationFunction(self.delays, self.values / peak, "peak_one")

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        buf.write("tau_s,value\n")
        for t, v in zip(self.delays.tolist(), self.values.tolist()):
            buf.write(f"{t!r},{v!r}\n")
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, path) -> CorrelationFunction:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 0], data[:, 1])


@dataclass(frozen=True)
class ClosedFormG2:
    """Gaussian G2 = C exp(-(tau - peak_delay)^2 / 2 sigma^2)."""

    peak_delay: float
    sigma: float
    amplitude: float

    def __post_init__(self):
        if not (self.sigma > 0 and self.amplitude > 0):
            raise ValueError("sigma and amplitude must be positive")

    @property
    def fwhm(self) -> float:
        return FWHM_PER_SIGMA * self.sigma

    def evaluate(self, delays) -> np.ndarray:
        d = np.asarray(delays, dtype=float) - self.peak_delay
        return self.amplitude * np.exp(-(d**2) / (2.0 * self.sigma**2))


def _uniform_phase_sum(values, x0, dx, k0, dk, m):
    """sum_n values[n] exp(i (x0 + n dx)(k0 + j dk)) for j = 0..m-1, via chirp-z."""
    a = np.exp(-1j * dx * k0)
    w = np.exp(1j * dx * dk)
    out = czt(np.asarray(values, dtype=complex), m=m, w=w, a=a)
    return out * np.exp(1j * x0 * (k0 + dk * np.arange(m)))


def _support_extent(x, amplitude) -> float:
    mag = np.abs(amplitude)
    keep = mag >= SUPPORT_THRESHOLD * mag.max()
    return float(np.max(np.abs(x[keep])))


def _next_pow2(n) -> int:
    return 1 << max(8, int(math.ceil(math.log2(max(n, 1)))))


def expected_fwhm(jsa: JointSpectralAmplitude, gdd_sum: float) -> float:
    """Gaussian-equivalent width estimate used to validate delay grids."""
    sigma_nu = jsa.intensity_fwhm() / FWHM_PER_SIGMA
    sigma_t = 1.0 / (2.0 * sigma_nu)
    return FWHM_PER_SIGMA * math.hypot(sigma_t, 2.0 * gdd_sum * sigma_nu)


def _direct_check(jsa, gdd_sum, shifted):
    grid = jsa.grid
    nu_sig = _support_extent(jsa.nu, jsa.values)
    dnu = grid.spacing
    step = abs(gdd_sum) * (2.0 * nu_sig * dnu + dnu**2)
    problems = []
    if step >= MAX_PHASE_STEP:
        need = 16.0 * abs(gdd_sum) * nu_sig * grid.half_span / math.pi
        problems.append(("quadratic phase step %.3g rad exceeds pi/4" % step, _next_pow2(need * 1.05)))
    if np.max(np.abs(shifted)) >= math.pi / dnu:
        need = 2.0 * grid.half_span * np.max(np.abs(shifted)) / math.pi
        problems.append(("delays exceed the alias-free range of the detuning grid", _next_pow2(need * 1.05)))
    return problems


def _time_amplitude(jsa):
    """Transform-limited amplitude a0(t) = (1/2pi) int S(nu) e^{i nu t} dnu on the reciprocal grid."""
    grid = jsa.grid
    n = grid.point_count
    dt = 2.0 * math.pi / (n * grid.spacing)
    t0 = -(n // 2) * dt
    a0 = _uniform_phase_sum(jsa.values, grid.samples[0], grid.spacing, t0, dt, n) * grid.spacing / (2.0 * math.pi)
    t = t0 + dt * np.arange(n)
    return t, dt, a0


def _fresnel_check(jsa, gdd_sum, shifted, t, dt, a0):
    problems = []
    if gdd_sum == 0.0:
        return [("time-domain route needs a non-zero total GDD", jsa.grid.point_count)]
    t_sig = _support_extent(t, a0)
    step = (t_sig * dt + 0.5 * dt**2) / (2.0 * abs(gdd_sum))
    if step >= MAX_PHASE_STEP:
        problems.append(("time-domain chirp step %.3g rad exceeds pi/4" % step, None))
    if np.max(np.abs(shifted)) / (2.0 * abs(gdd_sum)) >= jsa.grid.half_span:
        problems.append(("delays map outside the detuning grid", None))
    return problems


def g2_numeric(
    jsa: JointSpectralAmplitude,
    arm1: DispersionBudget,
    arm2: DispersionBudget,
    delays,
    method: str = "auto",
) -> CorrelationFunction:
    """Evaluate G2 on a uniform delay grid by quadrature over the detuning grid.

    Args:
        jsa: biphoton amplitude on its detuning grid.
        arm1, arm2: dispersion budgets of photon 1 and photon 2.
        delays: uniform, increasing t1 - t2 samples (s).
        method: ``"direct"``, ``"fresnel"`` or ``"auto"``.

    Raises:
        UndersampledGridError: when no admissible route resolves the spectral
            phase; ``min_points`` gives the detuning grid size the direct route needs.
        ValueError: when the delay grid spans less than four expected widths.
    """
    delays = np.asarray(delays, dtype=float)
    d_tau = _check_uniform(delays, "delays")
    gdd_sum = total_gdd(arm1, arm2)
    shifted = delays + relative_delay_slope(arm1, arm2)

    width = expected_fwhm(jsa, gdd_sum)
    if delays[-1] - delays[0] < 4.0 * width * (1 - 1e-9):
        raise ValueError(
            f"delay grid spans {delays[-1] - delays[0]:.4g} s, below 4x the expected FWHM {width:.4g} s"
        )

    if method not in ("auto", "direct", "fresnel"):
        raise ValueError(f"unknown method {method!r}")

    direct_problems = _direct_check(jsa, gdd_sum, shifted) if method != "fresnel" else None
    if method == "direct" or (method == "auto" and not direct_problems):
        if direct_problems:
            msg, need = direct_problems[0]
            raise UndersampledGridError(msg, need)
        grid = jsa.grid
        weights = jsa.values * np.exp(1j * gdd_sum * grid.samples**2) * grid.spacing
        amp = _uniform_phase_sum(weights, grid.samples[0], grid.spacing, shifted[0], d_tau, delays.size)
        return CorrelationFunction(delays, np.abs(amp) ** 2)

    t, dt, a0 = _time_amplitude(jsa)
    fresnel_problems = _fresnel_check(jsa, gdd_sum, shifted, t, dt, a0)
    if fresnel_problems:
        if direct_problems is None:
            direct_problems = _direct_check(jsa, gdd_sum, shifted)
        need = max((p[1] for p in direct_problems if p[1]), default=jsa.grid.point_count)
        reasons = "; ".join(p[0] for p in fresnel_problems + (direct_problems or []))
        raise UndersampledGridError(reasons, need)

    weights = a0 * np.exp(-1j * t**2 / (4.0 * gdd_sum)) * dt
    inner = _uniform_phase_sum(weights, t[0], dt, shifted[0] / (2.0 * gdd_sum), d_tau / (2.0 * gdd_sum), delays.size)
    values = (math.pi / abs(gdd_sum)) * np.abs(inner) ** 2
    return CorrelationFunction(delays, values)


def g2_closed_form(
    pm: PhaseMatching, gamma: float, arm1: DispersionBudget, arm2: DispersionBudget
) -> ClosedFormG2:
    a = gamma * pm.dl**2
    b = total_gdd(arm1, arm2)
    return ClosedFormG2(
        peak_delay=arm2.total_delay_slope - arm1.total_delay_slope,
        sigma=math.sqrt(a + b**2 / a),
        amplitude=math.pi / math.sqrt(a**2 + b**2),
    )


class BroadenedWidth(NamedTuple):
    fwhm: float
    branch: str  # "asymptotic" or "exact"


def fwhm_broadened(pm: PhaseMatching, gamma: float, gdd_sum: float) -> BroadenedWidth:
    """Biphoton FWHM for total GDD ``gdd_sum``.

    Uses the linear law 2 sqrt(2 ln2 / gamma D^2 L^2) |B| once |B| exceeds
    100 gamma D^2 L^2 (relative error below 5e-5), else the exact Gaussian width.
    """
    a = gamma * pm.dl**2
    if abs(gdd_sum) >= ASYMPTOTIC_RATIO * a:
        return BroadenedWidth(width_per_gdd(pm, gamma) * abs(gdd_sum), "asymptotic")
    return BroadenedWidth(FWHM_PER_SIGMA * math.sqrt(a + gdd_sum**2 / a), "exact")


def ndc_reduction(pm: PhaseMatching, gamma: float, gdd2: float) -> float:
    """Width removed by GDD ``gdd2`` placed on the partner photon."""
    return width_per_gdd(pm, gamma) * abs(gdd2)


@dataclass(frozen=True)
class MixedStateResult:
    correlation: CorrelationFunction
    flatness: float


def g2_mixed_state(
    sigma: float,
    arm1: DispersionBudget,
    arm2: DispersionBudget,
    delays,
    grid: DetuningGrid | None = None,
) -> MixedStateResult:
    """G2 of the incoherent mixture of anticorrelated frequency pairs.

    Each pair |Omega1 + nu, Omega2 - nu> contributes its joint detection
    probability |<0|E2 E1|nu>|^2 weighted by f1(nu) f2(nu) = exp(-nu^2/sigma^2),
    normalised so the weights integrate to one. ``sigma = 0`` means a single
    frequency pair.
    """
    delays = np.asarray(delays, dtype=float)
    _check_uniform(delays, "delays")
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if sigma == 0:
        nu = np.zeros(1)
        weights = np.ones(1)
    else:
        if grid is None:
            grid = DetuningGrid(half_span=8.0 * sigma, point_count=2**10)
        nu = grid.samples
        weights = np.exp(-(nu**2) / sigma**2)
        weights /= weights.sum()
    alpha = relative_delay_slope(arm1, arm2)
    gdd_sum = total_gdd(arm1, arm2)
    values = np.empty(delays.size)
    for start in range(0, delays.size, 256):
        tau = delays[start : start + 256, None]
        phase = nu * (tau + alpha) + gdd_sum * nu**2
        values[start : start + 256] = (np.abs(np.exp(1j * phase)) ** 2) @ weights
    corr = CorrelationFunction(delays, values)
    flatness = float((values.max() - values.min()) / values.mean())
    return MixedStateResult(corr, flatness)
