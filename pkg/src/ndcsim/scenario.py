"""Scenario files: parsing, validation and execution.

A scenario is a JSON document whose numeric fields carry their SI unit in the
key name (``_m``, ``_s``, ``_s2``, ``_rad_s``, ``_deg``). Nothing is inferred;
every default that influences a number is echoed into the run manifest.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from . import classical, dispersion, measurement, quantum, spectral
from .dispersion import DispersionBudget, DispersiveElement

OUTPUT_KINDS = ("g2", "tcspc", "slices", "classical", "mixture")
CANNED = ("fig3a", "fig3b", "fig4a", "fig4b", "fig6", "table_derived")


class ScenarioError(ValueError):
    """Scenario failed validation; ``errors`` lists every problem found."""

    def __init__(self, errors):
        super().__init__("; ".join(errors))
        self.errors = list(errors)


@dataclass
class Scenario:
    name: str
    source: dict
    arm1: list
    arm2: list
    irf: dict = field(default_factory=lambda: {"fwhm_s": 0.0})
    clipping: dict | None = None
    grid: dict = field(default_factory=dict)
    outputs: list = field(default_factory=lambda: ["g2"])
    slices: dict | None = None
    tcspc: dict | None = None
    classical: dict | None = None
    mixture: dict | None = None
    checks: dict = field(default_factory=dict)
    attribution: bool = False
    seed: int = 0
    notes: dict = field(default_factory=dict)

    # -- derived objects -------------------------------------------------

    @property
    def grid_points(self) -> int:
        return int(self.grid.get("points", 2**14))

    @property
    def pump(self) -> spectral.PumpSpec:
        return spectral.PumpSpec(float(self.source["pump_wavelength_m"]))

    @property
    def phase_matching(self) -> spectral.PhaseMatching:
        src = self.source
        return spectral.PhaseMatching.from_dl(
            float(src["dl_s"]), float(src["crystal_length_m"]), self.pump, float(src["signal_wavelength_m"])
        )

    @property
    def gamma(self) -> float:
        value = self.source.get("gamma", "matched")
        return spectral.match_gamma() if value == "matched" else float(value)

    def build_jsa(self) -> spectral.JointSpectralAmplitude:
        pm, model = self.phase_matching, self.source.get("model", "gaussian")
        factor = float(self.grid.get("span_factor", 8.0))
        if model == "gaussian":
            width = spectral.gaussian_amplitude_fwhm(pm, self.gamma)
            return spectral.gaussian_jsa(pm, self.gamma, spectral.DetuningGrid.covering(width, self.grid_points, factor))
        width = spectral.sinc_amplitude_fwhm(pm)
        return spectral.sinc_jsa(pm, spectral.DetuningGrid.covering(width, self.grid_points, factor))

    def elements(self, arm: int) -> list[DispersiveElement]:
        cfgs = self.arm1 if arm == 1 else self.arm2
        return [dispersion.element_from_config(c, self.phase_matching, self.gamma) for c in cfgs]

    def budget(self, arm: int) -> DispersionBudget:
        return dispersion.combine(self.elements(arm))

    def instrument_response(self) -> measurement.InstrumentResponse:
        return measurement.InstrumentResponse(float(self.irf.get("fwhm_s", 0.0)))

    def center_of_arm(self, arm: int) -> float:
        pm = self.phase_matching
        return pm.center_signal if arm == 1 else pm.center_idler


def _require(d, key, errors, where, kind=float, positive=False):
    if key not in d:
        errors.append(f"{where}: missing '{key}'")
        return None
    try:
        value = kind(d[key])
    except (TypeError, ValueError):
        errors.append(f"{where}: '{key}' must be a {kind.__name__}")
        return None
    if isinstance(value, float) and not math.isfinite(value):
        errors.append(f"{where}: '{key}' must be finite")
        return None
    if positive and not value > 0:
        errors.append(f"{where}: '{key}' must be positive")
    return value


def parse_scenario(data: Any) -> Scenario:
    """Validate a decoded scenario document and build a Scenario.

    Raises:
        ScenarioError: listing every validation failure, not just the first.
    """
    errors: list[str] = []
    if not isinstance(data, dict):
        raise ScenarioError(["scenario must be a JSON object"])
    known = set(Scenario.__dataclass_fields__)
    for key in data:
        if key not in known:
            errors.append(f"unknown top-level key '{key}'")
    if not isinstance(data.get("name"), str):
        errors.append("'name' must be a string")

    src = data.get("source")
    if not isinstance(src, dict):
        errors.append("'source' must be an object")
        src = {}
    else:
        for key in ("dl_s", "crystal_length_m", "pump_wavelength_m", "signal_wavelength_m"):
            _require(src, key, errors, "source", positive=True)
        if src.get("model", "gaussian") not in ("gaussian", "sinc"):
            errors.append("source: 'model' must be 'gaussian' or 'sinc'")
        gamma = src.get("gamma", "matched")
        if gamma != "matched":
            _require(src, "gamma", errors, "source", positive=True)
        pump, sig = src.get("pump_wavelength_m"), src.get("signal_wavelength_m")
        if isinstance(pump, (int, float)) and isinstance(sig, (int, float)) and sig <= pump:
            errors.append("source: signal wavelength must exceed the pump wavelength")

    for arm in ("arm1", "arm2"):
        items = data.get(arm, [])
        if not isinstance(items, list):
            errors.append(f"'{arm}' must be a list of elements")
            continue
        for i, cfg in enumerate(items):
            where = f"{arm}[{i}]"
            if not isinstance(cfg, dict):
                errors.append(f"{where}: element must be an object")
                continue
            kind = cfg.get("kind")
            if kind not in dispersion.ELEMENT_KINDS:
                errors.append(f"{where}: unknown kind {kind!r}")
            elif kind == "fiber" and not ("gdd_s2" in cfg or "measured_fwhm_s" in cfg):
                errors.append(f"{where}: fiber needs 'gdd_s2' or 'measured_fwhm_s'")
            elif kind == "grating_pair" and "gdd_s2" not in cfg:
                for key in ("groove_spacing_m", "separation_m", "diffracted_angle_deg", "wavelength_m"):
                    _require(cfg, key, errors, where)
                if cfg.get("passes", 2) not in (1, 2):
                    errors.append(f"{where}: 'passes' must be 1 or 2")

    irf = data.get("irf", {"fwhm_s": 0.0})
    if not isinstance(irf, dict) or not isinstance(irf.get("fwhm_s", 0.0), (int, float)) or irf.get("fwhm_s", 0.0) < 0:
        errors.append("irf: 'fwhm_s' must be a non-negative number")

    grid = data.get("grid", {})
    if not isinstance(grid, dict):
        errors.append("'grid' must be an object")
    else:
        n = grid.get("points", 2**14)
        if not isinstance(n, int) or n < 256 or n & (n - 1):
            errors.append("grid: 'points' must be a power of two >= 256")
        if "span_factor" in grid:
            factor = _require(grid, "span_factor", errors, "grid", positive=True)
            if factor is not None and factor < 8:
                errors.append("grid: 'span_factor' must be at least 8")

    outputs = data.get("outputs", ["g2"])
    if not isinstance(outputs, list) or any(o not in OUTPUT_KINDS for o in outputs):
        errors.append(f"'outputs' must be a list drawn from {OUTPUT_KINDS}")
        outputs = []

    clip = data.get("clipping")
    if clip is not None:
        if not isinstance(clip, dict):
            errors.append("'clipping' must be an object")
        else:
            _require(clip, "center_wavelength_m", errors, "clipping", positive=True)
            if ("passband_fwhm_m" in clip) == ("fit_target_fwhm_s" in clip):
                errors.append("clipping: give exactly one of 'passband_fwhm_m' or 'fit_target_fwhm_s'")
            if clip.get("arm", 2) not in (1, 2):
                errors.append("clipping: 'arm' must be 1 or 2")

    section_keys = {
        "slices": ("wavelengths_m", "passband_fwhm_m"),
        "tcspc": ("total_counts", "bin_width_s"),
        "classical": ("pulse_bandwidth_rad_s",),
        "mixture": ("detuning_step_rad_s", "max_index", "envelope_sigma_rad_s", "pulse_bandwidth_rad_s", "gdd_s2"),
    }
    for section, keys in section_keys.items():
        cfg = data.get(section)
        if section in outputs and not isinstance(cfg, dict):
            errors.append(f"output '{section}' requested but the '{section}' section is missing")
            continue
        if isinstance(cfg, dict):
            for key in keys:
                if key == "wavelengths_m":
                    wl = cfg.get(key)
                    if not (isinstance(wl, list) and wl and all(isinstance(x, (int, float)) and x > 0 for x in wl)):
                        errors.append(f"{section}: '{key}' must be a non-empty list of positive numbers")
                elif key in ("total_counts", "max_index"):
                    _require(cfg, key, errors, section, kind=int, positive=True)
                else:
                    _require(cfg, key, errors, section, positive=True)

    seed = data.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        errors.append("'seed' must be a non-negative integer")

    checks = data.get("checks", {})
    if not isinstance(checks, dict):
        errors.append("'checks' must be an object")
    if not isinstance(data.get("attribution", False), bool):
        errors.append("'attribution' must be true or false")

    if errors:
        raise ScenarioError(errors)
    scenario = Scenario(
        name=data["name"],
        source=src,
        arm1=data.get("arm1", []),
        arm2=data.get("arm2", []),
        irf=irf,
        clipping=clip,
        grid=grid,
        outputs=outputs,
        slices=data.get("slices"),
        tcspc=data.get("tcspc"),
        classical=data.get("classical"),
        mixture=data.get("mixture"),
        checks=checks,
        attribution=data.get("attribution", False),
        seed=seed,
        notes=data.get("notes", {}),
    )
    # building the physics objects catches range errors the schema check cannot
    try:
        scenario.build_jsa()
        scenario.budget(1)
        scenario.budget(2)
        scenario.instrument_response()
    except (ValueError, KeyError) as exc:
        raise ScenarioError([f"invalid physical parameters: {exc}"]) from exc
    return scenario


def load_scenario(path) -> Scenario:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ScenarioError([f"cannot read {path}: {exc}"]) from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError([f"{path} is not valid JSON: {exc}"]) from exc
    return parse_scenario(data)


def canned_path(name: str):
    return resources.files("ndcsim") / "scenarios" / f"{name}.json"


def load_canned(name: str) -> Scenario:
    return parse_scenario(json.loads(canned_path(name).read_text()))


def load_canned_raw(name: str) -> dict:
    return json.loads(canned_path(name).read_text())


# -- execution -------------------------------------------------------------


@dataclass
class RunResult:
    scenario: Scenario
    derived: dict
    files: dict = field(default_factory=dict)  # file name -> text
    check_results: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r["passed"] for r in self.check_results.values())

    def manifest(self) -> dict:
        sc = self.scenario
        return {
            "name": sc.name,
            "inputs": {
                "source": sc.source,
                "arm1": sc.arm1,
                "arm2": sc.arm2,
                "irf": sc.irf,
                "clipping": sc.clipping,
                "grid": {"points": sc.grid_points, "span_factor": float(sc.grid.get("span_factor", 8.0))},
                "outputs": sc.outputs,
                "slices": sc.slices,
                "tcspc": sc.tcspc,
                "classical": sc.classical,
                "mixture": sc.mixture,
                "checks": sc.checks,
                "attribution": sc.attribution,
                "seed": sc.seed,
                "notes": sc.notes,
            },
            "derived": self.derived,
            "checks": self.check_results,
            "files": sorted(self.files),
        }

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, text in self.files.items():
            (out / name).write_text(text)
        (out / "manifest.json").write_text(json.dumps(self.manifest(), indent=2, sort_keys=True) + "\n")
        return out


def _element_rows(elements):
    return [{"name": e.name, "gdd_s2": e.gdd, "delay_slope_s": e.group_delay_slope} for e in elements]


def _slices_csv(peaks) -> str:
    lines = ["wavelength_m,peak_delay_s,fwhm_s,energy_fraction,excluded"]
    for p in peaks:
        fwhm = p.fit.fwhm if p.fit is not None else math.nan
        lines.append(f"{p.wavelength!r},{p.peak_delay!r},{fwhm!r},{p.energy_fraction!r},{str(p.excluded).lower()}")
    return "\n".join(lines) + "\n"


def _evaluate_checks(checks: dict, derived: dict) -> dict:
    results = {}
    for key, spec in checks.items():
        value = derived.get(key)
        if value is None or not isinstance(value, (int, float)):
            results[key] = {"passed": False, "value": None, "reason": "quantity not produced"}
            continue
        ok = True
        if "target" in spec:
            ok = abs(value - spec["target"]) <= spec.get("rel_tol", 0.0) * abs(spec["target"])
        if "min" in spec:
            ok = ok and value >= spec["min"]
        if "max" in spec:
            ok = ok and value <= spec["max"]
        results[key] = {"passed": bool(ok), "value": float(value), **spec}
    return results


def run_scenario(sc: Scenario, seed: int | None = None, grid_points: int | None = None) -> RunResult:
    """Execute every requested output of ``sc``; nothing is written to disk."""
    if grid_points is not None:
        sc.grid = {**sc.grid, "points": int(grid_points)}
    if seed is not None:
        sc.seed = int(seed)
    pm, gamma = sc.phase_matching, sc.gamma
    jsa = sc.build_jsa()
    el1, el2 = sc.elements(1), sc.elements(2)
    arm1, arm2 = dispersion.combine(el1), dispersion.combine(el2)
    irf = sc.instrument_response()
    gdd_sum = dispersion.total_gdd(arm1, arm2)
    points = sc.grid_points

    derived: dict[str, Any] = {
        "gamma": gamma,
        "dl_s": pm.dl,
        "gamma_dl2_s2": gamma * pm.dl**2,
        "idler_center_wavelength_m": 2 * math.pi * spectral.C_LIGHT / pm.center_idler,
        "arm1_elements": _element_rows(el1),
        "arm2_elements": _element_rows(el2),
        "arm1_gdd_s2": arm1.total_gdd,
        "arm2_gdd_s2": arm2.total_gdd,
        "total_gdd_s2": gdd_sum,
        "arm1_delay_slope_s": arm1.total_delay_slope,
        "arm2_delay_slope_s": arm2.total_delay_slope,
        "irf_fwhm_s": irf.fwhm,
        "detuning_grid_points": points,
        "detuning_grid_half_span_rad_s": jsa.grid.half_span,
    }
    if sc.source.get("model", "gaussian") == "gaussian":
        closed = quantum.g2_closed_form(pm, gamma, arm1, arm2)
        law = quantum.fwhm_broadened(pm, gamma, gdd_sum)
        derived.update(
            predicted_fwhm_closed_form_s=closed.fwhm,
            predicted_peak_delay_s=closed.peak_delay,
            predicted_fwhm_width_law_s=law.fwhm,
            predicted_fwhm_width_law_branch=law.branch,
            predicted_measured_fwhm_s=math.hypot(closed.fwhm, irf.fwhm),
        )

    setup = measurement.MeasurementSetup(jsa, arm1, arm2, irf, sc.center_of_arm(2), 2)
    delays = setup.delay_samples(points)
    setup = measurement.MeasurementSetup(jsa, arm1, arm2, irf, sc.center_of_arm(2), 2, delays)
    derived["delay_grid_half_span_s"] = 0.5 * (delays[-1] - delays[0])

    if sc.clipping is not None:
        clip = sc.clipping
        arm = int(clip.get("arm", 2))
        shape = clip.get("shape", "gaussian")
        if "fit_target_fwhm_s" in clip:
            window = measurement.fit_clipping_window(
                setup, float(clip["fit_target_fwhm_s"]), float(clip["center_wavelength_m"]), arm, shape, points
            )
        else:
            window = measurement.SpectralFilter(float(clip["center_wavelength_m"]), float(clip["passband_fwhm_m"]), shape)
        derived["clipping_passband_fwhm_m"] = window.passband_fwhm
        derived["clipping_detuning_fwhm_rad_s"] = window.detuning_fwhm()
        clipped = measurement.clip_bandwidth(jsa, window, sc.center_of_arm(arm), arm)
        derived["clipping_energy_fraction"] = clipped.energy() / jsa.energy()
        jsa_used = clipped
    else:
        jsa_used = jsa

    files: dict[str, str] = {}
    if "g2" in sc.outputs or "tcspc" in sc.outputs:
        g2 = quantum.g2_numeric(jsa_used, arm1, arm2, delays)
        measured = measurement.convolve_irf(g2, irf)
        fit = measurement.fit_gaussian_fwhm(measured)
        derived.update(numeric_fwhm_s=g2.fwhm(), measured_fwhm_s=measured.fwhm(), fitted_fwhm_s=fit.fwhm, fitted_center_s=fit.center)
        if "g2" in sc.outputs:
            files["g2.csv"] = g2.to_csv()
            files["g2_peak_one.csv"] = g2.peak_one().to_csv()
            files["measured.csv"] = measured.to_csv()
            files["fit.txt"] = fit.to_report()
        if "tcspc" in sc.outputs:
            hist = measurement.simulate_tcspc(measured, int(sc.tcspc["total_counts"]), float(sc.tcspc["bin_width_s"]), sc.seed)
            hfit = measurement.fit_gaussian_fwhm(hist)
            files["tcspc.csv"] = hist.to_csv()
            files["tcspc_fit.txt"] = hfit.to_report()
            derived.update(tcspc_fitted_fwhm_s=hfit.fwhm, tcspc_fit_uncertainty_s=hfit.uncertainty, tcspc_total_counts=int(hist.counts.sum()))

        if sc.attribution and sc.source.get("model", "gaussian") == "gaussian":
            # split the narrowing into the part due to arm-2 GDD and the remainder
            no_arm2 = DispersionBudget(arm2.total_delay_slope, 0.0)
            ref_g2 = quantum.g2_numeric(jsa, arm1, no_arm2, delays)
            unclipped = quantum.g2_numeric(jsa, arm1, arm2, delays)
            ref_measured = measurement.fit_gaussian_fwhm(measurement.convolve_irf(ref_g2, irf)).fwhm
            derived.update(
                ndc_share_width_law_s=quantum.ndc_reduction(pm, gamma, arm2.total_gdd),
                width_without_arm2_gdd_s=ref_g2.fwhm(),
                width_with_arm2_gdd_unclipped_s=unclipped.fwhm(),
                predicted_width_drop_s=ref_g2.fwhm() - unclipped.fwhm(),
                measured_reference_fwhm_s=ref_measured,
                total_measured_reduction_s=ref_measured - fit.fwhm,
            )
            derived["clipping_share_s"] = derived["total_measured_reduction_s"] - derived["ndc_share_width_law_s"]

    if "slices" in sc.outputs:
        cfg = sc.slices
        arm = int(cfg.get("arm", 2))
        slice_setup = measurement.MeasurementSetup(jsa_used, arm1, arm2, irf, sc.center_of_arm(arm), arm, delays)
        peaks = measurement.slice_peak_spacing(
            slice_setup, cfg["wavelengths_m"], float(cfg["passband_fwhm_m"]), cfg.get("shape", "gaussian"), points
        )
        files["slices.csv"] = _slices_csv(peaks)
        derived["slice_peaks"] = [
            {"wavelength_m": p.wavelength, "peak_delay_s": None if p.excluded else p.peak_delay,
             "predicted_delay_s": measurement.predicted_slice_delay(slice_setup, p.wavelength),
             "energy_fraction": p.energy_fraction, "excluded": p.excluded}
            for p in peaks
        ]
        kept = [p for p in peaks if not p.excluded]
        if len(kept) >= 2:
            nu = [spectral.wavelength_to_detuning(p.wavelength, sc.center_of_arm(arm)) for p in kept]
            slope = np.polyfit(nu, [p.peak_delay for p in kept], 1)[0]
            derived["slice_delay_slope_s2"] = float(slope)
            derived["slice_outer_spacing_s"] = abs(kept[0].peak_delay - kept[-1].peak_delay)

    if "classical" in sc.outputs:
        s0 = float(sc.classical["pulse_bandwidth_rad_s"])
        pulse = classical.PulseSpec(s0)
        width = classical.classical_fwhm(s0, arm1.total_gdd, arm2.total_gdd)
        tau = quantum.delay_grid(4.0 * width.fwhm, int(sc.classical.get("points", 4096)),
                                 center=arm2.total_delay_slope - arm1.total_delay_slope)
        res = classical.classical_joint_probability(pulse, pulse, arm1, arm2, tau)
        files["classical_analytic.csv"] = res.analytic.to_csv()
        files["classical_numeric.csv"] = res.numeric.to_csv()
        derived.update(
            classical_fwhm_s=res.analytic.fwhm(),
            classical_numeric_fwhm_s=res.numeric.fwhm(),
            classical_width_law_s=width.fwhm,
            classical_width_law_branch=width.branch,
        )

    if "mixture" in sc.outputs:
        cfg = sc.mixture
        spec = classical.MixtureSpec(
            center=sc.center_of_arm(1),
            detuning_step=float(cfg["detuning_step_rad_s"]),
            max_index=int(cfg["max_index"]),
            envelope_sigma=float(cfg["envelope_sigma_rad_s"]),
            pulse_bandwidth=float(cfg["pulse_bandwidth_rad_s"]),
        )
        gdd = float(cfg["gdd_s2"])
        spread = classical.mixture_case_widths(spec, gdd)
        budgets = classical.case_budgets(gdd)
        widest = max(
            math.hypot(2.0 * abs(b1.total_gdd + b2.total_gdd) * spec.envelope_sigma,
                       classical.dispersed_sigma(spec.pulse_bandwidth, b1.total_gdd) * math.sqrt(2))
            for b1, b2 in budgets.values()
        )
        tau = quantum.delay_grid(8.0 * widest, int(cfg.get("points", 4096)))
        hist = {}
        for case, (b1, b2) in budgets.items():
            h = classical.mixture_histogram(spec, b1, b2, tau)
            hist[case] = h
            files[f"mixture_{case}.csv"] = h.correlation.to_csv()
        derived["mixture_peak_spread_s"] = {"plus_plus": spread.plus_plus, "plus_zero": spread.plus_zero, "plus_minus": spread.plus_minus}
        derived["mixture_envelope_fwhm_s"] = {k: h.fwhm for k, h in hist.items()}
        derived["mixture_pair_fwhm_s"] = {k: h.pair_fwhm for k, h in hist.items()}
        derived["mixture_ordering_holds"] = spread.ordered()
        derived["mixture_grid_step_s"] = float(tau[1] - tau[0])

    result = RunResult(sc, derived, files)
    result.check_results = _evaluate_checks(sc.checks, derived)
    return result
