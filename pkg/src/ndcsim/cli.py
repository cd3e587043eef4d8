"""Command-line front end.

Exit codes: 0 success, 1 a numeric check failed, 2 invalid input.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings

from . import dispersion, spectral
from .dispersion import AsymptoticValidityWarning
from .reproduce import TARGETS, reproduce
from .scenario import ScenarioError, load_scenario, run_scenario

EXIT_OK, EXIT_MISMATCH, EXIT_INPUT = 0, 1, 2


def _common(parser):
    parser.add_argument("--out-dir", default="ndcsim_out", help="output directory (default: %(default)s)")
    parser.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    parser.add_argument("--grid-points", type=int, default=None, help="override detuning and delay grid size (power of two)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ndcsim", description="Nonlocal dispersion cancellation simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a JSON scenario file")
    p_run.add_argument("file")
    _common(p_run)

    p_rep = sub.add_parser("reproduce", help="run a canned reproduction target")
    p_rep.add_argument("target", choices=TARGETS + ("all",))
    _common(p_rep)

    p_gdd = sub.add_parser("gdd", help="dispersion calculators")
    gsub = p_gdd.add_subparsers(dest="calc", required=True)
    p_gr = gsub.add_parser("grating", help="GDD of a grating pair")
    p_gr.add_argument("--lambda", dest="wavelength", type=float, required=True, help="wavelength (m)")
    p_gr.add_argument("--d", type=float, required=True, help="groove spacing (m)")
    p_gr.add_argument("--G", type=float, required=True, help="grating separation (m)")
    p_gr.add_argument("--theta", type=float, required=True, help="diffracted angle (deg)")
    p_gr.add_argument("--passes", type=int, default=2, choices=(1, 2))

    p_fw = gsub.add_parser("fiber-from-width", help="fiber GDD from a broadened biphoton FWHM")
    p_fw.add_argument("--fwhm", type=float, required=True, help="broadened FWHM (s)")
    p_fw.add_argument("--dl", type=float, default=8.89e-14, help="crystal D*L (s)")
    p_fw.add_argument("--gamma", type=float, default=0.04822, help="Gaussian matching constant")
    p_fw.add_argument("--irf", type=float, default=0.0, help="IRF FWHM removed in quadrature first (s)")
    return parser


def _kv(pairs) -> str:
    return "\n".join(f"{k}={v!r}" if isinstance(v, float) else f"{k}={v}" for k, v in pairs)


def _grid_ok(n):
    return n is None or (n >= 256 and n & (n - 1) == 0)


def cmd_run(args) -> int:
    if not _grid_ok(args.grid_points):
        print(json.dumps({"errors": ["--grid-points must be a power of two >= 256"]}), file=sys.stderr)
        return EXIT_INPUT
    try:
        sc = load_scenario(args.file)
    except ScenarioError as exc:
        print(json.dumps({"errors": exc.errors}, indent=2), file=sys.stderr)
        return EXIT_INPUT
    result = run_scenario(sc, args.seed, args.grid_points)
    out = result.write(args.out_dir)
    for key, check in sorted(result.check_results.items()):
        print(f"{'PASS' if check['passed'] else 'FAIL'} {key}: value={check['value']!r}")
    print(f"wrote {len(result.files) + 1} files to {out}")
    return EXIT_OK if result.passed else EXIT_MISMATCH


def cmd_reproduce(args) -> int:
    if not _grid_ok(args.grid_points):
        print(json.dumps({"errors": ["--grid-points must be a power of two >= 256"]}), file=sys.stderr)
        return EXIT_INPUT
    ok = True
    for report in reproduce(args.target, args.seed, args.grid_points):
        report.write(args.out_dir)
        print(report.text(), end="")
        ok &= report.passed
    return EXIT_OK if ok else EXIT_MISMATCH


def cmd_gdd(args) -> int:
    try:
        if args.calc == "grating":
            gp = dispersion.GratingPair(args.d, args.G, math.radians(args.theta), args.passes)
            gdd = dispersion.grating_pair_gdd(gp, args.wavelength)
            treacy = dispersion.treacy_grating_gdd(gp, args.wavelength)
            print(_kv([("gdd_s2", gdd), ("sqrt_abs_gdd_s", math.sqrt(-gdd)), ("passes", args.passes),
                       ("treacy_gdd_s2", treacy)]))
            return EXIT_OK
        width = args.fwhm
        if args.irf > 0:
            if not width > args.irf:
                raise ValueError("FWHM must exceed the IRF width")
            width = math.sqrt(width**2 - args.irf**2)
        pm = spectral.PhaseMatching(1.0, args.dl, 1.0, 1.0)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", AsymptoticValidityWarning)
            gdd = dispersion.fiber_gdd_from_measured_width(width, pm, args.gamma)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        print(_kv([("deconvolved_fwhm_s", width), ("gdd_s2", gdd), ("sqrt_gdd_s", math.sqrt(gdd))]))
        return EXIT_OK
    except ValueError as exc:
        print(json.dumps({"errors": [str(exc)]}), file=sys.stderr)
        return EXIT_INPUT


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    handlers = {"run": cmd_run, "reproduce": cmd_reproduce, "gdd": cmd_gdd}
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
