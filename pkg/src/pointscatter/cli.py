"""Command-line interface.

Subcommands: forward, recover, recover-source, zeros, counterexample, grid.
Data files never carry timestamps; reports start with a short metadata
header unless ``--no-meta`` is given.

Exit status: 0 success, 1 input or numerical error, 2 usage error,
3 no field zero found, 4 recovery incomplete (max-terms or undetermined
strength).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import __version__
from . import io as pio
from .errors import NoZeroFoundError, ScatterError, UndeterminedStrengthError
from .forward import (
    amplitude_oracle,
    diagonal_shift,
    green,
    scattering_amplitude,
    solve_charges,
)
from .invisible import (
    add_invisible_scatterer,
    closed_form_invisible_example,
    find_field_zero,
    fitted_pair,
)
from .model import FarFieldOracle, check_on_shell, sphere_directions
from .recover import recover_potential, recover_source

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NO_ZERO = 3
EXIT_INCOMPLETE = 4


class _Report:
    def __init__(self, meta: bool, command: str):
        self.lines = []
        if meta:
            self.lines.append(f"# pointscatter {__version__} numpy {np.__version__}")
            self.lines.append(f"# command: {command}")

    def add(self, text=""):
        self.lines.append(text)

    def emit(self, path=None):
        text = "\n".join(self.lines) + "\n"
        if path:
            with open(path, "w", newline="\n") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)


def _floats(text):
    try:
        return np.array([float(v) for v in text.replace(",", " ").split()])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _complex(text):
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a complex number like 1+2j, got {text!r}")


def _cx(z):
    return [float(np.real(z)), float(np.imag(z))]


def _write_json(path, obj):
    text = json.dumps(obj, indent=2) + "\n"
    if path:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _incident(pf, override):
    """Incident vector from the command line or the potential file."""
    k = override if override is not None else pf.k
    if k is None:
        raise ScatterError("no incident vector: give --k or store 'k' in the potential file")
    kappa = pf.kappa if pf.kappa is not None else float(np.linalg.norm(k))
    return kappa, check_on_shell(np.asarray(k, dtype=float), kappa, "incident vector --k")


# ---------------------------------------------------------------------------
# subcommands


def cmd_forward(args):
    pf = pio.read_potential(args.input)
    kappa, k = _incident(pf, args.k)
    if args.l:
        ls = np.array(args.l, dtype=float)
        for i, row in enumerate(ls):
            check_on_shell(row, kappa, f"--l row {i}:")
    else:
        ls = sphere_directions(pf.potential.d, kappa, args.count)
    s = solve_charges(pf.potential, kappa, k)
    f, fp = scattering_amplitude(s, ls)
    out = {
        "kappa": kappa,
        "k": [float(v) for v in k],
        "q": [_cx(v) for v in s.q],
        "rows": [
            {"l": [float(v) for v in l], "f": _cx(a), "f_plus": _cx(b)}
            for l, a, b in zip(ls, np.atleast_1d(f), np.atleast_1d(fp))
        ],
    }
    _write_json(args.output, out)
    return EXIT_OK


def _recover_oracles(args):
    """Main ``k``, its oracle, a probe-oracle callable and probe list."""
    if args.self_test:
        pf = pio.read_potential(args.input)
        kappa, k = _incident(pf, args.k)
        p = pf.potential

        def oracle(kv):
            return amplitude_oracle(solve_charges(p, kappa, kv))

        return p, kappa, k, oracle, None
    ds = pio.read_dataset(args.input)
    if ds.k is None:
        raise ScatterError(f"{args.input}: dataset needs the incident vector 'k'")
    table = [(ds.k, ds.terms)] + list(ds.probes)
    if len(table) == 1:
        return None, ds.kappa, ds.k, FarFieldOracle(ds.terms), None

    def oracle(kv):
        for kp, es in table:
            if np.allclose(kp, kv, rtol=0, atol=1e-12 * ds.kappa):
                return FarFieldOracle(es)
        raise ScatterError(f"no far-field data for incident vector {list(kv)}")

    return None, ds.kappa, ds.k, oracle, [kp for kp, _ in ds.probes]


def _match_error(truth, rec):
    if truth.n != rec.n:
        return float("inf"), float("inf")
    dp = da = 0.0
    for s in truth.scatterers:
        dist = np.linalg.norm(rec.positions - np.asarray(s.y), axis=1)
        i = int(np.argmin(dist))
        dp = max(dp, float(dist[i]))
        da = max(da, abs(rec.alphas[i] - s.alpha))
    return dp, da


def cmd_recover(args):
    truth, kappa, k, oracle, probes = _recover_oracles(args)
    report = _Report(not args.no_meta, "recover" + (" --self-test" if args.self_test else ""))
    try:
        rec = recover_potential(
            oracle, kappa, k, probe_ks=probes, max_terms=args.max_terms, tol=args.tol
        )
    except UndeterminedStrengthError as exc:
        report.add(f"status: undetermined-strength {list(exc.indices)}")
        report.add(f"message: {exc}")
        report.emit(args.report)
        return EXIT_INCOMPLETE
    if args.output:
        pio.write_potential(args.output, rec.potential, kappa, k)
    status = "ok"
    if any(r.termination == "max-terms" for r in rec.reports):
        status = "max-terms"
    report.add(f"status: {status}")
    report.add(f"scatterers: {rec.potential.n}")
    report.add(f"probes used: {len(rec.probes_used)}")
    for i, (kv, r) in enumerate(zip(rec.probes_used, rec.reports)):
        report.add(
            f"probe {i}: k={[round(float(v), 15) for v in kv]} terms={r.terms.n} "
            f"iterations={r.iterations} termination={r.termination} residual={r.residual:.3e}"
        )
    for j, s in enumerate(rec.potential.scatterers):
        report.add(
            f"scatterer {j}: y={list(s.y)} alpha={_cx(s.alpha)} "
            f"q={_cx(rec.charges[j])} foldy-lax residual={rec.diagnostics[j]:.3e}"
        )
    if truth is not None:
        dp, da = _match_error(truth, rec.potential)
        report.add(f"self-test: max position error {dp:.3e}, max strength error {da:.3e}")
        if not (dp <= 1e-6 and da <= 1e-5):
            status = "self-test-failed"
            report.add("status: self-test-failed")
    report.emit(args.report)
    return EXIT_OK if status == "ok" else EXIT_INCOMPLETE


def cmd_recover_source(args):
    ds = pio.read_dataset(args.input)
    sources, rep = recover_source(
        FarFieldOracle(ds.terms), ds.kappa, max_terms=args.max_terms, tol=args.tol, full_output=True
    )
    _write_json(args.output, pio.sources_to_dict(sources, ds.d, ds.kappa))
    report = _Report(not args.no_meta, "recover-source")
    report.add(f"termination: {rep.termination}")
    report.add(f"iterations: {rep.iterations}")
    report.add(f"residual: {rep.residual:.3e}")
    if args.report or args.output:
        report.emit(args.report)
    return EXIT_INCOMPLETE if rep.termination == "max-terms" else EXIT_OK


def cmd_zeros(args):
    pf = pio.read_potential(args.input)
    kappa, k = _incident(pf, args.k)
    box = np.asarray(args.box, dtype=float).reshape(pf.potential.d, 2)
    lines = ["x1,x2,residual" if pf.potential.d == 2 else "x1,x2,x3,residual"]
    try:
        zeros = find_field_zero(pf.potential, kappa, k, box, grid_n=args.grid_n)
    except NoZeroFoundError as exc:
        zeros = []
        logging.getLogger(__name__).info("%s", exc)
    for z in zeros:
        lines.append(",".join("%.12g" % v for v in list(z.point) + [z.residual]))
    text = "\n".join(lines) + "\n"
    if args.output:
        with open(args.output, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if zeros else EXIT_NO_ZERO


def cmd_counterexample(args):
    report = _Report(not args.no_meta, f"counterexample --mode {args.mode}")
    if args.mode == "fit":
        d = args.dimension
        k = args.k if args.k is not None else args.kappa * np.eye(d)[0]
        y2 = args.y2 if args.y2 is not None else np.eye(d)[1]
        alpha1 = green(d, y2, args.kappa) - diagonal_shift(d, args.kappa)
        a2 = args.alpha2 if args.alpha2 is not None else alpha1 + 1
        a2t = args.alpha2_tilde if args.alpha2_tilde is not None else alpha1 + 2
        pair = fitted_pair(d, args.kappa, k, y2, a2, a2t)
    else:
        if args.input:
            pf = pio.read_potential(args.input)
            kappa, k = _incident(pf, args.k)
            p = pf.potential
            if args.box is None:
                raise ScatterError("--box is required to search for a zero of the field")
            zeros = find_field_zero(p, kappa, k, np.reshape(args.box, (p.d, 2)), args.grid_n)
            if not zeros:
                raise NoZeroFoundError("no zero of the total field in the box")
            zero = zeros[0]
        else:
            p, zero, k = closed_form_invisible_example(args.dimension, args.kappa)
            kappa = args.kappa
        pair = add_invisible_scatterer(p, kappa, k, zero, alpha_new=args.alpha_new)
    prefix = args.output or "counterexample"
    pio.write_potential(prefix + "_nu.json", pair.nu, pair.kappa, pair.k)
    pio.write_potential(prefix + "_nu_tilde.json", pair.nu_tilde, pair.kappa, pair.k)
    report.add(f"mode: {args.mode}")
    report.add(f"kappa: {pair.kappa!r}")
    report.add(f"k: {[float(v) for v in pair.k]}")
    report.add(f"scatterers: {pair.nu.n} / {pair.nu_tilde.n}")
    report.add(f"max |f+ - f~+| over {64} directions: {pair.certificate:.3e}")
    report.add(f"max |f+|: {pair.amplitude_scale:.6e}")
    report.add(f"certificate ok: {pair.within_tolerance(1e-10)}")
    report.emit(args.report)
    return EXIT_OK


def cmd_grid(args):
    pf = pio.read_potential(args.input)
    kappa, k = _incident(pf, args.k)
    rows = pio.field_grid(pf.potential, kappa, k, args.box, args.nx, args.ny)
    if not args.output:
        raise ScatterError("grid needs --output")
    pio.write_grid_csv(args.output, rows)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="input file (potential or dataset JSON)")
    common.add_argument("--output", help="output file (stdout when omitted)")
    common.add_argument("--tol", type=float, default=1e-9, help="recovery tolerance")
    common.add_argument("--max-terms", type=int, default=16)
    common.add_argument("--no-meta", action="store_true", help="omit report metadata header")
    common.add_argument("--report", help="write the text report here instead of stdout")
    common.add_argument("--k", type=_floats, help="incident vector, e.g. 0.05,0.05")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="pointscatter", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"pointscatter {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("forward", parents=[common], help="charges and amplitudes")
    p.add_argument("--l", type=_floats, action="append", help="observation vector (repeatable)")
    p.add_argument("--count", type=int, default=8, help="equispaced l when --l is absent")
    p.set_defaults(func=cmd_forward)

    p = sub.add_parser("recover", parents=[common], help="inverse scattering")
    p.add_argument(
        "--self-test",
        action="store_true",
        help="--input is a generating potential; invert its amplitudes and compare",
    )
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("recover-source", parents=[common], help="inverse source problem")
    p.set_defaults(func=cmd_recover_source)

    p = sub.add_parser("zeros", parents=[common], help="zeros of the total field")
    p.add_argument("--box", type=float, nargs="+", required=True, help="x1min x1max x2min x2max")
    p.add_argument("--grid-n", type=int, default=200)
    p.set_defaults(func=cmd_zeros)

    p = sub.add_parser("counterexample", parents=[common], help="equal-amplitude pairs")
    p.add_argument("--mode", choices=("fit", "invisible"), required=True)
    p.add_argument("--dimension", type=int, default=2, choices=(2, 3))
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--y2", type=_floats)
    p.add_argument("--alpha2", type=_complex)
    p.add_argument("--alpha2-tilde", type=_complex)
    p.add_argument("--alpha-new", type=_complex, default=1.0)
    p.add_argument("--box", type=float, nargs="+")
    p.add_argument("--grid-n", type=int, default=200)
    p.set_defaults(func=cmd_counterexample)

    p = sub.add_parser("grid", parents=[common], help="psi+ on a lattice (CSV)")
    p.add_argument("--box", type=float, nargs=4, required=True, help="x1min x1max x2min x2max")
    p.add_argument("--nx", type=int, default=400)
    p.add_argument("--ny", type=int, default=400)
    p.set_defaults(func=cmd_grid)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (ScatterError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
