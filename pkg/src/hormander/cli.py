"""Command-line front end.

Exit codes: 0 success, 1 usage or input error, 2 analysis-level failure.
"""
from __future__ import annotations

import argparse
import csv
import io as _stdio
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import io as hio
from . import xlab
from .errors import EvaluationError, HormanderError, InvalidInput, NumericalFailure, PreconditionError
from .expr import from_json
from .grid import GridDistribution, hormander_norm, quotient_norm
from .param import (DEFAULT_CAP, DEFAULT_DENSITY, check_weight_condition, matuszewska_indices,
                    pseudoconcavity_test, psi_from_phi, ro_membership)
from .spectral import norm_identity_check

MAX_GRID_POINTS = 1 << 22


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _positive_float(text):
    v = float(text)
    if not (math.isfinite(v) and v > 0):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--param", help="parameter expression: JSON file path or inline JSON")
    common.add_argument("--s0", type=float, default=None,
                        help="lower Sobolev order (analyze: default one below the certified s0)")
    common.add_argument("--s1", type=float, default=None,
                        help="upper Sobolev order (analyze: default one above the certified s1)")
    common.add_argument("--t-max", type=_positive_float, default=1e8)
    common.add_argument("--log-t-max", type=_positive_float, default=None,
                        help="upper end of the scan as log t (overrides --t-max)")
    common.add_argument("--density", type=int, default=DEFAULT_DENSITY,
                        help="grid points per decade of t (>= 8)")
    common.add_argument("--tol", type=_positive_float, default=1e-12)
    common.add_argument("--cap", type=_positive_float, default=DEFAULT_CAP)
    common.add_argument("--format", choices=("json", "csv"), default=None,
                        help="report format (default: csv for counterexample, json otherwise)")
    common.add_argument("--out", help="output file (directory for counterexample CSV tables)")
    common.add_argument("--seed", type=int, default=0)

    p = _Parser(prog="hormander", description="Hörmander-space and interpolation-parameter toolkit")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("analyze", parents=[common], help="RO, index, pseudoconcavity and weight analysis")
    norm = sub.add_parser("norm", parents=[common], help="grid norm of a distribution")
    norm.add_argument("--input", help="distribution file (binary container or .json)")
    norm.add_argument("--grid-n", type=int, default=1)
    norm.add_argument("--grid-N", type=int, default=64)
    norm.add_argument("--box-L", type=_positive_float, default=2 * math.pi)
    norm.add_argument("--mask", help="mask file (binary container or .json)")
    norm.add_argument("--identity-check", nargs=2, type=float, metavar=("S0", "S1"))
    ce = sub.add_parser("counterexample", parents=[common], help="oscillating counterexample tables")
    ce.add_argument("--k-max", type=int, default=5)
    return p


def _load_param(source):
    if source is None:
        raise InvalidInput("--param is required")
    path = Path(source)
    try:
        is_file = path.is_file()
    except OSError:
        is_file = False
    text = path.read_text(encoding="utf-8") if is_file else source
    return from_json(text)


def _config(args) -> dict:
    # the output location does not affect results and would break byte-identical reruns
    return {k: v for k, v in sorted(vars(args).items()) if k != "out"}


def _dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=True) + "\n"


def _csv_text(header, rows) -> str:
    buf = _stdio.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def _flatten(d, prefix=""):
    for k in sorted(d):
        v = d[k]
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            yield from _flatten(v, key + ".")
        elif isinstance(v, (list, tuple)):
            yield key, json.dumps(v)
        else:
            yield key, v


def _emit(text, out, stdout):
    if out:
        hio.atomic_write(out, text)
    else:
        stdout.write(text)


def cmd_analyze(args, stdout) -> int:
    phi = _load_param(args.param)
    kw = dict(t_max=args.t_max, log_t_max=args.log_t_max, density=args.density)
    ro = ro_membership(phi, cap=args.cap, **kw)
    # default orders put the certified exponents strictly inside (s0, s1)
    if args.s0 is None:
        args.s0 = math.floor(ro.s0) - 1.0
    if args.s1 is None:
        args.s1 = math.ceil(ro.s1) + 1.0
    if not args.s0 < args.s1:
        raise InvalidInput("need s0 < s1")
    est = matuszewska_indices(phi, **kw)
    d = args.s1 - args.s0
    x_hi = args.log_t_max if args.log_t_max is not None else math.log(args.t_max)
    pc = pseudoconcavity_test(psi_from_phi(phi, args.s0, args.s1), r=1.0, log_t_max=d * x_hi,
                              density=args.density, cap=args.cap)
    if ro.is_member:
        l, c = check_weight_condition(phi, report=ro, t_max=args.t_max, seed=args.seed)
        weight = {"l": l, "c": c}
    else:
        weight = None
    ok = ro.is_member and pc.passes
    report = {"config": _config(args), "ro": ro.to_dict(), "indices": est.to_dict(),
              "pseudoconcavity": pc.to_dict(), "weight_condition": weight,
              "status": "ok" if ok else "failed"}
    if args.format == "json":
        text = _dump_json(report)
    else:
        text = _csv_text(["key", "value"], _flatten(report))
    _emit(text, args.out, stdout)
    return 0 if ok else 2


def _input_distribution(args, rng):
    if args.input:
        return hio.load_grid(args.input)
    if not 1 <= args.grid_n <= 3:
        raise InvalidInput("--grid-n must be 1, 2 or 3")
    if args.grid_N < 2 or args.grid_N % 2:
        raise InvalidInput("--grid-N must be even")
    if args.grid_N ** args.grid_n > MAX_GRID_POINTS:
        raise InvalidInput(f"grid exceeds {MAX_GRID_POINTS} points")
    shape = (args.grid_N,) * args.grid_n
    return GridDistribution(rng.standard_normal(shape) + 1j * rng.standard_normal(shape),
                            (args.box_L,) * args.grid_n)


def cmd_norm(args, stdout) -> int:
    phi = _load_param(args.param)
    u = _input_distribution(args, np.random.default_rng(args.seed))
    if u.samples.size > MAX_GRID_POINTS:
        raise InvalidInput(f"grid exceeds {MAX_GRID_POINTS} points")
    report = {"config": _config(args), "shape": list(u.shape), "box_length": list(u.box_length)}
    if args.mask:
        mask = hio.load_mask(args.mask)
        value = quotient_norm(u, mask, phi)
        report["kind"] = "quotient"
    else:
        value = hormander_norm(u, phi)
        report["kind"] = "full"
    report["norm"] = value
    lines = [f"norm {value:.15g}"]
    code = 0
    if args.identity_check:
        s0, s1 = args.identity_check
        disc = norm_identity_check(u, phi, s0, s1)
        report["identity_discrepancy"] = disc
        lines.append(f"identity_discrepancy {disc:.15g}")
        if not disc <= args.tol:
            code = 2
    stdout.write("\n".join(lines) + "\n")
    if args.out:
        if args.format == "json":
            hio.atomic_write(args.out, _dump_json(report))
        else:
            hio.atomic_write(args.out, _csv_text(["key", "value"], _flatten(report)))
    return code


def cmd_counterexample(args, stdout) -> int:
    if args.k_max < 1:
        raise InvalidInput("--k-max must be at least 1")
    rows = xlab.non_interpolation_demo(args.k_max)
    prof = xlab.slow_variation_profile([1.25, 1.5, 2.0], [1e2, 1e3, 1e4, 1e5])
    checks = xlab.verify_invariants(args.k_max)
    wit = _csv_text(["k", "bound", "witness"], [(r.k, r.bound, r.witness) for r in rows])
    slow = _csv_text(["x", "lambda", "deviation"], prof.rows())
    if args.format == "json":
        doc = {"config": _config(args),
               "witnesses": [r.__dict__ for r in rows],
               "slow_variation": [dict(zip(("x", "lambda", "deviation"), r)) for r in prof.rows()],
               "invariants": [c.__dict__ for c in checks]}
        _emit(_dump_json(doc), args.out, stdout)
    elif args.out:
        out = Path(args.out)
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise InvalidInput(f"cannot create output directory {out}: {exc}") from exc
        hio.atomic_write(out / "witnesses.csv", wit)
        hio.atomic_write(out / "slow_variation.csv", slow)
    else:
        stdout.write(wit + "\n" + slow)
    failed = [c for c in checks if not c.ok]
    for c in failed:
        sys.stderr.write(f"invariant failed: {c.name}: {c.detail}\n")
    return 2 if failed else 0


COMMANDS = {"analyze": cmd_analyze, "norm": cmd_norm, "counterexample": cmd_counterexample}


def main(argv=None, stdout=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    try:
        args = build_parser().parse_args(argv)
        if args.format is None:
            args.format = "csv" if args.command == "counterexample" else "json"
        if args.density < 8:
            raise InvalidInput("--density must be at least 8 points per decade")
        return COMMANDS[args.command](args, stdout)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return 1
    except (InvalidInput, EvaluationError, PreconditionError) as exc:
        sys.stderr.write(f"input error: {exc}\n")
        return 1
    except OSError as exc:
        sys.stderr.write(f"input error: {exc}\n")
        return 1
    except (NumericalFailure, HormanderError) as exc:
        sys.stderr.write(f"analysis failure: {exc}\n")
        return 2
    except Exception as exc:  # never surface a traceback
        sys.stderr.write(f"analysis failure: {type(exc).__name__}: {exc}\n")
        return 2


def entry():
    sys.exit(main())
