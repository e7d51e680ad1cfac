"""Command-line front end.

Subcommands: ``segment``, ``compare``, ``certify``, ``generate`` and
``counterexample``.  Exit codes: 0 on success, 2 for malformed input or
parameters, 3 when a solver hits a capacity limit.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from . import __version__
from .certificate import certify
from .counterexample2d import summary
from .energy import EnergyParams
from .signal import (
    GridSignal,
    SignalError,
    generate,
    normalize_to_unit,
    parse_generator,
    read_signal,
    to_csv,
    to_json,
)
from .solver_exact import (
    DEFAULT_LEVELS,
    CapacityError,
    SegmentationResult,
    brute_force,
    refine_alternating,
    solve_exact,
    solve_piecewise_constant,
)
from .solver_gd import GdOptions, _binarize, _initial_u, solve_gd

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CAPACITY = 3

SCHEMA_KEYS = ("signal_digest", "params", "result", "duration_ms")


class UsageError(Exception):
    pass


def signal_digest(f: GridSignal) -> str:
    return hashlib.sha256(np.ascontiguousarray(f.values, dtype="<f8").tobytes()).hexdigest()


@dataclass
class RunRecord:
    signal_digest: str
    params: dict
    result: dict
    certificate: dict | None = None
    duration_ms: float = 0.0

    def to_dict(self) -> dict:
        out = {"signal_digest": self.signal_digest, "params": self.params, "result": self.result}
        if self.certificate is not None:
            out["certificate"] = self.certificate
        out["duration_ms"] = self.duration_ms
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "RunRecord":
        missing = [k for k in ("signal_digest", "params", "result") if k not in d]
        if missing:
            raise UsageError(f"run record missing keys: {', '.join(missing)}")
        res = d["result"]
        for key in ("u", "c1", "c2", "energy", "level", "method"):
            if key not in res:
                raise UsageError(f"run record result missing {key!r}")
        return cls(d["signal_digest"], d["params"], res, d.get("certificate"),
                   float(d.get("duration_ms", 0.0)))


# ---------------------------------------------------------------- helpers

def _load_signal(args) -> tuple[GridSignal, str]:
    if bool(args.input) == bool(args.generate):
        raise UsageError("exactly one of --input or --generate is required")
    if args.input:
        f = read_signal(args.input)
        source = args.input
    else:
        f = generate(parse_generator(args.generate), args.n)
        source = args.generate
    if args.normalize:
        f = normalize_to_unit(f)
    elif not f.is_unit():
        raise UsageError("signal values fall outside [0, 1]; drop --no-normalize")
    return f, source


def _params(args) -> EnergyParams:
    try:
        return EnergyParams(args.lam, args.epsilon)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _gd_options(args) -> GdOptions:
    try:
        return GdOptions(max_outer=args.max_outer, max_inner=args.max_inner,
                         base_rate=args.rate, smoothing=args.smoothing,
                         seed=args.seed, tol=args.tol)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _run_method(method: str, f: GridSignal, p: EnergyParams, args) -> SegmentationResult:
    if method == "exact":
        return solve_exact(f, p, K=args.levels, threads=args.threads)
    if method == "pwc":
        return solve_piecewise_constant(f, p, tol=args.jump_tol)
    if method == "dp":
        return refine_alternating(f, p, _binarize(_initial_u(f, 0)))
    if method == "gd":
        return solve_gd(f, p, _gd_options(args))
    if method == "brute":
        return brute_force(f, p)
    raise UsageError(f"unknown method {method!r}")


def _record(method: str, f: GridSignal, source: str, p: EnergyParams, args,
            attach_certificate: bool) -> tuple[RunRecord, SegmentationResult]:
    t0 = time.perf_counter()
    res = _run_method(method, f, p, args)
    elapsed = (time.perf_counter() - t0) * 1e3
    params = {
        "lambda": p.lam,
        "epsilon": p.epsilon,
        "levels": args.levels,
        "method": method,
        "n": f.n,
        "normalize": bool(args.normalize),
        "jump_tol": args.jump_tol,
        "source": source,
    }
    if method == "gd":
        params["gd"] = asdict(_gd_options(args))
    cert = certify(res, f, p).to_dict() if attach_certificate else None
    rec = RunRecord(signal_digest(f), params, res.to_dict(), cert,
                    0.0 if args.no_meta else round(elapsed, 3))
    return rec, res


def _emit(obj: dict, out: str | None):
    text = json.dumps(obj, indent=2, sort_keys=False) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def write_plot(path: str, f: GridSignal, res: SegmentationResult):
    """Step curves: two rows per cell at its left and right edges."""
    uv = res.u.values()
    fit = np.where(uv == 1.0, res.c1, res.c2)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "f", "u", "c1", "c2", "fit"])
        c1, c2 = repr(float(res.c1)), repr(float(res.c2))
        for i in range(f.n):
            row = [repr(float(f.values[i])), int(uv[i]), c1, c2, repr(float(fit[i]))]
            for x in (i / f.n, (i + 1) / f.n):
                w.writerow([repr(x), *row])


# ---------------------------------------------------------------- commands

def cmd_segment(args) -> int:
    f, source = _load_signal(args)
    p = _params(args)
    rec, res = _record(args.method, f, source, p, args, args.certify)
    if args.plot:
        write_plot(args.plot, f, res)
    _emit(rec.to_dict(), args.out)
    return EXIT_OK


def cmd_compare(args) -> int:
    f, source = _load_signal(args)
    p = _params(args)
    exact, r_exact = _record("exact", f, source, p, args, args.certify)
    gd, r_gd = _record("gd", f, source, p, args, args.certify)
    _emit({"exact": exact.to_dict(), "gd": gd.to_dict(),
           "gap": r_gd.energy - r_exact.energy}, args.out)
    return EXIT_OK


def cmd_certify(args) -> int:
    try:
        with open(args.record, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read run record: {exc}") from None
    rec = RunRecord.from_dict(raw)
    if "normalize" in rec.params:
        args.normalize = bool(rec.params["normalize"])
    f, _ = _load_signal(args)
    if signal_digest(f) != rec.signal_digest:
        raise UsageError("signal digest does not match the run record")
    lam = rec.params.get("lambda")
    if lam is None:
        raise UsageError("run record has no lambda")
    p = EnergyParams(float(lam), float(rec.params.get("epsilon", 0.1)))
    try:
        res = SegmentationResult.from_dict(rec.result, f.n)
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"malformed result: {exc}") from None
    report = certify(res, f, p).to_dict()
    report["signal_digest"] = rec.signal_digest
    _emit(report, args.out)
    return EXIT_OK


def cmd_generate(args) -> int:
    f = generate(parse_generator(args.spec), args.n)
    text = to_json(f) + "\n" if (args.out or "").lower().endswith(".json") else to_csv(f)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _parse_lambda(text: str):
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"invalid lambda {text!r}") from None
    return value


def cmd_counterexample(args) -> int:
    try:
        data = summary(args.lam, args.delta)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _emit(data, args.out)
    return EXIT_OK


# ---------------------------------------------------------------- parser

def _add_signal_args(sp):
    sp.add_argument("--input", help="signal file (.csv one value per line, or .json)")
    sp.add_argument("--generate", help="generator spec, e.g. pwc:5:seed=7 or weierstrass:a=0.5:b=3:terms=8")
    sp.add_argument("--n", type=int, default=256, help="cell count for --generate")
    sp.add_argument("--normalize", dest="normalize", action="store_true", default=True)
    sp.add_argument("--no-normalize", dest="normalize", action="store_false")


def _add_solver_args(sp, lam_required=True):
    sp.add_argument("--lambda", dest="lam", type=float, required=lam_required)
    sp.add_argument("--epsilon", type=float, default=0.1)
    sp.add_argument("--levels", type=int, default=DEFAULT_LEVELS)
    sp.add_argument("--jump-tol", type=float, default=0.0)
    sp.add_argument("--threads", type=int, default=None,
                    help="level-scan workers (default: TVSEG_THREADS or all cores)")
    sp.add_argument("--certify", action="store_true", help="attach a certificate report")
    sp.add_argument("--no-meta", action="store_true", help="zero the timing field for reproducible output")
    sp.add_argument("--out")
    g = sp.add_argument_group("gradient descent")
    g.add_argument("--max-outer", type=int, default=50)
    g.add_argument("--max-inner", type=int, default=200)
    g.add_argument("--rate", type=float, default=0.1)
    g.add_argument("--smoothing", type=float, default=1e-3)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--tol", type=float, default=1e-10)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tvseg", description="Exact 1-D two-phase Chan-Vese segmentation.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("segment", help="segment a signal")
    _add_signal_args(sp)
    _add_solver_args(sp)
    sp.add_argument("--method", choices=["exact", "pwc", "dp", "gd", "brute"], default="exact")
    sp.add_argument("--plot", help="write step curves of f, u and the fit to this CSV")
    sp.set_defaults(func=cmd_segment)

    sp = sub.add_parser("compare", help="run the exact and gradient-descent solvers side by side")
    _add_signal_args(sp)
    _add_solver_args(sp)
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("certify", help="check the optimality system for a run record")
    _add_signal_args(sp)
    sp.add_argument("--record", required=True, help="RunRecord JSON written by segment")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_certify)

    sp = sub.add_parser("generate", help="write a synthetic signal")
    sp.add_argument("spec")
    sp.add_argument("--n", type=int, default=256)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_generate)

    sp = sub.add_parser("counterexample", help="closed-form energies of the 2-D square example")
    sp.add_argument("--lambda", dest="lam", type=_parse_lambda, required=True)
    sp.add_argument("--delta", type=float, default=0.05)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_counterexample)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except CapacityError as exc:
        print(f"tvseg: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (UsageError, SignalError, ValueError, OSError) as exc:
        print(f"tvseg: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
