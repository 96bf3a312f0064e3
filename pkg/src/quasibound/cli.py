"""Command-line front end.

Every subcommand builds a :class:`~quasibound.report.Report` and writes it
under ``--out``.  Exit status: 0 when every certificate passes, 1 when a
certificate fails or a computation error is recorded in the report, 2 on
bad input.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import gmpy2
from gmpy2 import mpfr

from ._mp import DEFAULT_PRECISION, to_decimal, to_mpfr, workprec
from .bestapprox import BUILTINS, TargetFunction, approx_sequence, beurling_partial_sum, certified_error, e_star
from .errors import PreconditionReport, QuasiboundError
from .flatbuild import DEFAULT_C1, DEFAULT_DEGREE_CAP, build_theorem_b, calibrate_c1
from .intervals import IntervalSet
from .lemmas import (
    SCAN_COLUMNS,
    comparison_check,
    ratios_increasing,
    spreading_check,
    theorem_a_scan,
)
from .polycore import Poly
from .report import Report, certificate_table, emit_report
from .sublevel import e_set, measure_sublevel, nadic_maximal_cover, poly_sublevel

COMMANDS = ("approx", "levelset", "spreading", "comparison", "theorem-a", "construct-b", "calibrate-c1", "sweep")
SWEEP_KINDS = ("markov", "remez", "spreading", "comparison", "claim")

PHI_CHOICES = {
    "inv_log": lambda t: 1.0 / math.log(t + 3.0),
    "inv_sqrt_log": lambda t: 1.0 / math.sqrt(math.log(t + 3.0)),
}
PSI_CHOICES = {
    "exp2": lambda t: math.exp(-2.0 * t),
    "exp3": lambda t: math.exp(-3.0 * t),
}


class InputError(Exception):
    """Bad user input; maps to exit status 2."""


@dataclass(frozen=True)
class RunConfig:
    precision_bits: int = DEFAULT_PRECISION
    tolerance: float = 1e-10
    seed: int = 0
    degree_cap: int = DEFAULT_DEGREE_CAP
    C1: float = DEFAULT_C1
    output_dir: str = "reports"
    format: str = "both"
    workers: int = 1

    def __post_init__(self):
        if int(self.precision_bits) < 64:
            raise InputError("precision_bits must be at least 64")
        if not float(self.tolerance) > 0:
            raise InputError("tolerance must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise InputError("seed must be a 64-bit unsigned integer")
        if self.format not in ("json", "csv", "both"):
            raise InputError("format must be json, csv or both")
        if int(self.workers) < 1:
            raise InputError("workers must be at least 1")


# config-file keys and flag names both map onto RunConfig fields
_KEY_ALIASES = {
    "precision": "precision_bits",
    "precision_bits": "precision_bits",
    "tol": "tolerance",
    "tolerance": "tolerance",
    "seed": "seed",
    "degree_cap": "degree_cap",
    "degree-cap": "degree_cap",
    "c1": "C1",
    "C1": "C1",
    "out": "output_dir",
    "output_dir": "output_dir",
    "format": "format",
    "workers": "workers",
}


def _convert(name, value):
    kinds = {f.name: f.type for f in fields(RunConfig)}
    kind = kinds[name]
    try:
        if kind == "int":
            return int(value)
        if kind == "float":
            return float(value)
    except ValueError as exc:
        raise InputError(f"bad value for {name}: {value!r}") from exc
    return str(value)


def read_config_file(path):
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{number}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _KEY_ALIASES:
            raise InputError(f"{path}:{number}: unknown key {key!r}")
        name = _KEY_ALIASES[key]
        out[name] = _convert(name, value)
    return out


def build_config(args):
    values = read_config_file(args.config) if args.config else {}
    flags = {
        "precision_bits": args.precision,
        "tolerance": args.tol,
        "seed": args.seed,
        "degree_cap": args.degree_cap,
        "C1": args.c1,
        "output_dir": args.out,
        "format": args.format,
        "workers": args.workers,
    }
    for name, value in flags.items():
        if value is not None:
            values[name] = _convert(name, value)
    return replace(RunConfig(), **values)


def load_json_arg(text):
    """Inline JSON, or the path of a JSON file."""
    text = text.strip()
    if text[:1] in "{[":
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"bad inline JSON: {exc}") from exc
    try:
        return json.loads(Path(text).read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputError(f"cannot read {text}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"bad JSON in {text}: {exc}") from exc


def parse_degrees(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise InputError(f"bad degree list {text!r}") from exc


def parse_target(text, bits):
    if text in BUILTINS:
        return TargetFunction.builtin(text, bits)
    if text == "lacunary":
        return default_lacunary(bits)
    doc = load_json_arg(text)
    try:
        if doc.get("kind") in ("builtin", "polynomial", "chebyshev_series"):
            doc.setdefault("precision_bits", bits)
            return TargetFunction.from_json(doc)
        doc.setdefault("precision_bits", bits)
        return TargetFunction.polynomial(Poly.from_json(doc))
    except (KeyError, ValueError, TypeError, AttributeError) as exc:
        raise InputError(f"cannot parse target: {exc}") from exc


def parse_poly(text, bits):
    doc = load_json_arg(text)
    if isinstance(doc, list):
        doc = {"basis": "chebyshev", "coefficients": doc}
    doc.setdefault("precision_bits", bits)
    try:
        return Poly.from_json(doc)
    except (KeyError, ValueError, TypeError) as exc:
        raise InputError(f"cannot parse polynomial: {exc}") from exc


def default_lacunary(bits, count=4):
    """``sum_{j < count} e^{-n_j} T_{n_j}`` with ``n_j = 2^(2^j)``."""
    with workprec(bits):
        terms = {2 ** (2**j): gmpy2.exp(-mpfr(2 ** (2**j))) for j in range(count)}
    return TargetFunction.lacunary(terms, bits)


# -- commands ------------------------------------------------------------------------

def cmd_approx(args, cfg):
    f = parse_target(args.target, cfg.precision_bits)
    degrees = parse_degrees(args.degrees)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        results = approx_sequence(f, degrees, cfg.tolerance)
    rows = []
    details = []
    ok = len(results) == len(degrees)
    for r in results:
        bound = certified_error(f, r) if args.certify else None
        alternates = _equioscillates(f, r)
        ok = ok and r.converged and alternates
        rows.append([r.n, r.error, e_star(r.error, r.n), r.lower_bound, r.iterations, r.converged, alternates])
        details.append(
            {
                "n": r.n,
                "E_n": r.error,
                "E_star_n": e_star(r.error, r.n),
                "lower_bound": r.lower_bound,
                "certified_upper": bound,
                "iterations": r.iterations,
                "converged": r.converged,
                "equioscillation": alternates,
                "alternation_points": list(r.alternation_points),
                "best_poly": r.best_poly.to_json(),
            }
        )
    doc = {"target": f.to_json(), "results": details, "warnings": [str(w.message) for w in caught], "pass": ok}
    header = ["n", "E_n", "E_star_n", "lower_bound", "iterations", "converged", "equioscillation"]
    return Report("approx", doc, {"errors": (header, rows)}), ok


def _equioscillates(f, r):
    if r.error == 0:
        return True
    pts = r.alternation_points
    vals = [r.residual(f, x) for x in pts]
    if len(pts) != r.n + 2:
        return False
    signs = all((a > 0) != (b > 0) for a, b in zip(vals, vals[1:]))
    level = min(abs(v) for v in vals)
    return signs and bool(level >= r.error * (1 - 1e-6))


def cmd_levelset(args, cfg):
    bits = cfg.precision_bits
    if (args.threshold is None) == (args.delta is None):
        raise InputError("give exactly one of --threshold and --delta")
    doc = {}
    tables = {}
    ok = True
    with workprec(bits):
        if args.poly:
            p = parse_poly(args.poly, bits)
            if args.delta is not None:
                S = e_set(p, args.delta)
            else:
                S = poly_sublevel(p, args.threshold)
            doc["poly"] = p.to_json()
            doc["set"] = S.to_json(bits)
            doc["measure"] = [S.total_length, S.total_length]
            tables["intervals"] = (["a", "b"], [[to_decimal(a, bits), to_decimal(b, bits)] for a, b in S])
            if args.cover:
                cover = nadic_maximal_cover(S, args.cover, args.exponent)
                doc["cover"] = cover.to_json(bits)
                tables["cover"] = (
                    ["level", "index", "a", "b"],
                    [[lv, i, str(a), str(b)] for lv, i, (a, b) in cover.intervals()],
                )
        elif args.target:
            if args.threshold is None:
                raise InputError("--delta needs a polynomial (--poly)")
            f = parse_target(args.target, bits)
            lo, hi = measure_sublevel(f, args.threshold, tol=cfg.tolerance)
            doc["target"] = f.to_json()
            doc["measure"] = [lo, hi]
        else:
            raise InputError("give --poly or --target")
    doc["threshold"] = args.threshold
    doc["delta"] = args.delta
    tables["measure"] = (["lower", "upper"], [doc["measure"]])
    return Report("levelset", doc, tables), ok


def _certificate_report(name, certs, skipped, extra=None):
    doc = {
        "count": len(certs) + len(skipped),
        "certified": len(certs),
        "passed": sum(1 for c in certs if c.passed),
        "skipped": skipped,
    }
    doc.update(extra or {})
    tables = {"summary": certificate_table(certs)}
    return Report(name, doc, tables, [c.to_json() for c in certs])


def cmd_spreading(args, cfg):
    from .sweeps import slack_pass_counts, spreading_sweep

    if args.sweep:
        certs, skipped = spreading_sweep(args.sweep, cfg.seed, bits=cfg.precision_bits, workers=cfg.workers, slack=args.slack)
        counts = slack_pass_counts(certs, (2.0, 4.0))
        extra = {"pass_at_slack": {str(k): v for k, v in counts.items()}, "seed": cfg.seed}
        report = _certificate_report("spreading", certs, skipped, extra)
        return report, all(c.passed for c in certs) and not skipped
    if not args.input:
        raise InputError("give --sweep COUNT or --input JSON")
    doc = load_json_arg(args.input)
    bits = cfg.precision_bits
    try:
        p = parse_poly(json.dumps(doc["poly"]), bits)
        with workprec(bits):
            E = IntervalSet.from_pairs([(to_mpfr(a), to_mpfr(b)) for a, b in doc["E"]])
            I = tuple(to_mpfr(v) for v in doc["I"])
        args_ = (p, E, I, float(doc["delta"]), float(doc["c"]), float(doc["eps"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"spreading input needs poly, E, I, delta, c, eps: {exc}") from exc
    try:
        cert = spreading_check(*args_, slack=args.slack)
    except PreconditionReport as exc:
        return _certificate_report("spreading", [], [{"instance_id": 0, "reason": f"{type(exc).__name__}: {exc}"}]), False
    return _certificate_report("spreading", [cert], []), cert.passed


def cmd_comparison(args, cfg):
    from .sweeps import comparison_sweep

    if args.sweep:
        certs, skipped = comparison_sweep(args.sweep, cfg.seed, bits=cfg.precision_bits, workers=cfg.workers)
        report = _certificate_report("comparison", certs, skipped, {"seed": cfg.seed})
        return report, all(c.passed for c in certs)
    if not args.input:
        raise InputError("give --sweep COUNT or --input JSON")
    doc = load_json_arg(args.input)
    try:
        p = parse_poly(json.dumps(doc["poly"]), cfg.precision_bits)
        vals = (float(doc["delta"]), float(doc["t"]), float(doc["gamma"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"comparison input needs poly, delta, t, gamma: {exc}") from exc
    try:
        cert = comparison_check(p, *vals, gate=not args.no_gate)
    except PreconditionReport as exc:
        return _certificate_report("comparison", [], [{"instance_id": 0, "reason": f"{type(exc).__name__}: {exc}"}]), False
    return _certificate_report("comparison", [cert], []), cert.passed


def cmd_theorem_a(args, cfg):
    f = parse_target(args.target, cfg.precision_bits)
    if args.degrees:
        degrees = parse_degrees(args.degrees)
    elif args.target == "lacunary":
        degrees = [2 ** (2**j) for j in range(4)]
    else:
        raise InputError("--degrees is required for this target")
    rows = theorem_a_scan(f, degrees, args.beta, eps=args.eps, mode=args.mode, tol=cfg.tolerance)
    increasing = ratios_increasing(rows, certified=True)
    errors = [r["error"] for r in rows if r["error"]]
    doc = {
        "target": f.to_json(),
        "beta": args.beta,
        "rows": rows,
        "ratios_increasing": increasing,
        "ratios_increasing_uncertified": ratios_increasing(rows, certified=False),
    }
    with workprec(f.precision_bits):
        errs = [r["E"] for r in rows if "E" in r and r["E"] > 0]
        if errs:
            doc["beurling_partial_sum"] = beurling_partial_sum(errs)
    ok = increasing and not errors
    return Report("theorem_a", doc, {"scan": (SCAN_COLUMNS, rows)}), ok


def cmd_construct_b(args, cfg):
    if args.phi not in PHI_CHOICES or args.psi not in PSI_CHOICES:
        raise InputError("unknown --phi or --psi")
    state = build_theorem_b(
        PHI_CHOICES[args.phi], PSI_CHOICES[args.psi], args.stages, cfg.C1, cfg.degree_cap, args.phi, args.psi
    )
    doc = state.to_json()
    certs = state.verification_log
    header = ["j", "n_j", "deg_P_j", "norm_P_j", "flatness_bound", "pass"]
    rows = [line.split(",") for line in state.to_csv().splitlines()[1:]]
    tables = {"stages": (header, rows), "certificates": certificate_table(certs)}
    return Report("construct_b", doc, tables, [c.to_json(64) for c in certs]), state.all_pass


def cmd_calibrate(args, cfg):
    n_values = range(3, args.n_max + 1, 2)
    rep = calibrate_c1(cfg.C1, n_values=n_values, l_max=args.l_max, grid=args.grid)
    doc = rep.to_json()
    rows = [[k, v] for k, v in sorted(doc.items()) if not isinstance(v, dict)]
    l0 = [[n, v] for n, v in sorted(rep.l0.items())]
    return Report("calibrate_c1", doc, {"constants": (["name", "value"], rows), "l0": (["n", "l0"], l0)}), rep.passed


def cmd_sweep(args, cfg):
    from . import sweeps

    kind = args.kind
    bits = cfg.precision_bits
    if kind in ("markov", "remez"):
        fn = sweeps.markov_sweep if kind == "markov" else sweeps.remez_sweep
        rows = fn(args.count, seed=cfg.seed, bits=bits)
        header = list(rows[0]) if rows else ["instance_id", "degree", "ratio", "pass"]
        doc = {"kind": kind, "seed": cfg.seed, "count": len(rows), "violations": sum(1 for r in rows if not r["pass"])}
        return Report(f"sweep_{kind}", doc, {"instances": (header, rows)}, rows), doc["violations"] == 0
    fn = {"spreading": sweeps.spreading_sweep, "comparison": sweeps.comparison_sweep, "claim": sweeps.claim_sweep}[kind]
    certs, skipped = fn(args.count, cfg.seed, bits=bits, workers=cfg.workers)
    extra = {"kind": kind, "seed": cfg.seed}
    if kind == "spreading":
        extra["pass_at_slack"] = {str(k): v for k, v in sweeps.slack_pass_counts(certs, (2.0, 4.0)).items()}
    report = _certificate_report(f"sweep_{kind}", certs, skipped, extra)
    return report, all(c.passed for c in certs)


HANDLERS = {
    "approx": cmd_approx,
    "levelset": cmd_levelset,
    "spreading": cmd_spreading,
    "comparison": cmd_comparison,
    "theorem-a": cmd_theorem_a,
    "construct-b": cmd_construct_b,
    "calibrate-c1": cmd_calibrate,
    "sweep": cmd_sweep,
}


# -- argument parsing ------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_help(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("run configuration")
    g.add_argument("--precision", type=int, help="working precision in bits (default 256)")
    g.add_argument("--tol", type=float, help="numerical tolerance (default 1e-10)")
    g.add_argument("--seed", type=int, help="seed for random sweeps (default 0)")
    g.add_argument("--degree-cap", dest="degree_cap", type=int, help="largest polynomial degree a construction may use")
    g.add_argument("--c1", type=float, help="constant used by the flattening construction (default 8)")
    g.add_argument("--out", help="report directory (default ./reports)")
    g.add_argument("--format", choices=("json", "csv", "both"), help="report format (default both)")
    g.add_argument("--workers", type=int, help="parallel processes for sweeps (default 1)")
    g.add_argument("--config", help="flat key = value file; flags override it")

    parser = _Parser(prog="quasibound", description="Certified polynomial sublevel-set and approximation checks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("approx", parents=[common], help="best uniform approximation errors")
    p.add_argument("--target", required=True, help=f"one of {', '.join(BUILTINS)}, 'lacunary', or JSON (inline or file)")
    p.add_argument("--degrees", required=True, help="comma-separated increasing degrees")
    p.add_argument("--certify", action="store_true", help="also compute a rigorous error upper bound")

    p = sub.add_parser("levelset", parents=[common], help="sublevel set of a polynomial or target")
    p.add_argument("--poly", help="polynomial JSON (inline or file); a bare list means Chebyshev coefficients")
    p.add_argument("--target", help="target function (for a measure bracket)")
    p.add_argument("--threshold", type=float, help="absolute threshold t")
    p.add_argument("--delta", type=float, help="relative threshold exp(-delta*deg)*||P||")
    p.add_argument("--cover", type=int, help="also build the maximal N-adic cover with this N")
    p.add_argument("--exponent", type=float, default=0.9, help="density exponent for the cover")

    p = sub.add_parser("spreading", parents=[common], help="spreading certificates")
    p.add_argument("--sweep", type=int, help="number of random instances")
    p.add_argument("--input", help="JSON instance with poly, E, I, delta, c, eps")
    p.add_argument("--slack", type=float, default=2.0, help="slack factor of the certificate")

    p = sub.add_parser("comparison", parents=[common], help="comparison certificates")
    p.add_argument("--sweep", type=int, help="number of random instances")
    p.add_argument("--input", help="JSON instance with poly, delta, t, gamma")
    p.add_argument("--no-gate", action="store_true", help="record the smallness gate instead of refusing")

    p = sub.add_parser("theorem-a", parents=[common], help="level-set decay scan")
    p.add_argument("--target", default="lacunary", help="target function (default: the four-term lacunary series)")
    p.add_argument("--degrees", help="comma-separated degrees")
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--mode", choices=("auto", "tail", "remez"), default="auto")

    p = sub.add_parser("construct-b", parents=[common], help="staged flat-polynomial construction")
    p.add_argument("--stages", type=int, default=3)
    p.add_argument("--phi", default="inv_log", help=f"radius function: {', '.join(PHI_CHOICES)}")
    p.add_argument("--psi", default="exp2", help=f"error function: {', '.join(PSI_CHOICES)}")

    p = sub.add_parser("calibrate-c1", parents=[common], help="empirical constants of the flattening lemmas")
    p.add_argument("--n-max", dest="n_max", type=int, default=21)
    p.add_argument("--l-max", dest="l_max", type=int, default=30)
    p.add_argument("--grid", type=int, default=200)

    p = sub.add_parser("sweep", parents=[common], help="seeded property sweep")
    p.add_argument("--kind", choices=SWEEP_KINDS, required=True)
    p.add_argument("--count", type=int, default=500)
    return parser


def run(command, args, config):
    """Execute one command and write its report; returns the exit status."""
    try:
        report, ok = HANDLERS[command](args, config)
    except InputError:
        raise
    except QuasiboundError as exc:
        # computational failures are part of the report
        report = Report(command.replace("-", "_"), {"error": f"{type(exc).__name__}: {exc}"})
        ok = False
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    # where and how the report is written does not change its content
    settings = {k: v for k, v in asdict(config).items() if k not in ("output_dir", "format", "workers")}
    report.document.setdefault("config", settings)
    try:
        paths = emit_report(report, config.output_dir, config.format)
    except OSError as exc:
        print(f"quasibound: cannot write report: {exc}", file=sys.stderr)
        return 2
    for path in paths:
        print(path)
    return 0 if ok else 1


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = build_config(args)
        return run(args.command, args, config)
    except InputError as exc:
        parser.print_help(sys.stderr)
        print(f"quasibound: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
