"""Command line front end: classify | evaluate | verify | witness | report-merge.

Every command writes line-delimited JSON records (or CSV with --csv).
Exit codes: 0 success, 1 unresolved or violated, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import expo_semigroup as es
from .classifier import CONDITIONS, ProbeConfig, classify, construct_cor44_operator, implication_closure
from .errors import ConfigError, SemigenError, TailNotCertifiable
from .function_models import (
    HolSpace,
    TrigDifferentiation,
    TrigMode,
    TrigPolynomial,
    TrigSpace,
    cinfty_refutation,
    divergence_witness,
    translate,
)
from .operators import DiagonalOperator, TaylorDifferentiation
from .seqspace import (
    KotheMatrix,
    SpaceDescriptor,
    finite_vector,
    geometric,
    ones,
    parse_order,
    power_decay,
    unit_vector,
)

EXIT_OK, EXIT_UNRESOLVED, EXIT_CONFIG = 0, 1, 2


# -- loading ----------------------------------------------------------------


def load_json(value) -> Any:
    """A JSON document from a file path or an inline string."""
    if isinstance(value, (dict, list)):
        return value
    path = Path(value)
    try:
        if path.exists():
            with path.open("r", encoding="utf-8") as fh:
                return json.load(fh)
        return json.loads(value)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"cannot parse {value!r}: {exc}") from exc


def _require(spec: dict, key: str, what: str):
    if key not in spec:
        raise ConfigError(f"{what} needs field {key!r}")
    return spec[key]


def parse_space(spec) -> object:
    spec = load_json(spec)
    if not isinstance(spec, dict):
        raise ConfigError("space definition must be an object")
    family = _require(spec, "family", "space")
    if family in ("omega", "s"):
        if "b_expr" in spec:
            raise ConfigError(f"b_expr is only allowed for custom spaces, not {family}")
        return SpaceDescriptor(KotheMatrix(family), parse_order(spec.get("r", "inf")))
    if family == "custom":
        return SpaceDescriptor(KotheMatrix.custom(_require(spec, "b_expr", "custom space")), parse_order(spec.get("r", "inf")))
    if family == "hol_disc":
        return HolSpace(float(spec.get("radius", 1.0)))
    if family == "hol_entire":
        return HolSpace(math.inf)
    if family == "cinfty_trig":
        lo, hi = spec.get("interval", [0.0, 2 * math.pi])
        return TrigSpace((float(lo), float(hi)))
    raise ConfigError(f"unknown space family {family!r}")


def parse_operator(spec):
    spec = load_json(spec)
    if not isinstance(spec, dict):
        raise ConfigError("operator definition must be an object")
    kind = _require(spec, "kind", "operator")
    if kind == "diagonal":
        return DiagonalOperator(str(_require(spec, "a_expr", "diagonal operator")))
    if "a_expr" in spec:
        raise ConfigError(f"a_expr is only allowed for diagonal operators, not {kind}")
    if kind == "taylor_diff":
        return TaylorDifferentiation()
    if kind == "trig_diff":
        return TrigDifferentiation()
    raise ConfigError(f"unknown operator kind {kind!r}")


def parse_vector(spec):
    """Vector records: unit{j}, ones, geometric{rho,C}, power{d,C}, finite{values}, poly{coefficients}, trig{modes}."""
    spec = load_json(spec)
    if not isinstance(spec, dict):
        raise ConfigError("vector definition must be an object")
    kind = _require(spec, "kind", "vector")
    if kind == "unit":
        return unit_vector(int(_require(spec, "j", "unit vector")))
    if kind == "ones":
        return ones()
    if kind == "geometric":
        return geometric(float(_require(spec, "rho", "geometric vector")), float(spec.get("C", 1.0)))
    if kind == "power":
        return power_decay(float(_require(spec, "d", "power vector")), float(spec.get("C", 1.0)))
    if kind == "finite":
        return finite_vector([_exact_number(v) for v in _require(spec, "values", "finite vector")])
    if kind in ("poly", "taylor"):
        return finite_vector([_exact_number(v) for v in _require(spec, "coefficients", "polynomial")], start=0)
    if kind == "trig":
        modes = []
        for m in _require(spec, "modes", "trig function"):
            modes.append(TrigMode(int(m["k"]), m.get("phase", "sin"), float(m.get("amplitude", 1.0))))
        return TrigPolynomial(tuple(modes))
    raise ConfigError(f"unknown vector kind {kind!r}")


def _exact_number(v):
    if isinstance(v, int):
        return v
    if isinstance(v, str):
        try:
            return Fraction(v)
        except ValueError as exc:
            raise ConfigError(f"bad number {v!r}") from exc
    return float(v)


def _number_list(text, cast=float):
    if text is None:
        return None
    try:
        return tuple(cast(v) for v in str(text).replace(" ", "").split(",") if v != "")
    except ValueError as exc:
        raise ConfigError(f"bad list {text!r}") from exc


def _num(v):
    return int(v) if float(v).is_integer() else float(v)


def probe_config(args) -> ProbeConfig:
    kw = {}
    if args.jmax is not None:
        kw["J_max"] = args.jmax
    if args.nprobe is not None:
        kw["N_probe"] = args.nprobe
    if args.p is not None:
        kw["p_list"] = _number_list(args.p, _num)
    if args.q_candidates is not None:
        kw["q_candidates"] = _number_list(args.q_candidates, _num)
    if args.R is not None:
        kw["R_list"] = _number_list(args.R)
    if args.tol is not None:
        if args.tol <= 0:
            raise ConfigError("tol must be positive")
        kw["tol"] = args.tol
    return ProbeConfig(**kw)


# -- output -----------------------------------------------------------------


def clean(obj):
    """JSON-safe copy: infinities become strings, numpy scalars become Python numbers."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, Fraction):
        return int(obj) if obj.denominator == 1 else str(obj)
    if isinstance(obj, np.ndarray):
        return [clean(v) for v in obj.tolist()]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


class Emitter:
    def __init__(self, out: Optional[str], as_csv: bool):
        self.out = out
        self.as_csv = as_csv
        self.records = []

    def emit(self, record: dict):
        self.records.append(clean(record))

    def close(self):
        if self.as_csv:
            text = _to_csv(self.records)
        else:
            text = "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.records)
        if self.out:
            Path(self.out).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)


def _to_csv(records):
    cols = []
    for r in records:
        for k in r:
            if k not in cols:
                cols.append(k)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in records:
        w.writerow({k: json.dumps(v) if isinstance(v, (list, dict)) else v for k, v in r.items()})
    return buf.getvalue()


# -- commands ---------------------------------------------------------------


def _space_and_operator(args):
    base = load_json(args.config) if getattr(args, "config", None) else {}
    space = args.space if args.space is not None else base.get("space")
    op = args.operator if args.operator is not None else base.get("operator")
    if space is None or op is None:
        raise ConfigError("need --space and --operator (or a --config with both)")
    return parse_space(space), parse_operator(op)


def run_classify(args, em: Emitter) -> int:
    space, A = _space_and_operator(args)
    cfg = probe_config(args)
    conditions = _number_list(args.conditions, str) if args.conditions else CONDITIONS
    bad = [c for c in conditions if c not in CONDITIONS]
    if bad:
        raise ConfigError(f"unknown conditions {bad}")
    result = classify(A, space, cfg, conditions)
    for rec in result.records():
        em.emit({"record": "verdict", **rec})
    closure = implication_closure(result)
    em.emit({
        "record": "closure",
        "consistent": closure.consistent,
        "violations": [list(v) for v in closure.violations],
        "statuses": {c: closure.statuses[c] for c in CONDITIONS if c in closure.statuses},
    })
    # a condition settled by the hierarchy (e.g. refuted through TOP) counts as resolved
    unresolved = any(closure.statuses.get(c, "inconclusive") == "inconclusive" for c in conditions)
    return EXIT_UNRESOLVED if unresolved or not closure.consistent else EXIT_OK


def _window(text, start=1, width=5):
    if text is None:
        return start, start + width - 1
    lo, _, hi = str(text).partition(":")
    try:
        lo, hi = (int(lo), int(hi)) if hi else (1, int(lo))
    except ValueError as exc:
        raise ConfigError(f"bad window {text!r}") from exc
    if lo < 0 or hi < lo:
        raise ConfigError(f"bad window {text!r}")
    return lo, hi


def _first(values, default):
    return values[0] if values else default


def run_evaluate(args, em: Emitter) -> int:
    space, A = _space_and_operator(args)
    x = parse_vector(args.vector)
    t = args.t
    lo, hi = _window(args.window, getattr(x, "start", 1))
    tol = args.tol if args.tol is not None else 1e-10
    p = _first(_number_list(args.p, _num), 1)
    R = _first(_number_list(args.R), abs(t) if t != 0 else 1.0)
    rec = {"record": "value", "t": t, "p_target": p, "R": R, "window": [lo, hi]}

    if isinstance(A, TrigDifferentiation):
        if not isinstance(x, TrigPolynomial):
            raise ConfigError("trig operator needs a trig vector")
        y = translate(x, t)
        grid = np.linspace(lo, hi, 5)
        em.emit({**rec, "scope": "translation oracle", "N_used": 0, "tail": 0.0,
                 "modes": [[m.k, m.phase, m.amplitude] for m in y.modes], "grid": grid, "values": y(grid)})
        return EXIT_OK

    if abs(t) > R and not args.piecewise:
        print(f"error: |t|={abs(t)} exceeds the certified horizon R={R}; pass --piecewise", file=sys.stderr)
        return EXIT_UNRESOLVED
    plan_R = args.step if args.piecewise and args.step else R
    plan = es.make_plan(A, space, plan_R, p, tol, cfg=probe_config(args))
    try:
        if args.piecewise and abs(t) > plan_R:
            val = es.evaluate_piecewise(A, x, t, plan_R, plan)
        elif t < 0:
            val = es.evaluate_group(A, x, t, plan)
        else:
            val = es.evaluate(A, x, t, plan)
    except TailNotCertifiable as exc:
        if not isinstance(A, DiagonalOperator) or args.piecewise:
            raise
        w = es.evaluate_window(A, x, t, hi, tol)
        sel = w.js >= lo
        em.emit({**rec, "scope": "coordinatewise", "note": f"x has no finite seminorm here ({exc})",
                 "N_used": w.N_used, "tail": w.tail, "coordinates": w.values[sel].astype(float)})
        return EXIT_OK
    js, vals = val.vector.coords(hi, start=max(lo, val.vector.start))
    em.emit({**rec, "scope": "seminorm", "N_used": val.N_used, "tail": val.tail,
             "coordinates": _coords_out(vals)})
    return EXIT_OK


def _coords_out(vals):
    out = []
    for v in vals:
        if isinstance(v, Fraction):
            out.append(v)
        else:
            out.append(float(v))
    return out


def run_verify(args, em: Emitter) -> int:
    space, A = _space_and_operator(args)
    x = parse_vector(args.vector) if args.vector else unit_vector(3)
    p = _first(_number_list(args.p, _num), 1)
    t, s = args.t, args.s
    hs = _number_list(args.h) or tuple(2.0**-k for k in range(1, 11))
    suites = ("law", "generator", "continuity") if args.suite == "all" else (args.suite,)
    need = max(t + s, t + max(hs))
    R = _first(_number_list(args.R), need)
    if R < need:
        raise ConfigError(f"--R {R} is below the horizon {need} the checks require")
    tol = args.tol if args.tol is not None else 1e-10
    plan = es.make_plan(A, space, R, p, tol, cfg=probe_config(args))
    reports = []
    if "law" in suites:
        reports.append(("law", {"t": t, "s": s}, es.verify_semigroup_law(A, x, t, s, p, plan)))
    if "generator" in suites:
        for r in es.verify_generator(A, x, hs, p, plan):
            reports.append(("generator", {"h": r.detail["h"]}, r))
    if "continuity" in suites:
        for r in es.continuity_modulus(A, [x], p, t, hs, plan):
            reports.append(("continuity", {"t": t, "h": r.detail["h"]}, r))
    ok = True
    for name, where, r in reports:
        bound = r.bound * args.corrupt_tail
        passed = r.residual <= bound
        ok &= passed
        em.emit({"record": "check", "suite": name, **where, "p": p, "residual": r.residual,
                 "bound": bound, "margin": bound - r.residual, "passed": passed})
    return EXIT_OK if ok else EXIT_UNRESOLVED


def run_witness(args, em: Emitter) -> int:
    if args.which == "cor44":
        if args.space is None:
            raise ConfigError("cor44 needs --space")
        space = parse_space(args.space)
        if not isinstance(space, SpaceDescriptor):
            raise ConfigError("cor44 needs a Köthe space")
        res = construct_cor44_operator(space.matrix, space.r)
        again = classify(res.operator, space, probe_config(args), ("A-BDD", "M-TOP"))
        got = {c: again.status(c) for c in ("A-BDD", "M-TOP")}
        em.emit({"record": "cor44", "j_indices": res.j_indices, "operator": res.operator.label,
                 "expected": res.expected, "reclassified": got})
        return EXIT_OK if got == res.expected else EXIT_UNRESOLVED
    if args.which == "hd-divergence":
        w = divergence_witness(args.k)
        em.emit({"record": "hd-divergence", "k": w.k, "exact_value": w.exact_value,
                 "value": float(w.exact_value), "lower_bound": w.lower_bound, "holds": w.holds})
        return EXIT_OK if w.holds else EXIT_UNRESOLVED
    if args.which == "cinfty":
        if args.mu is None:
            raise ConfigError("cinfty needs --mu")
        mu = [v for v in str(args.mu).replace(" ", "").split(",") if v]
        w = cinfty_refutation(args.p, args.q, mu)
        em.emit({"record": "cinfty", **w.record()})
        return EXIT_OK if w.verify() else EXIT_UNRESOLVED
    raise ConfigError(f"unknown witness {args.which!r}")


def run_report_merge(args, em: Emitter) -> int:
    verdicts = []
    for f in args.files:
        try:
            lines = Path(f).read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise ConfigError(str(exc)) from exc
        for i, line in enumerate(lines, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{f}:{i}: {exc}") from exc
            if "condition" in rec and "status" in rec:
                verdicts.append(rec)

    def key(r):
        p = r.get("p")
        R = r.get("R")
        R = math.inf if R == "inf" else (-1.0 if R is None else float(R))
        return (CONDITIONS.index(r["condition"]) if r["condition"] in CONDITIONS else 99,
                -1.0 if p is None else float(p), R)

    verdicts.sort(key=key)
    for r in verdicts:
        em.emit(r)
    closure = implication_closure(verdicts)
    em.emit({"record": "closure", "consistent": closure.consistent,
             "violations": [list(v) for v in closure.violations], "statuses": closure.statuses})
    return EXIT_OK if closure.consistent else EXIT_UNRESOLVED


# -- parser -----------------------------------------------------------------


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON run config with space/operator fields")
    p.add_argument("--space", help="space definition (JSON file or inline JSON)")
    p.add_argument("--operator", help="operator definition (JSON file or inline JSON)")
    p.add_argument("--jmax", type=int, default=None)
    p.add_argument("--nprobe", type=int, default=None)
    p.add_argument("--p", default=None, help="comma separated seminorm indices")
    p.add_argument("--q-candidates", dest="q_candidates", default=None)
    p.add_argument("--R", default=None, help="comma separated horizons")
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--out", default=None, help="write records here instead of stdout")
    p.add_argument("--csv", action="store_true", help="emit CSV rows instead of JSON lines")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="semigen", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    c = sub.add_parser("classify", help="decide the six conditions for an operator on a space")
    _common(c)
    c.add_argument("--conditions", default=None, help="subset, comma separated")

    e = sub.add_parser("evaluate", help="T(t)x by the truncated exponential series")
    _common(e)
    e.add_argument("--vector", default='{"kind": "ones"}')
    e.add_argument("--t", type=float, required=True)
    e.add_argument("--window", default=None, help="coordinates lo:hi (default: first five)")
    e.add_argument("--piecewise", action="store_true", help="split t into steps of --step (or R)")
    e.add_argument("--step", type=float, default=None)

    v = sub.add_parser("verify", help="semigroup law, generator and continuity checks")
    _common(v)
    v.add_argument("--vector", default=None)
    v.add_argument("--suite", choices=["law", "generator", "continuity", "all"], default="all")
    v.add_argument("--t", type=float, default=0.3)
    v.add_argument("--s", type=float, default=0.7)
    v.add_argument("--h", default=None, help="comma separated step sizes")
    v.add_argument("--corrupt-tail", dest="corrupt_tail", type=float, default=1.0,
                   help=argparse.SUPPRESS)

    w = sub.add_parser("witness", help="explicit constructions and counterexamples")
    _common(w)
    w.add_argument("which", choices=["cor44", "hd-divergence", "cinfty"])
    w.add_argument("--k", type=int, default=10)
    w.add_argument("--q", type=int, default=2)
    w.add_argument("--mu", default=None, help="comma separated mu_0, mu_1, ...")

    m = sub.add_parser("report-merge", help="merge classification reports and re-check the hierarchy")
    m.add_argument("files", nargs="+")
    m.add_argument("--out", default=None)
    m.add_argument("--csv", action="store_true")
    return parser


COMMANDS = {
    "classify": run_classify,
    "evaluate": run_evaluate,
    "verify": run_verify,
    "witness": run_witness,
    "report-merge": run_report_merge,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "witness" and args.which == "cinfty":
        args.p = int(args.p) if args.p is not None else 0
    em = Emitter(args.out, args.csv)
    try:
        return COMMANDS[args.command](args, em)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SemigenError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_UNRESOLVED
    finally:
        em.close()


if __name__ == "__main__":
    sys.exit(main())
