"""Certificates and refutations for the boundedness hierarchy of an operator.

Conditions, each quantified over the seminorms p of a fundamental system:

    A-BDD      exists mu, for all p exists q:  p(A^n x) <= mu^n q(x)
    A-BDD-GEN  same with a constant M in front (equivalent to A-BDD)
    M-TOP      for all p exists q, mu:         p(A^n x) <= mu^n q(x)
    TOP        for all p exists q, all n:      p(A^n x) <= mu_n q(x)
    NEW1       for all R, p exists q, (mu_n) with sum mu_n R^n / n! finite
    NEW2       NEW1 for a single R > 0

The universal quantifiers are sampled on finite lists; every verdict carries a
scope tag saying whether it rests on a closed form or on a probed window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from . import mu_calculus as mucalc
from .errors import ConfigError, ConstructionInapplicable, NoDomination, NotCertified
from .function_models import (
    HolSpace,
    TrigDifferentiation,
    TrigMode,
    TrigSpace,
    CompactSeminormIndex,
    cauchy_mu,
    monomial_lower_log_mu,
    trig_norm,
)
from .operators import (
    STAB_TOL,
    DiagonalOperator,
    TaylorDifferentiation,
    continuity_check,
    grows,
    log_column,
    log_mu_at,
    probe_grid,
    scan_log_mu,
)
from .seqspace import PROBED, KotheMatrix, SpaceDescriptor, has_continuous_norm, ones, seminorm

CLOSED = "closed form"
DERIVED = "derived"
CONDITIONS = ("A-BDD", "A-BDD-GEN", "M-TOP", "TOP", "NEW1", "NEW2")
EVIDENCE_N = (10, 100, 1000)


@dataclass(frozen=True)
class ProbeConfig:
    J_max: int = 100_000
    K_max: int = 64
    N_probe: int = 1024
    p_list: Optional[tuple] = None
    q_candidates: Optional[tuple] = None
    R_list: tuple = (1.0, 5.0, 10.0)
    R_grid: tuple = (0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0)
    mu_grid: tuple = tuple(2.0**e for e in range(-4, 17))
    far: bool = True
    tol: float = STAB_TOL

    def __post_init__(self):
        if self.J_max < 10 or self.K_max < 1 or self.N_probe < 64:
            raise ConfigError("need J_max >= 10, K_max >= 1 and N_probe >= 64")
        if any(R <= 0 for R in self.R_list + self.R_grid):
            raise ConfigError("R values must be positive")


@dataclass
class Verdict:
    """One certificate, refutation or inconclusive outcome for (condition, p, R)."""

    condition: str
    status: str  # certified | refuted | inconclusive
    scope: str
    p: object = None
    R: Optional[float] = None
    q: object = None
    mu: Optional[mucalc.LogMuSequence] = None
    M: Optional[float] = None
    mu_const: Optional[float] = None
    witness: Optional[str] = None
    evidence: list = field(default_factory=list)
    note: str = ""

    def mu_summary(self):
        if self.mu_const is not None:
            return f"M*mu^n, M={self.M if self.M is not None else 1:g}, mu={self.mu_const:.6g}"
        if self.mu is not None:
            return self.mu.summary()
        return None

    def log_mu(self, n: int) -> float:
        if self.mu_const is not None:
            return math.log(self.M or 1.0) + n * math.log(self.mu_const)
        return self.mu.log_at(n)

    def record(self) -> dict:
        return {
            "condition": self.condition,
            "status": self.status,
            "scope": self.scope,
            "p": _num(self.p),
            "R": self.R,
            "q": _num(self.q),
            "mu_summary": self.mu_summary(),
            "witness": self.witness,
            "evidence_head": self.evidence[:6],
            "note": self.note,
        }


def _num(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    return v


def _order(v: Verdict):
    return (CONDITIONS.index(v.condition), _sortable(v.p), v.R if v.R is not None else -1.0)


def _sortable(p):
    return -1.0 if p is None else float(p)


@dataclass
class Classification:
    operator: str
    space: str
    verdicts: list

    def status(self, condition: str) -> str:
        return aggregate([v for v in self.verdicts if v.condition == condition])

    def statuses(self):
        return {c: self.status(c) for c in CONDITIONS if any(v.condition == c for v in self.verdicts)}

    def get(self, condition: str, p=None, R=None) -> Optional[Verdict]:
        for v in self.verdicts:
            if v.condition == condition and (p is None or v.p == p) and (R is None or v.R == R):
                return v
        return None

    def records(self):
        return [v.record() for v in sorted(self.verdicts, key=_order)]


def aggregate(verdicts: Sequence[Verdict]) -> str:
    if not verdicts:
        return "inconclusive"
    st = [v.status for v in verdicts]
    if "refuted" in st:
        return "refuted"
    if all(s == "certified" for s in st):
        return "certified"
    return "inconclusive"


# -- shared analysis for diagonal operators ---------------------------------


class _DiagonalContext:
    def __init__(self, A: DiagonalOperator, space: SpaceDescriptor, cfg: ProbeConfig):
        self.A, self.space, self.cfg = A, space, cfg
        self.probes = probe_grid(cfg.J_max, None if not cfg.far else 1200.0)
        self._scans = {}
        self._radii = {}
        self.cn = has_continuous_norm(space.matrix, min(cfg.J_max, 10_000), cfg.K_max)
        self.p_list = tuple(cfg.p_list or (1, 2, 3))
        self.sup = A.sup_abs(self.probes)
        self._continuity = {}

    def q_candidates(self, p):
        if self.cfg.q_candidates:
            return tuple(q for q in self.cfg.q_candidates if q >= p)
        return tuple(range(p, p + 17))

    def continuous(self, p) -> Optional[str]:
        """None when continuity is certified for p, else a reason."""
        if p not in self._continuity:
            try:
                continuity_check(self.A, self.space, p, self.q_candidates(p), self.cfg.J_max, self.probes)
                self._continuity[p] = None
            except NotCertified as exc:
                self._continuity[p] = str(exc)
        return self._continuity[p]

    def scan(self, p, q):
        key = (p, q)
        if key not in self._scans:
            self._scans[key] = scan_log_mu(self.A, self.space, p, q, self.cfg.N_probe, self.probes, self.cfg.tol)
        return self._scans[key]

    def quick_unbounded(self, p, q):
        """Cheap test: mu_N^opt(p, q) at the largest probed n already diverges in j."""
        key = ("quick", p, q)
        if key not in self._scans:
            n = self.cfg.N_probe
            prefix, _ = log_mu_at(self.A, self.space, p, q, n, self.probes)
            hit = grows(prefix, self.cfg.tol) or prefix[-1] == math.inf
            self._scans[key] = {"q": q, "kind": "unbounded in j", "n": n, "decade_sups": [round(v, 6) for v in prefix]} if hit else None
        return self._scans[key]

    def usable(self, p, q):
        if self.quick_unbounded(p, q) is not None:
            return False
        s = self.scan(p, q)
        return s.all_stable and bool(np.all(s.log_mu < math.inf))

    def radius(self, p, q):
        key = (p, q)
        if key not in self._radii and self.quick_unbounded(p, q) is not None:
            self._radii[key] = mucalc.RadiusEstimate(0.0, True)
        if key not in self._radii:
            s = self.scan(p, q)
            if np.any(s.log_mu == math.inf) or s.no_domination_j is not None:
                est = mucalc.RadiusEstimate(0.0, True)
            elif not s.all_stable:
                est = self._unstable_radius(p, q)
            else:
                est = mucalc.radius(mucalc.from_scan(s.log_mu, (p, q)))
            self._radii[key] = est
        return self._radii[key]

    def _unstable_radius(self, p, q):
        # some mu_n grows without bound in j: then mu_n = inf and the radius is 0
        for n in range(1, self.cfg.N_probe + 1):
            if not self.scan(p, q).stabilized[n]:
                prefix, _ = log_mu_at(self.A, self.space, p, q, n, self.probes)
                if grows(prefix, self.cfg.tol):
                    return mucalc.RadiusEstimate(0.0, True)
                break
        return mucalc.RadiusEstimate(math.nan, False)

    def unbounded_in_j(self, p, q):
        """Evidence that some mu_n^opt(p, q) is infinite, or None."""
        quick = self.quick_unbounded(p, q)
        if quick is not None:
            return quick
        s = self.scan(p, q)
        if s.no_domination_j is not None:
            return {"q": q, "kind": "no domination", "j": s.no_domination_j}
        bad = np.nonzero(~s.stabilized | (s.log_mu == math.inf))[0]
        if bad.size == 0:
            return None
        n = int(bad[0])
        prefix, _ = log_mu_at(self.A, self.space, p, q, n, self.probes)
        if grows(prefix, self.cfg.tol) or prefix[-1] == math.inf:
            return {"q": q, "kind": "unbounded in j", "n": n, "decade_sups": [round(v, 6) for v in prefix]}
        return None

    @property
    def bounded(self):
        full, prefix, stable = self.sup
        return stable

    @property
    def unbounded(self):
        full, prefix, stable = self.sup
        return (not stable) and grows(prefix, self.cfg.tol)


def _growth_evidence(g_at, tol):
    """g at n = 10, 100, 1000 (or within N) strictly increasing."""
    vals = [g_at(n) for n in EVIDENCE_N]
    ok = all(math.isfinite(a) and b - a > tol * max(1.0, abs(a)) for a, b in zip(vals, vals[1:]))
    return ok, vals


def _k0(B: KotheMatrix, j: int, K_cap: int = 1 << 40) -> Optional[int]:
    """Smallest k with b_{j,k} > 0 (rows are monotone in k), or None below K_cap."""
    if B.family == "omega":
        return j
    if B.family == "s":
        return 1
    if B.entry(j, K_cap) <= 0:
        return None
    lo, hi = 1, K_cap
    while lo < hi:
        mid = (lo + hi) // 2
        if B.entry(j, mid) > 0:
            hi = mid
        else:
            lo = mid + 1
    return lo


# -- A-BDD ------------------------------------------------------------------


def _diag_a_bounded(ctx: _DiagonalContext, condition="A-BDD"):
    cfg = ctx.cfg
    full, prefix, stable = ctx.sup
    if stable:
        mu = math.exp(full) if full > -math.inf else 0.0
        out = []
        for p in ctx.p_list:
            out.append(Verdict(condition, "certified", PROBED, p=p, q=p, M=1.0, mu_const=mu if mu > 0 else 1.0,
                               note="bounded symbol: ||A x||_p <= sup|a_j| ||x||_p"))
        return out
    if not ctx.unbounded:
        return [Verdict(condition, "inconclusive", PROBED, note="sup|a_j| neither stabilized nor growing over 3 decades")]
    if ctx.cn.status == "certified":
        return [_unit_vector_refutation(ctx, condition)]
    if ctx.space.has_finite_columns:
        return [_ones_refutation(ctx, condition)]
    return [Verdict(condition, "inconclusive", PROBED, note="unbounded symbol, no continuous norm and no finite columns")]


def _unit_vector_refutation(ctx, condition):
    """|a_j|^n b_{j,p}/b_{j,q} at the first j with |a_j| > mu outgrows mu^n, for every q."""
    la = ctx.A.log_abs(ctx.probes)
    p = max(ctx.cn.k0, min(ctx.p_list))
    evidence = []
    for mu in ctx.cfg.mu_grid:
        # a clear margin over mu, so the slope below is not rounding noise
        idx = np.nonzero(la > math.log(mu) + 1e-6)[0]
        if idx.size == 0:
            continue
        i = int(idx[0])
        j0 = int(ctx.probes.js[i])
        q_max = max(ctx.q_candidates(p))
        gap = float(log_column(ctx.space, p, ctx.probes)[i] - log_column(ctx.space, q_max, ctx.probes)[i])
        slope = float(la[i]) - math.log(mu)
        margin = 1e-9 * max(1.0, abs(gap))
        n_thr = max(1, math.floor((margin - gap) / slope) + 1)
        ns = [n_thr * m for m in (1, 10, 100)]
        # log of ||A^n e_j0||_p / (mu^n ||e_j0||_q); positive from n_thr on
        evidence.append({
            "mu": mu, "p": p, "q_max": q_max, "j0": j0, "log_abs_a": round(float(la[i]), 9),
            "n_threshold": n_thr, "n": ns, "log_ratio": [n * slope + gap for n in ns],
        })
    return Verdict(condition, "refuted", PROBED, p=p, witness="unit vectors e_j0", evidence=evidence,
                   note="|a_j| unbounded and some column is a norm")


def _ones_refutation(ctx, condition):
    """With finite columns, x = (1, 1, ...) has ||A^n x||_p >= |a_j0|^n b_{j0,p} while ||x||_q is fixed."""
    A, space, cfg = ctx.A, ctx.space, ctx.cfg
    dense = ctx.probes.dense
    la = A.log_abs(ctx.probes)[: len(dense)]
    r = space.r
    evidence = []
    x = ones()
    for mu in cfg.mu_grid:
        c = math.ceil(mu)
        idx = np.nonzero(la > math.log(c))[0]
        if idx.size == 0:
            continue
        j0 = int(idx[0]) + 1
        p = _k0(space.matrix, j0)
        if p is None:
            continue
        q_max = p + 16
        norms = []
        js = np.arange(1, space.matrix.column_growth(p)[1] + 1) if space.matrix.column_growth(p) else None
        if js is None:
            continue
        lb = space.matrix.log_column(js, p)
        la_p = la[: len(js)]
        log_xq = math.log(seminorm(x, q_max, space).value)
        for n in EVIDENCE_N:
            terms = n * la_p + lb
            terms = terms[np.isfinite(terms)]
            if math.isinf(r):
                lv = float(np.max(terms))
            else:
                lv = float(logsumexp(r * terms)) / r
            norms.append(round(lv - log_xq - n * math.log(mu), 6))
        evidence.append({"mu": mu, "p": p, "q_max": q_max, "j0": j0, "n": list(EVIDENCE_N), "log_ratio": norms,
                         "ratio_form": f"({math.exp(float(la[j0 - 1])):.6g}/mu)^n"})
    return Verdict(condition, "refuted", PROBED, p=None, witness="ones", evidence=evidence,
                   note="||A^n 1||_p / (mu^n ||1||_q) diverges for the listed p")


# -- M-TOP ------------------------------------------------------------------


def _diag_m_top(ctx: _DiagonalContext):
    cfg = ctx.cfg
    out = []
    for p in ctx.p_list:
        if ctx.bounded:
            full = ctx.sup[0]
            mu = math.exp(full) if full > -math.inf else 1.0
            out.append(Verdict("M-TOP", "certified", PROBED, p=p, q=p, M=1.0, mu_const=mu if mu > 0 else 1.0,
                               note="from the bounded symbol"))
            continue
        cert = None
        evidence = []
        all_refuted = True
        for q in ctx.q_candidates(p):
            quick = ctx.quick_unbounded(p, q)
            if quick is not None:
                evidence.append(quick)
                continue
            s = ctx.scan(p, q)
            finite = bool(np.all(s.log_mu < math.inf))
            if finite and s.all_stable:
                ns = np.arange(1, len(s.log_mu))
                g = s.log_mu[1:] / ns
                top = float(np.max(g))
                head = float(np.max(g[: max(1, len(g) // 10)]))
                if top == -math.inf or top - head <= math.log1p(cfg.tol):
                    cert = (q, math.exp(top) if top > -math.inf else 1.0)
                    break
                ok, vals = _growth_evidence(lambda n: s.log_mu[n] / n if n < len(s.log_mu) else math.nan, cfg.tol)
                if ok:
                    evidence.append({"q": q, "kind": "log mu_n / n grows", "n": list(EVIDENCE_N), "values": [round(v, 6) for v in vals]})
                    continue
                all_refuted = False
                continue
            ev = ctx.unbounded_in_j(p, q)
            if ev is None:
                all_refuted = False
            else:
                evidence.append(ev)
        if cert:
            q, mu = cert
            out.append(Verdict("M-TOP", "certified", PROBED, p=p, q=q, M=1.0, mu_const=mu))
        elif all_refuted:
            out.append(Verdict("M-TOP", "refuted", PROBED, p=p, witness="unit vectors", evidence=evidence))
        elif ctx.unbounded and ctx.cn.status == "certified":
            out.append(Verdict("M-TOP", "refuted", PROBED, p=p, witness="unit vectors", evidence=evidence,
                               note="unbounded symbol on a space with a continuous norm"))
        else:
            out.append(Verdict("M-TOP", "inconclusive", PROBED, p=p, evidence=evidence))
    return out


# -- TOP --------------------------------------------------------------------


def _diag_top(ctx: _DiagonalContext):
    out = []
    for p in ctx.p_list:
        evidence = []
        cert = None
        all_refuted = True
        for q in ctx.q_candidates(p):
            if ctx.usable(p, q):
                cert = q
                break
            ev = ctx.unbounded_in_j(p, q)
            if ev is None:
                all_refuted = False
            else:
                evidence.append(ev)
        if cert is not None:
            s = ctx.scan(p, cert)
            out.append(Verdict("TOP", "certified", PROBED, p=p, q=cert, mu=mucalc.from_scan(s.log_mu, (p, cert))))
        elif all_refuted:
            out.append(Verdict("TOP", "refuted", PROBED, p=p, witness="unit vectors", evidence=evidence))
        else:
            out.append(Verdict("TOP", "inconclusive", PROBED, p=p, evidence=evidence))
    return out


# -- NEW1 / NEW2 ------------------------------------------------------------


def _diag_new1_for(ctx, p, R, mtop):
    tol = mucalc.RADIUS_TOL
    if mtop is not None and mtop.status == "certified":
        return Verdict("NEW1", "certified", PROBED, p=p, R=R, q=mtop.q, M=mtop.M, mu_const=mtop.mu_const,
                       note="geometric mu_n: the series is entire")
    evidence = []
    all_refuted = True
    for q in ctx.q_candidates(p):
        est = ctx.radius(p, q)
        if est.stabilized and (est.infinite or est.value > R * (1 + tol)):
            s = ctx.scan(p, q)
            return Verdict("NEW1", "certified", PROBED, p=p, R=R, q=q, mu=mucalc.from_scan(s.log_mu, (p, q)),
                           note=f"radius estimate {est.value:.6g}")
        if est.stabilized and est.value * (1 + tol) < R:
            evidence.append({"q": q, "radius": est.value})
        else:
            all_refuted = False
    if all_refuted:
        return Verdict("NEW1", "refuted", PROBED, p=p, R=R, witness="unit vectors", evidence=evidence)
    return Verdict("NEW1", "inconclusive", PROBED, p=p, R=R, evidence=evidence)


def _diag_new1(ctx, R_list, mtop_verdicts):
    mt = {v.p: v for v in mtop_verdicts}
    return [_diag_new1_for(ctx, p, R, mt.get(p)) for R in R_list for p in ctx.p_list]


def _new2_from(per_R):
    """per_R: {R: [Verdict for each p]} from a NEW1-style search."""
    for R in sorted(per_R, reverse=True):
        vs = per_R[R]
        if all(v.status == "certified" for v in vs):
            return Verdict("NEW2", "certified", PROBED, R=R, q={_num(v.p): _num(v.q) for v in vs},
                           evidence=[{"p": _num(v.p), "q": _num(v.q), "mu": v.mu_summary()} for v in vs],
                           note="largest grid R valid for every sampled p")
    R_min = min(per_R)
    failing = [v for v in per_R[R_min] if v.status == "refuted"]
    if failing:
        return Verdict("NEW2", "refuted", PROBED, R=R_min, p=failing[0].p, evidence=failing[0].evidence,
                       note="fails already at the smallest grid R")
    return Verdict("NEW2", "inconclusive", PROBED)


def check_a_bounded(A, space, cfg: ProbeConfig = ProbeConfig(), _ctx=None):
    return _dispatch(A, space, cfg, "A-BDD", _ctx)


def check_m_top(A, space, cfg: ProbeConfig = ProbeConfig(), _ctx=None):
    return _dispatch(A, space, cfg, "M-TOP", _ctx)


def check_topologizable(A, space, cfg: ProbeConfig = ProbeConfig(), _ctx=None):
    return _dispatch(A, space, cfg, "TOP", _ctx)


def check_new1(A, space, cfg: ProbeConfig = ProbeConfig(), _ctx=None):
    return _dispatch(A, space, cfg, "NEW1", _ctx)


def check_new2(A, space, cfg: ProbeConfig = ProbeConfig(), _ctx=None):
    return _dispatch(A, space, cfg, "NEW2", _ctx)


def _dispatch(A, space, cfg, condition, ctx=None):
    c = classify(A, space, cfg, conditions=(condition,), _ctx=ctx)
    return [v for v in c.verdicts if v.condition == condition]


# -- Taylor differentiation on discs ----------------------------------------


def _lower_seq(p, s, N):
    return mucalc.explicit([monomial_lower_log_mu(n, p, s) for n in range(N + 1)], (p, s))


def _taylor_checks(space: HolSpace, cfg: ProbeConfig, conditions):
    p_list = tuple(cfg.p_list or space.default_p_list())
    for p in p_list:
        space.check_index(p)

    def cands(p):
        if cfg.q_candidates:
            return tuple(q for q in cfg.q_candidates if p < q < space.radius)
        return space.default_q_candidates(p)

    out = []
    lower_cache = {}

    def lower(p, s):
        if (p, s) not in lower_cache:
            lower_cache[(p, s)] = _lower_seq(p, s, cfg.N_probe)
        return lower_cache[(p, s)]

    def growth_refutation(condition, p):
        evidence = []
        for s in cands(p):
            L = lower(p, s)
            ok, vals = _growth_evidence(lambda n: L.log_at(n) / n if n <= L.N_max else monomial_lower_log_mu(n, p, s) / n, cfg.tol)
            if not ok:
                return Verdict(condition, "inconclusive", PROBED, p=p)
            evidence.append({"q": s, "kind": "log mu_n / n grows (monomial lower bound)", "n": list(EVIDENCE_N),
                             "values": [round(v, 6) for v in vals]})
        return Verdict(condition, "refuted", PROBED, p=p, witness="monomials z^m", evidence=evidence)

    def new1(p, R):
        tol = mucalc.RADIUS_TOL
        for s in cands(p):
            if s - p > R * (1 + tol):
                return Verdict("NEW1", "certified", CLOSED, p=p, R=R, q=s, mu=mucalc.from_cauchy(p, s, cfg.N_probe),
                               note="Cauchy estimate, radius s - p")
        evidence = []
        for s in cands(p):
            est = mucalc.radius(lower(p, s))
            if not (est.stabilized and est.value * (1 + tol) < R):
                return Verdict("NEW1", "inconclusive", PROBED, p=p, R=R, evidence=evidence)
            evidence.append({"q": s, "lower_bound_radius": est.value})
        return Verdict("NEW1", "refuted", PROBED, p=p, R=R, witness="monomials z^m", evidence=evidence,
                       note="radius of the monomial lower bounds is below R for every candidate")

    for cond in conditions:
        if cond in ("A-BDD", "A-BDD-GEN", "M-TOP"):
            out += [growth_refutation(cond, p) for p in p_list]
        elif cond == "TOP":
            for p in p_list:
                s = cands(p)[0]
                out.append(Verdict("TOP", "certified", CLOSED, p=p, q=s, mu=mucalc.from_cauchy(p, s, cfg.N_probe),
                                   note="Cauchy estimate n! s/(s-p)^(n+1)"))
        elif cond == "NEW1":
            out += [new1(p, R) for R in cfg.R_list for p in p_list]
        elif cond == "NEW2":
            v = _new2_from({R: [new1(p, R) for p in p_list] for R in cfg.R_grid})
            if v.status == "certified" and not math.isinf(space.radius):
                v.note += "; the admissible radius s - p shrinks to 0 as p approaches the disc radius"
            out.append(v)
    return out


# -- trig model --------------------------------------------------------------


def _trig_checks(space: TrigSpace, cfg: ProbeConfig, conditions):
    p_list = tuple(cfg.p_list or space.default_p_list())
    out = []
    for cond in conditions:
        if cond != "TOP":
            continue
        for p in p_list:
            space.check_index(p)
            evidence = []
            qs = cfg.q_candidates or space.default_q_candidates(p)
            for q in qs:
                if q < p:
                    continue
                n = q - p + 1
                ratios = []
                for k in EVIDENCE_N:
                    mode = TrigMode(k)
                    num = trig_norm(mode, n, CompactSeminormIndex(p, space.interval)).log_value
                    den = trig_norm(mode, 0, CompactSeminormIndex(q, space.interval)).log_value
                    ratios.append(round(num - den, 9))
                evidence.append({"q": q, "n": n, "k": list(EVIDENCE_N), "log_ratio": ratios})
            out.append(Verdict("TOP", "refuted", CLOSED, p=p, witness="sin(k x)", evidence=evidence,
                               note="||A^n f_k||_p / ||f_k||_q = k for n = q - p + 1"))
    return out


# -- entry point ------------------------------------------------------------


def classify(A, space, cfg: ProbeConfig = ProbeConfig(), conditions: Sequence[str] = CONDITIONS, _ctx=None) -> Classification:
    for c in conditions:
        if c not in CONDITIONS:
            raise ConfigError(f"unknown condition {c!r}")
    if isinstance(A, TaylorDifferentiation) and isinstance(space, HolSpace):
        return Classification(repr(A), space.family, _taylor_checks(space, cfg, conditions))
    if isinstance(A, TrigDifferentiation) and isinstance(space, TrigSpace):
        return Classification(repr(A), space.family, _trig_checks(space, cfg, conditions))
    if not (isinstance(A, DiagonalOperator) and isinstance(space, SpaceDescriptor)):
        raise ConfigError(f"no checker for {A!r} on {space!r}")
    ctx = _ctx or _DiagonalContext(A, space, cfg)
    bad = {p: ctx.continuous(p) for p in ctx.p_list}
    if any(bad.values()):
        reason = "; ".join(r for r in bad.values() if r)
        return Classification(A.label, space.matrix.describe(),
                              [Verdict(c, "inconclusive", PROBED, note=f"continuity not certified: {reason}") for c in conditions])
    out = []
    mtop = None
    for cond in conditions:
        if cond in ("A-BDD", "A-BDD-GEN"):
            out += _diag_a_bounded(ctx, cond)
        elif cond == "M-TOP":
            mtop = _diag_m_top(ctx)
            out += mtop
        elif cond == "TOP":
            out += _diag_top(ctx)
        elif cond == "NEW1":
            mtop = mtop if mtop is not None else _diag_m_top(ctx)
            out += _diag_new1(ctx, cfg.R_list, mtop)
        elif cond == "NEW2":
            mtop = mtop if mtop is not None else _diag_m_top(ctx)
            mt = {v.p: v for v in mtop}
            out.append(_new2_from({R: [_diag_new1_for(ctx, p, R, mt.get(p)) for p in ctx.p_list] for R in cfg.R_grid}))
    return Classification(A.label, space.matrix.describe(), out)


# -- implication closure ----------------------------------------------------

IMPLIES = (
    ("A-BDD", "A-BDD-GEN"),
    ("A-BDD-GEN", "A-BDD"),
    ("A-BDD", "M-TOP"),
    ("M-TOP", "TOP"),
    ("M-TOP", "NEW1"),
    ("NEW1", "NEW2"),
    ("NEW1", "TOP"),
    ("NEW2", "TOP"),
)


@dataclass
class ClosureResult:
    consistent: bool
    violations: list
    statuses: dict
    derived: list


def _status_map(items):
    if isinstance(items, Classification):
        return items.statuses(), items.verdicts
    if isinstance(items, dict) and all(isinstance(v, str) for v in items.values()):
        return dict(items), []
    by = {}
    verdicts = []
    for r in items:
        if isinstance(r, Verdict):
            verdicts.append(r)
            by.setdefault(r.condition, []).append(r)
        else:
            by.setdefault(r["condition"], []).append(Verdict(r["condition"], r["status"], r.get("scope", PROBED)))
    return {c: aggregate(vs) for c, vs in by.items()}, verdicts


def implication_closure(reports) -> ClosureResult:
    """Check A-BDD => M-TOP => TOP and M-TOP => NEW1 => NEW2, NEW1/NEW2 => TOP.

    ``reports`` is a Classification, a list of Verdicts or records, or a plain
    {condition: status} map.  Certificates are pushed forward and refutations
    backward; a certified premise with a refuted conclusion is a violation.
    """
    direct, verdicts = _status_map(reports)
    violations = [(a, b) for a, b in IMPLIES if direct.get(a) == "certified" and direct.get(b) == "refuted"]
    status = dict(direct)
    changed = True
    while changed:
        changed = False
        for a, b in IMPLIES:
            if status.get(a) == "certified" and status.get(b) in (None, "inconclusive"):
                status[b] = "certified"
                changed = True
            if status.get(b) == "refuted" and status.get(a) in (None, "inconclusive"):
                status[a] = "refuted"
                changed = True
    derived = []
    for v in verdicts:
        if v.condition in ("A-BDD", "A-BDD-GEN", "M-TOP") and v.status == "certified" and v.mu_const is not None:
            derived.append(Verdict("NEW1", "certified", DERIVED, p=v.p, R=math.inf, q=v.q, M=v.M, mu_const=v.mu_const,
                                   mu=mucalc.from_geometric(v.M or 1.0, v.mu_const, pair=(v.p, v.q)),
                                   note=f"from {v.condition}: geometric mu_n, radius inf"))
    for c, st in status.items():
        if c not in direct or direct[c] == "inconclusive":
            if st != "inconclusive":
                derived.append(Verdict(c, st, DERIVED, note="implied by the hierarchy"))
    return ClosureResult(not violations, violations, status, derived)


# -- sectional construction for spaces without a continuous norm ------------


@dataclass
class Cor44Result:
    j_indices: list
    operator: DiagonalOperator
    expected: dict


def _k0_array(B: KotheMatrix, js: np.ndarray, K_cap: int = 1 << 40) -> np.ndarray:
    js = np.asarray(js, dtype=np.longdouble)
    if B.family == "omega":
        return js
    if B.family == "s":
        return np.ones(js.shape, dtype=np.longdouble)
    lo = np.ones(js.shape, dtype=np.int64)
    hi = np.full(js.shape, K_cap, dtype=np.int64)
    jl = js
    pos_cap = B.entry_array(jl, hi.astype(np.longdouble)) > 0
    while np.any(lo < hi):
        mid = (lo + hi) // 2
        pos = B.entry_array(jl, mid.astype(np.longdouble)) > 0
        hi = np.where(pos, mid, hi)
        lo = np.where(pos, lo, mid + 1)
    return np.where(pos_cap, lo.astype(np.longdouble), np.inf)


def construct_cor44_operator(B: KotheMatrix, r: float = math.inf, n_show: int = 20, J_check: int = 10_000) -> Cor44Result:
    """Diagonal operator with a_{j_n} = n on indices j_n with b_{j_n,n} = 0 < b_{j_n,n+1}.

    Expected: not a-bounded, but m-topologizable.  Raises
    ConstructionInapplicable when some column is a norm.
    """
    cn = has_continuous_norm(B, J_check, 64)
    if cn.status == "certified":
        raise ConstructionInapplicable(f"column {cn.k0} is a norm: construction inapplicable")
    js = np.arange(1, J_check + 1)
    k0 = _k0_array(B, js)
    if np.any(np.diff(k0) < 0):
        raise ConstructionInapplicable("row supports are not nested on the probed window")
    j_idx = []
    for n in range(1, n_show + 1):
        hit = np.nonzero(k0 == n + 1)[0]
        if hit.size:
            j_idx.append(int(hit[0]) + 1)

    def symbol(jarr, _B=B):
        jarr = np.asarray(jarr, dtype=np.longdouble)
        cur = _k0_array(_B, jarr)
        # past 2^63 the integer j - 1 is not representable; use the next smaller float
        before = np.where(jarr - 1 == jarr, np.nextafter(jarr, np.longdouble(0)), jarr - 1)
        prev = np.where(jarr > 1, _k0_array(_B, np.maximum(before, 1)), 1.0)
        first = (cur > prev) | (jarr == 1)
        return np.where(first & np.isfinite(cur), cur - 1, 0.0)

    A = DiagonalOperator(symbol, label=f"sectional({B.describe()})")
    return Cor44Result(j_idx, A, {"A-BDD": "refuted", "M-TOP": "certified"})


# -- certificate sources for evaluation plans -------------------------------


def certificate_source(A, space, R: float, cfg: ProbeConfig = ProbeConfig()):
    """Return p -> certified NEW1 verdict at horizon R (cached); raises NotCertified.

    The verdict always carries a LogMuSequence in ``mu`` (geometric data is
    materialized), so callers can sum f(t) = sum mu_n t^n / n! directly.
    """
    cache = {}
    tol = mucalc.RADIUS_TOL
    if isinstance(A, DiagonalOperator) and isinstance(space, SpaceDescriptor):
        ctx = _DiagonalContext(A, space, cfg)

        def find(p):
            if ctx.bounded:
                full = ctx.sup[0]
                mu = math.exp(full) if full > -math.inf else 1.0
                v = Verdict("NEW1", "certified", PROBED, p=p, R=R, q=p, M=1.0, mu_const=mu if mu > 0 else 1.0)
            else:
                if ctx.continuous(p):
                    raise NotCertified(f"continuity not certified for p={p}")
                v = _diag_new1_for(ctx, p, R, None)
            return v

    elif isinstance(A, TaylorDifferentiation) and isinstance(space, HolSpace):

        def find(p):
            space.check_index(p)
            s = p + R * (1 + 2 * tol) if math.isinf(space.radius) else p + (space.radius - p) * 16 / 17
            if not s - p > R * (1 + tol):
                return Verdict("NEW1", "inconclusive", PROBED, p=p, R=R)
            return Verdict("NEW1", "certified", CLOSED, p=p, R=R, q=s, mu=mucalc.from_cauchy(p, s))

    else:
        raise NotCertified(f"no certificate source for {A!r} on {space!r}")

    def source(p):
        if p not in cache:
            v = find(p)
            if v.status != "certified":
                raise NotCertified(f"no NEW1 certificate for p={p} at R={R}")
            if v.mu is None:
                v = replace(v, mu=mucalc.from_geometric(v.M or 1.0, v.mu_const, pair=(p, v.q)))
            cache[p] = v
        return cache[p]

    return source
