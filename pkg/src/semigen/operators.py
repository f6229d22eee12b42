"""Diagonal operators and Taylor-coefficient differentiation on coefficient spaces.

Domination constants for diagonal operators reduce to one-dimensional suprema
over unit vectors:  ||A^n e_j||_p / ||e_j||_q = |a_j|^n b_{j,p} / b_{j,q}.
In log form this is ``n * log|a_j| + log b_{j,p} - log b_{j,q}``, i.e. a family of
lines in ``n``; their upper envelope gives log mu_n for every n at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Union

import numpy as np

from . import expr as dsl
from .errors import ConfigError, ImageEnvelopeError, NoDomination, NotCertified
from .seqspace import (
    DEFAULT_J_MAX,
    PROBED,
    CoefficientVector,
    Envelope,
    SpaceDescriptor,
    finite_vector,
)

LN10 = math.log(10.0)
STAB_TOL = 1e-3
FAR_U = 1200.0
FAR_DU = 0.05


# -- probe grid -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Probes:
    """Unit-vector indices used by scans: every j <= J_max plus a sparse far grid in log j."""

    js: np.ndarray
    u: np.ndarray
    J_max: int
    U: float
    key: tuple

    @property
    def dense(self):
        return self.js[: self.J_max]


@lru_cache(maxsize=16)
def probe_grid(J_max: int = DEFAULT_J_MAX, far_U: Optional[float] = FAR_U, du: float = FAR_DU) -> Probes:
    dense = np.arange(1, J_max + 1, dtype=np.longdouble)
    if far_U and far_U > math.log(J_max) + du:
        u_far = np.arange(math.log(J_max) + du, far_U + du / 2, du)
        far = np.unique(np.floor(np.exp(u_far.astype(np.longdouble))))
        far = far[far > J_max]
        js = np.concatenate([dense, far])
    else:
        js = dense
    u = np.log(js).astype(float)
    return Probes(js, u, J_max, float(u[-1]), (J_max, far_U, du))


_column_cache: dict = {}


def log_column(space: SpaceDescriptor, k: int, probes: Probes):
    key = (space.matrix, k, probes.key)
    col = _column_cache.get(key)
    if col is None:
        if len(_column_cache) > 512:
            _column_cache.clear()
        col = space.matrix.log_column(probes.js, k)
        _column_cache[key] = col
    return col


def decade_prefix_max(values, u, U, decades=3):
    """Running sup of ``values`` over u <= U - i*ln10 for i = decades, ..., 0."""
    out = []
    for i in range(decades, -1, -1):
        mask = u <= U - i * LN10 + 1e-12
        out.append(float(np.max(values[mask])) if mask.any() else -math.inf)
    return out


def is_stable(head, full, tol=STAB_TOL):
    """``full`` (log sup over all probes) does not exceed ``head`` (sup before the last decade)."""
    if full == -math.inf:
        return True
    return full - head <= math.log1p(tol)


def grows(prefix, tol=STAB_TOL):
    """Strict growth by more than ``tol`` (relative) across consecutive decades."""
    return all(np.isfinite(a) and b - a > math.log1p(tol) for a, b in zip(prefix, prefix[1:]))


# -- operators --------------------------------------------------------------


class DiagonalOperator:
    """A x = (a_j x_j)_j for a symbol given as DSL source in ``j`` or a numpy callable."""

    def __init__(self, symbol: Union[str, Callable], label: Optional[str] = None):
        if isinstance(symbol, str):
            node = dsl.compile_expr(symbol, {"j"})
            self._fn = lambda js: dsl.evaluate(node, {"j": js})
            self.label = label or symbol
        else:
            self._fn = symbol
            self.label = label or getattr(symbol, "__name__", "symbol")
        self._cache = {}

    def __repr__(self):
        return f"DiagonalOperator({self.label!r})"

    def values(self, js):
        js = np.asarray(js)
        out = self._fn(js.astype(np.longdouble) if js.dtype.kind in "iu" else js)
        return np.broadcast_to(np.asarray(out), js.shape)

    def log_abs(self, probes: Probes):
        key = ("log_abs", probes.key)
        if key not in self._cache:
            with np.errstate(divide="ignore", over="ignore"):
                la = np.log(np.abs(self.values(probes.js))).astype(float)
            la[np.isnan(la)] = math.inf
            self._cache[key] = la
        return self._cache[key]

    def sup_abs(self, probes: Probes):
        """(log sup|a_j|, prefix maxima over the last decades, stabilized?)."""
        la = self.log_abs(probes)
        prefix = decade_prefix_max(la, probes.u, probes.U)
        full = float(np.max(la))
        head = prefix[-2]
        return full, prefix, is_stable(head, full)

    def poly_growth(self, probes: Probes):
        """(C, beta) with |a_j| <= C j^beta on the probes and stabilized, or None."""
        key = ("poly", probes.key)
        if key not in self._cache:
            la = self.log_abs(probes)
            found = None
            for beta in (0.0, 0.125, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0):
                vals = la - beta * probes.u
                full = float(np.max(vals))
                if not math.isfinite(full) and full != -math.inf:
                    break
                head = decade_prefix_max(vals, probes.u, probes.U, decades=1)[0]
                if is_stable(head, full):
                    found = (math.exp(full) if full > -math.inf else 0.0, beta)
                    break
            self._cache[key] = found
        return self._cache[key]

    def log_growth(self, probes: Probes):
        """(alpha, gamma) with |a_j| <= alpha log j + gamma on the probes and stabilized, or None."""
        key = ("logg", probes.key)
        if key not in self._cache:
            with np.errstate(over="ignore"):
                absval = np.exp(self.log_abs(probes))
            found = None
            for alpha in (0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0):
                vals = absval - alpha * probes.u
                full = float(np.max(vals))
                if not math.isfinite(full):
                    break
                head = decade_prefix_max(vals, probes.u, probes.U, decades=1)[0]
                if full - head <= STAB_TOL * max(1.0, abs(head)):
                    found = (alpha, full)
                    break
            self._cache[key] = found
        return self._cache[key]


class TaylorDifferentiation:
    """f -> f' on Taylor coefficients: c_n -> (n+1) c_{n+1}."""

    label = "d/dz"

    def __repr__(self):
        return "TaylorDifferentiation()"


Operator = Union[DiagonalOperator, TaylorDifferentiation]


def identity() -> DiagonalOperator:
    return DiagonalOperator("1", "identity")


# -- application ------------------------------------------------------------


def _apply_diagonal(A: DiagonalOperator, x: CoefficientVector, probes: Optional[Probes] = None):
    env = x.envelope
    if env.support is not None:
        js = np.arange(x.start, env.support + 1)
        a = np.abs(np.asarray(A.values(js), dtype=float))
        new_env = Envelope(env.C * float(a.max(initial=0.0)), env.a, env.rho, env.factorial, env.support)
    else:
        growth = A.poly_growth(probes or probe_grid())
        if growth is None:
            raise ImageEnvelopeError(f"symbol {A.label} has no probed polynomial bound")
        C, beta = growth
        new_env = Envelope(env.C * C, env.a + beta, env.rho, env.factorial, None)

    def coeff(js, _x=x, _A=A):
        return np.asarray(_A.values(js), dtype=float) * np.asarray(_x.coeff(js))

    exact = None
    if x.exact is not None:
        js = np.arange(x.start, x.start + len(x.exact))
        a = np.asarray(A.values(js), dtype=float)
        exact = tuple(float(ai) * float(c) for ai, c in zip(a, x.exact))
    return CoefficientVector(coeff, new_env, f"{A.label}*{x.label}", x.start, exact)


def _apply_taylor(x: CoefficientVector):
    if x.exact is not None:
        c = list(x.exact)[1:]
        vals = [(i + 1) * ci for i, ci in enumerate(c)] or [0]
        return finite_vector(vals, start=0, label=f"d({x.label})")
    env = x.envelope
    f = env.factorial
    e = env.a + 1 - f
    new_env = Envelope(env.C * env.rho * 2.0 ** max(e, 0.0), env.a + 1 - f, env.rho, f, None)

    def coeff(js, _x=x):
        js = np.asarray(js)
        return (js + 1) * np.asarray(_x.coeff(js + 1))

    return CoefficientVector(coeff, new_env, f"d({x.label})", x.start)


def apply(A: Operator, x: CoefficientVector, probes: Optional[Probes] = None) -> CoefficientVector:
    """Coefficientwise image A x with a recomputed envelope."""
    if isinstance(A, TaylorDifferentiation):
        return _apply_taylor(x)
    return _apply_diagonal(A, x, probes)


def apply_power(A: Operator, n: int, x: CoefficientVector, probes: Optional[Probes] = None) -> CoefficientVector:
    if n < 0:
        raise ConfigError("power must be >= 0")
    for _ in range(n):
        x = apply(A, x, probes)
    return x


# -- domination constants ---------------------------------------------------


@dataclass(frozen=True)
class DominationWitness:
    p: int
    q: int
    n: int
    log_mu: float
    attaining_j: Optional[int]
    stabilized: bool
    scope: str = PROBED

    @property
    def mu(self):
        return math.exp(self.log_mu)


def _pair_logs(A, space, p, q, probes):
    la = A.log_abs(probes)
    lp = log_column(space, p, probes)
    lq = log_column(space, q, probes)
    bad = np.isfinite(lp) & np.isneginf(lq)
    return la, lp, lq, bad


def optimal_mu(A: DiagonalOperator, space: SpaceDescriptor, p: int, q: int, n: int, J_max: int = DEFAULT_J_MAX, probes: Optional[Probes] = None) -> DominationWitness:
    """log sup_j |a_j|^n b_{j,p} / b_{j,q}, the least constant on the probed unit vectors."""
    probes = probes or probe_grid(J_max, None)
    la, lp, lq, bad = _pair_logs(A, space, p, q, probes)
    if n == 0:
        culprits = np.nonzero(bad)[0]
    else:
        culprits = np.nonzero(bad & (la > -math.inf))[0]
    if culprits.size:
        raise NoDomination(int(probes.js[culprits[0]]))
    mask = np.isfinite(lp)
    if n > 0:
        mask &= la > -math.inf
    if not mask.any():
        return DominationWitness(p, q, n, -math.inf, None, True)
    vals = np.full(la.shape, -math.inf)
    vals[mask] = (n * la[mask] if n else 0.0) + lp[mask] - lq[mask]
    i = int(np.argmax(vals))
    full = float(vals[i])
    head = decade_prefix_max(vals, probes.u, probes.U, decades=1)[0]
    stable = is_stable(head, full)
    return DominationWitness(p, q, n, full, int(probes.js[i]) if stable else None, stable)


def upper_envelope(x, y):
    """Upper envelope of the lines n -> x_i * n + y_i for n >= 0.

    Returns (vertex indices into the inputs, breakpoints); vertex ``i`` is optimal
    for breakpoints[i-1] < n <= breakpoints[i].
    """
    idx = np.lexsort((y, x))
    xs, ys = x[idx], y[idx]
    keep = np.r_[xs[1:] != xs[:-1], True]
    xs, ys, idx = xs[keep], ys[keep], idx[keep]
    later = np.r_[np.maximum.accumulate(ys[::-1])[::-1][1:], -np.inf]
    keep = ys > later
    xs, ys, idx = xs[keep], ys[keep], idx[keep]
    passes = 0
    while len(xs) > 2:
        ax, ay, bx, by, cx, cy = xs[:-2], ys[:-2], xs[1:-1], ys[1:-1], xs[2:], ys[2:]
        drop = (by - ay) * (cx - ax) <= (cy - ay) * (bx - ax)
        if not drop.any():
            break
        keep = np.r_[True, ~drop, True]
        xs, ys, idx = xs[keep], ys[keep], idx[keep]
        passes += 1
        if passes > 64:
            xs, ys, idx = _monotone_chain(xs, ys, idx)
            break
    brk = (ys[:-1] - ys[1:]) / (xs[1:] - xs[:-1])
    return idx, brk


def _monotone_chain(xs, ys, idx):
    hull = []
    for i in range(len(xs)):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            if (ys[b] - ys[a]) * (xs[i] - xs[a]) <= (ys[i] - ys[a]) * (xs[b] - xs[a]):
                hull.pop()
            else:
                break
        hull.append(i)
    h = np.asarray(hull)
    return xs[h], ys[h], idx[h]


def _envelope_eval(x, y, ns):
    if x.size == 0:
        return np.full(ns.shape, -math.inf), np.full(ns.shape, -1)
    verts, brk = upper_envelope(x, y)
    pos = np.searchsorted(brk, ns, side="left")
    v = verts[pos]
    return ns * x[v] + y[v], v


@dataclass(frozen=True)
class MuScan:
    """log mu_n^opt(p, q) for n = 0..N over the probes."""

    p: int
    q: int
    log_mu: np.ndarray
    attaining_j: np.ndarray
    stabilized: np.ndarray
    no_domination_j: Optional[int] = None

    @property
    def all_stable(self):
        return bool(np.all(self.stabilized))


def scan_log_mu(A: DiagonalOperator, space: SpaceDescriptor, p: int, q: int, N: int, probes: Probes, tol=STAB_TOL) -> MuScan:
    la, lp, lq, bad = _pair_logs(A, space, p, q, probes)
    ns = np.arange(N + 1, dtype=float)
    log_mu = np.empty(N + 1)
    att = np.full(N + 1, -1, dtype=object)
    stab = np.ones(N + 1, dtype=bool)
    witness = None
    okp = np.isfinite(lp) & ~bad
    with np.errstate(invalid="ignore"):
        d = np.where(okp, lp - lq, -np.inf)
    # n = 0: the identity
    if bad.any():
        log_mu[0] = math.inf
        witness = int(probes.js[np.nonzero(bad)[0][0]])
        stab[0] = False
    else:
        i0 = int(np.argmax(d))
        log_mu[0] = float(d[i0])
        att[0] = int(probes.js[i0])
    bad_n = bad & (la > -math.inf)
    if bad_n.any() or np.any(okp & (la == math.inf)):
        log_mu[1:] = math.inf
        stab[1:] = False
        if witness is None:
            witness = int(probes.js[np.nonzero(bad_n | (okp & (la == math.inf)))[0][0]])
        return MuScan(p, q, log_mu, att, stab, witness)
    mask = okp & (la > -math.inf)
    x, y = la[mask], d[mask]
    where = np.nonzero(mask)[0]
    full, v = _envelope_eval(x, y, ns[1:])
    head_mask = probes.u[mask] <= probes.U - LN10 + 1e-12
    head, _ = _envelope_eval(x[head_mask], y[head_mask], ns[1:])
    log_mu[1:] = full
    for k, vi in enumerate(v, start=1):
        att[k] = int(probes.js[where[vi]]) if vi >= 0 else None
    with np.errstate(invalid="ignore"):
        stab[1:] = (full == -math.inf) | (full - head <= math.log1p(tol))
    return MuScan(p, q, log_mu, att, stab, witness)


def log_mu_at(A: DiagonalOperator, space: SpaceDescriptor, p: int, q: int, n: int, probes: Probes):
    """Per-decade prefix sups (over the last 3 decades of probes) of n log|a_j| + log b_{j,p} - log b_{j,q}."""
    la, lp, lq, bad = _pair_logs(A, space, p, q, probes)
    ok = np.isfinite(lp) & ~bad & (la > -math.inf)
    vals = np.full(la.shape, -math.inf)
    vals[ok] = n * la[ok] + lp[ok] - lq[ok]
    return decade_prefix_max(vals, probes.u, probes.U), vals


def continuity_check(A: DiagonalOperator, space: SpaceDescriptor, p: int, q_candidates, J_max: int = DEFAULT_J_MAX, probes: Optional[Probes] = None) -> DominationWitness:
    """First candidate q with a finite, stabilized constant in ||A x||_p <= mu ||x||_q."""
    probes = probes or probe_grid(J_max)
    for q in q_candidates:
        try:
            w = optimal_mu(A, space, p, q, 1, J_max, probes)
        except NoDomination:
            continue
        if w.stabilized and w.log_mu < math.inf:
            return w
    raise NotCertified(f"continuity not certified for p={p}")
