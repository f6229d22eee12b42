"""Köthe matrices, echelon space descriptors, coefficient vectors and certified seminorms."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import expr as dsl
from .errors import ConfigError, DomainError, PrecisionLimit, TailNotCertifiable

PROBED = "probed window"
DEFAULT_J_MAX = 100_000
DEFAULT_K_MAX = 64


# -- tail bounds ------------------------------------------------------------


def log_term(log_c, e, rho, f, j):
    """log of c * j^e * rho^j / (j!)^f."""
    if rho == 0:
        return -math.inf
    return log_c + e * math.log(j) + j * math.log(rho) - f * math.lgamma(j + 1)


def tail_bound(log_c, e, rho, f, J, r):
    """Upper bound for sum_{j>J} (c j^e rho^j / (j!)^f)^r, or the sup over j>J when r is inf.

    Raises TailNotCertifiable when the bound is infinite or needs a larger J.
    """
    if log_c == -math.inf or rho == 0:
        return 0.0
    if f == 0 and rho >= 1:
        if rho > 1:
            raise TailNotCertifiable("envelope grows geometrically")
        if math.isinf(r):
            if e > 0:
                raise TailNotCertifiable("tail sup is unbounded")
            return math.exp(log_c + e * math.log(J + 1))
        if r * e >= -1:
            raise TailNotCertifiable("tail series diverges")
        s = r * e
        return math.exp(r * log_c + (s + 1) * math.log(J)) / (-s - 1)
    eta = rho * max(1.0, ((J + 2) / (J + 1)) ** e) / (J + 2) ** f
    if eta >= 1:
        raise TailNotCertifiable("increase J")
    first = log_term(log_c, e, rho, f, J + 1)
    if math.isinf(r):
        return math.exp(first)
    return math.exp(r * first) / (1 - eta**r)


# -- vectors ----------------------------------------------------------------


@dataclass(frozen=True)
class Envelope:
    """Declared bound |x_j| <= C j^a rho^j / (j!)^f for j >= 1, optionally finitely supported."""

    C: float = 1.0
    a: float = 0.0
    rho: float = 1.0
    factorial: int = 0
    support: Optional[int] = None

    def log_bound(self, js):
        js = np.asarray(js, dtype=float)
        with np.errstate(divide="ignore"):
            out = (
                math.log(self.C) if self.C > 0 else -math.inf
            ) + self.a * np.log(np.maximum(js, 1.0)) + js * (math.log(self.rho) if self.rho > 0 else -math.inf)
        if self.factorial:
            from scipy.special import gammaln

            out = out - self.factorial * gammaln(js + 1)
        if self.support is not None:
            out = np.where(js > self.support, -math.inf, out)
        return out

    def plus(self, other: "Envelope") -> "Envelope":
        """An envelope dominating the sum of two vectors with these envelopes."""
        if self.support is not None and other.support is not None:
            support = max(self.support, other.support)
        else:
            support = None
        # dividing by j! only shrinks a bound, so a mixed pair keeps no factorial
        fac = 1 if (self.factorial and other.factorial) else 0
        return Envelope(
            C=self.C + other.C,
            a=max(self.a, other.a),
            rho=max(self.rho, other.rho),
            factorial=fac,
            support=support,
        )

    def scaled(self, c: float) -> "Envelope":
        return Envelope(self.C * abs(c), self.a, self.rho, self.factorial, self.support)


@dataclass(frozen=True)
class CoefficientVector:
    """A sequence given by a closed-form coefficient rule plus a decay envelope.

    ``coeff`` maps an integer numpy array of indices to coefficient values.
    ``start`` is the first index (1 for sequence spaces, 0 for Taylor coefficients).
    ``exact`` optionally holds the finitely many coefficients as Python numbers
    (ints or Fractions stay exact through Taylor-shift arithmetic).
    """

    coeff: Callable = field(compare=False)
    envelope: Envelope
    label: str = "x"
    start: int = 1
    exact: Optional[tuple] = None

    def coords(self, upto: int, start: Optional[int] = None):
        lo = self.start if start is None else start
        js = np.arange(lo, upto + 1)
        return js, np.asarray(self.coeff(js))

    def __call__(self, j):
        return self.coeff(np.asarray([j]))[0]

    @property
    def support(self):
        return self.envelope.support


def _finite_coeff(values, start):
    arr = np.asarray([complex(v) if isinstance(v, complex) else float(v) for v in values])

    def coeff(js):
        js = np.asarray(js)
        idx = js - start
        ok = (idx >= 0) & (idx < len(arr))
        out = np.zeros(js.shape, dtype=arr.dtype)
        out[ok] = arr[idx[ok]]
        return out

    return coeff


def finite_vector(values, start=1, label=None) -> CoefficientVector:
    values = tuple(values)
    nz = [i for i, v in enumerate(values) if v != 0]
    last = start + nz[-1] if nz else start
    C = max((abs(float(abs(v))) for v in values), default=0.0)
    env = Envelope(C=C, support=last)
    return CoefficientVector(_finite_coeff(values, start), env, label or f"finite{list(values)[:6]}", start, values)


def unit_vector(j0: int, start=1) -> CoefficientVector:
    """e_{j0}: a single coefficient 1 at index j0."""
    if j0 < start:
        raise ConfigError(f"unit vector index must be >= {start}")
    vals = [0] * (j0 - start) + [1]
    v = finite_vector(vals, start, label=f"e{j0}")
    return v


def ones() -> CoefficientVector:
    return CoefficientVector(lambda js: np.ones(np.shape(js)), Envelope(C=1.0), "ones")


def geometric(rho: float, C: float = 1.0) -> CoefficientVector:
    """x_j = C rho^j."""
    if not 0 <= rho:
        raise ConfigError("geometric ratio must be nonnegative")
    return CoefficientVector(
        lambda js: C * np.power(float(rho), np.asarray(js, dtype=float)), Envelope(C=abs(C), rho=rho), f"geometric({rho})"
    )


def power_decay(d: float, C: float = 1.0) -> CoefficientVector:
    """x_j = C j^-d."""
    return CoefficientVector(
        lambda js: C * np.power(np.asarray(js, dtype=float), -float(d)), Envelope(C=abs(C), a=-d), f"power({d})"
    )


def from_expr(src: str, envelope: Envelope, start=1) -> CoefficientVector:
    node = dsl.compile_expr(src, {"j"})

    def coeff(js):
        return np.broadcast_to(dsl.evaluate(node, {"j": np.asarray(js, dtype=float)}), np.shape(js)).astype(float)

    return CoefficientVector(coeff, envelope, src, start)


def check_envelope(x: CoefficientVector, J_max: int = 10_000):
    """Spot-check that the envelope dominates |x_j| on 1..J_max; raises ConfigError otherwise."""
    lo = max(x.start, 1)
    js = np.arange(lo, J_max + 1)
    vals = np.abs(np.asarray(x.coeff(js)))
    with np.errstate(divide="ignore"):
        logs = np.log(vals)
    bound = x.envelope.log_bound(js)
    bad = np.nonzero(logs > bound + 1e-9)[0]
    if bad.size:
        raise ConfigError(f"envelope of {x.label} violated at j={int(js[bad[0]])}")


# -- matrices ---------------------------------------------------------------

FAMILIES = ("omega", "s", "custom")


@dataclass(frozen=True)
class KotheMatrix:
    """Weights b_{j,k} (j, k >= 1) defining an echelon space.

    Built-in families: ``omega`` (b = 1 for j <= k, else 0) and ``s`` (b = j^k);
    ``custom`` evaluates a DSL expression in ``j`` and ``k``.
    """

    family: str
    b_expr: Optional[str] = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown Köthe family {self.family!r}")
        if self.family == "custom":
            if not self.b_expr:
                raise ConfigError("custom Köthe matrix needs b_expr")
            object.__setattr__(self, "_node", dsl.compile_expr(self.b_expr, {"j", "k"}))

    @classmethod
    def custom(cls, src):
        return cls("custom", src)

    def entry(self, j: int, k: int) -> float:
        if j < 1 or k < 1:
            raise ConfigError("Köthe indices start at 1")
        if self.family == "omega":
            return 1.0 if j <= k else 0.0
        if self.family == "s":
            return float(j) ** k
        return float(dsl.evaluate(self._node, {"j": float(j), "k": float(k)}))

    def entry_array(self, js, ks):
        """b_{j,k} elementwise over broadcast arrays of indices."""
        js, ks = np.broadcast_arrays(np.asarray(js, dtype=np.longdouble), np.asarray(ks, dtype=np.longdouble))
        if self.family == "omega":
            return np.where(js <= ks, 1.0, 0.0)
        if self.family == "s":
            with np.errstate(over="ignore"):
                return np.power(js, ks)
        return np.broadcast_to(np.asarray(dsl.evaluate(self._node, {"j": js, "k": ks})), js.shape)

    def log_column(self, js, k: int):
        """log b_{j,k} as float64 (-inf where the entry is zero); js may be longdouble."""
        js = np.asarray(js)
        if self.family == "omega":
            return np.where(js <= k, 0.0, -np.inf)
        if self.family == "s":
            return (k * np.log(js)).astype(float)
        env = {"j": js.astype(np.longdouble), "k": np.longdouble(k)}
        logs, signs = _log_abs_eval(self._node, env)
        logs = np.broadcast_to(np.asarray(logs, dtype=np.longdouble), js.shape)
        signs = np.broadcast_to(np.asarray(signs), js.shape)
        if np.any((signs < 0) & (logs > -np.inf)):
            raise ConfigError("Köthe matrix has a negative entry")
        return logs.astype(float)

    def column_growth(self, k: int):
        """('finite', J) when b_{j,k} = 0 for j > J, ('poly', c, deg) when b_{j,k} <= c j^deg, else None."""
        if self.family == "omega":
            return ("finite", k)
        if self.family == "s":
            return ("poly", 1.0, float(k))
        return None

    def describe(self):
        return self.b_expr if self.family == "custom" else self.family



def _log_abs_eval(node, env):
    """(log|v|, sign v) for a DSL tree, keeping exp/products/powers in log form.

    Entries such as exp(-j/k) underflow long before j = 10^5; their logarithms
    do not.
    """
    if isinstance(node, dsl.Call) and node.func == "exp":
        return dsl.evaluate(node.args[0], env), 1.0
    if isinstance(node, dsl.BinOp) and node.op in "*/":
        la, sa = _log_abs_eval(node.left, env)
        lb, sb = _log_abs_eval(node.right, env)
        if node.op == "/":
            if np.any(np.asarray(lb) == -np.inf):
                raise DomainError("division by zero")
            return la - lb, np.asarray(sa) * np.asarray(sb)
        return la + lb, np.asarray(sa) * np.asarray(sb)
    if isinstance(node, dsl.BinOp) and node.op == "^":
        la, sa = _log_abs_eval(node.left, env)
        if np.all(np.asarray(sa) > 0):
            return dsl.evaluate(node.right, env) * la, 1.0
    v = np.asarray(dsl.evaluate(node, env), dtype=np.longdouble)
    with np.errstate(divide="ignore"):
        return np.log(np.abs(v)), np.sign(v)

@dataclass(frozen=True)
class SpaceDescriptor:
    """lambda^r(B) with seminorms ||x||_k = (sum_j |b_{j,k} x_j|^r)^(1/r), sup for r = inf."""

    matrix: KotheMatrix
    r: float = math.inf

    def __post_init__(self):
        if not (math.isinf(self.r) or self.r >= 1):
            raise ConfigError("order r must be >= 1 or inf")

    @property
    def has_finite_columns(self):
        return self.matrix.column_growth(1) is not None and self.matrix.column_growth(1)[0] == "finite"


def parse_order(value) -> float:
    text = str(value).strip().lower()
    if text in ("inf", "infinity", "oo"):
        return math.inf
    try:
        r = float(text)
    except ValueError:
        raise ConfigError(f"bad order r={value!r}") from None
    if r < 1:
        raise ConfigError("order r must be >= 1")
    return r


def kothe_entry(B: KotheMatrix, j: int, k: int) -> float:
    return B.entry(j, k)


@dataclass
class ValidationReport:
    monotonicity_violations: list
    zero_rows: list
    J_max: int
    K_max: int
    scope: str = PROBED

    @property
    def valid(self):
        return not self.monotonicity_violations and not self.zero_rows


def _log_block(B, J_max, K_max):
    js = np.arange(1, J_max + 1)
    return np.stack([B.log_column(js, k) for k in range(1, K_max + 1)], axis=1)


def validate_kothe(B: KotheMatrix, J_max: int = DEFAULT_J_MAX, K_max: int = DEFAULT_K_MAX) -> ValidationReport:
    """List monotonicity violations b_{j,k} > b_{j,k+1} and rows with no positive entry."""
    if J_max < 1 or K_max < 1:
        raise ConfigError("J_max and K_max must be >= 1")
    L = _log_block(B, J_max, K_max)
    jj, kk = np.nonzero(L[:, :-1] > L[:, 1:])
    violations = [(int(j) + 1, int(k) + 1) for j, k in zip(jj, kk)]
    zero = np.nonzero(np.all(np.isneginf(L), axis=1))[0]
    return ValidationReport(violations, [int(j) + 1 for j in zero], J_max, K_max)


@dataclass
class ContinuousNormResult:
    status: str  # certified | refuted | inconclusive
    k0: Optional[int] = None
    zero_rows: dict = field(default_factory=dict)
    scope: str = PROBED


def has_continuous_norm(B: KotheMatrix, J_max: int = DEFAULT_J_MAX, K_max: int = DEFAULT_K_MAX) -> ContinuousNormResult:
    """Smallest k0 whose column is positive on 1..J_max, or a zero row j(k) for every k <= K_max."""
    js = np.arange(1, J_max + 1)
    zero_rows = {}
    for k in range(1, K_max + 1):
        col = B.log_column(js, k)
        z = np.nonzero(np.isneginf(col))[0]
        if z.size == 0:
            return ContinuousNormResult("certified", k0=k)
        zero_rows[k] = int(z[0]) + 1
    # a refutation whose last witness sits in the final decade of the window is not trusted
    if zero_rows[K_max] > J_max // 10:
        return ContinuousNormResult("inconclusive", zero_rows=zero_rows)
    return ContinuousNormResult("refuted", zero_rows=zero_rows)


# -- seminorms --------------------------------------------------------------


@dataclass(frozen=True)
class SeminormValue:
    value: float
    abs_error: float
    index: object

    @property
    def upper(self):
        return self.value + self.abs_error


def _head(x, k, space, J):
    """(||x restricted to j <= J||_k, sum of r-th powers or None for r = inf)."""
    js = np.arange(1, J + 1)
    r = space.r
    with np.errstate(over="ignore", invalid="ignore"):
        vals = np.abs(np.asarray(x.coeff(js), dtype=np.longdouble)) * space.matrix.entry_array(js, k)
    if np.all(np.isfinite(vals)) and not np.any(vals < 0):
        nz = vals[vals > 0]
        if math.isinf(r):
            return float(np.max(nz)) if nz.size else 0.0, None
        if nz.size <= 1:
            v = float(nz[0]) if nz.size else 0.0
            return v, v**r
        if r == 1:
            total = float(np.sum(nz))
            return total, total
        total = np.sum(nz**r)
        if np.isfinite(total):
            return float(total ** (1 / np.longdouble(r))), float(total)
    with np.errstate(divide="ignore"):
        logs = space.matrix.log_column(js, k) + np.log(np.abs(np.asarray(x.coeff(js), dtype=float)))
    if math.isinf(r):
        m = np.max(logs) if logs.size else -math.inf
        return math.exp(m) if m > -math.inf else 0.0, None
    finite = logs[np.isfinite(logs)]
    if finite.size == 0:
        return 0.0, 0.0
    total = float(np.sum(np.exp(r * finite)))
    return total ** (1 / r), total


def seminorm(x: CoefficientVector, k: int, space: SpaceDescriptor, tol: float = 1e-12, J_cap: int = 10_000_000) -> SeminormValue:
    """Certified ||x||_k: |value - ||x||_k| <= abs_error <= tol.

    Exact (abs_error 0) whenever x is finitely supported or the column vanishes
    beyond a finite index.
    """
    if x.start != 1:
        raise ConfigError("Köthe seminorms need a vector indexed from 1")
    growth = space.matrix.column_growth(k)
    env = x.envelope
    limits = []
    if env.support is not None:
        limits.append(env.support)
    if growth is not None and growth[0] == "finite":
        limits.append(growth[1])
    if limits:
        J = max(1, min(limits))
        if J > J_cap:
            raise PrecisionLimit(f"support {J} exceeds J cap")
        value, _ = _head(x, k, space, J)
        return SeminormValue(value, 0.0, k)
    if growth is None:
        raise TailNotCertifiable(f"column {k} growth unknown for custom matrix; use a finitely supported vector")
    if math.isinf(env.C):
        raise TailNotCertifiable(f"{x.label} has no decay envelope")
    _, c, deg = growth
    log_c = math.log(c) + (math.log(env.C) if env.C > 0 else -math.inf)
    e = deg + env.a
    r = space.r
    J = 64
    while True:
        try:
            tail = tail_bound(log_c, e, env.rho, env.factorial, J, r)
            err_est = tail if math.isinf(r) else tail ** (1 / r)
            if err_est <= tol:
                break
        except TailNotCertifiable:
            if env.rho >= 1 and env.factorial == 0:
                raise
        J *= 2
        if J > J_cap:
            raise PrecisionLimit(f"tolerance {tol} not reachable below J={J_cap}")
    value, total = _head(x, k, space, J)
    if math.isinf(r):
        err = max(0.0, tail - value)
    else:
        err = (total + tail) ** (1 / r) - value if total is not None else tail ** (1 / r)
        err = max(err, 0.0)
    return SeminormValue(value, err, k)
