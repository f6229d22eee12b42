"""Log-domain mu-sequences: radius of sum mu_n t^n / n!, certified sums and tail bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import gammaln

from . import expr as dsl
from .errors import ConfigError, IncreaseN, OutsideCertifiedDisc, PrecisionLimit

N_MAX = 1024
RADIUS_TOL = 0.01


def log_factorial(n):
    return gammaln(np.asarray(n, dtype=float) + 1)


@dataclass(frozen=True)
class LogMuSequence:
    """(log mu_n) for n = 0..N_max plus how to continue it beyond the window.

    ``origin`` is one of ``geometric``, ``power``, ``cauchy``, ``dsl``, ``scan``
    or ``explicit``; ``params`` holds the closed-form parameters.
    """

    log_mu: np.ndarray = field(compare=False)
    origin: str
    pair: tuple = (None, None)
    params: dict = field(default_factory=dict, compare=False)
    closed_form: Optional[Callable] = field(default=None, compare=False)

    @property
    def N_max(self):
        return len(self.log_mu) - 1

    def log_at(self, n: int) -> float:
        if n <= self.N_max:
            return float(self.log_mu[n])
        if self.closed_form is not None:
            return float(self.closed_form(n))
        raise PrecisionLimit(f"mu_{n} beyond the materialized window of a {self.origin} sequence")

    def extend(self, N: int) -> "LogMuSequence":
        if N <= self.N_max or self.closed_form is None:
            return self
        ns = np.arange(N + 1)
        return LogMuSequence(np.asarray(self.closed_form(ns), dtype=float), self.origin, self.pair, self.params, self.closed_form)

    def scaled(self, c: float) -> "LogMuSequence":
        lc = math.log(c)
        cf = self.closed_form
        return LogMuSequence(self.log_mu + lc, self.origin, self.pair, self.params, (lambda n: cf(n) + lc) if cf else None)

    def summary(self):
        if self.origin == "geometric":
            return f"M*mu^n, M={self.params['M']:.6g}, mu={self.params['mu']:.6g}"
        if self.origin == "power":
            return f"(n/{self.params['d']:g})^n e^-n"
        if self.origin == "cauchy":
            return f"n! s/(s-q)^(n+1), q={self.params['q']:g}, s={self.params['s']:g}"
        return f"{self.origin} sequence, N_max={self.N_max}"


def from_geometric(M: float, mu: float, N_max: int = N_MAX, pair=(None, None)) -> LogMuSequence:
    """mu_n = M mu^n."""
    if M <= 0 or mu <= 0:
        raise ConfigError("M and mu must be positive")
    lM, lmu = math.log(M), math.log(mu)

    def cf(n):
        return lM + np.asarray(n, dtype=float) * lmu

    return LogMuSequence(cf(np.arange(N_max + 1)), "geometric", pair, {"M": M, "mu": mu}, cf)


def from_power_form(d: float, N_max: int = N_MAX, C: float = 1.0, pair=(None, None)) -> LogMuSequence:
    """mu_n = C (n/d)^n e^-n, with mu_0 = C."""
    if d <= 0 or C <= 0:
        raise ConfigError("d and C must be positive")
    lC = math.log(C)

    def cf(n):
        n = np.asarray(n, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            v = n * np.log(n / d) - n
        return lC + np.where(n == 0, 0.0, v)

    return LogMuSequence(cf(np.arange(N_max + 1)), "power", pair, {"d": d, "C": C}, cf)


def from_cauchy(q: float, s: float, N_max: int = N_MAX, pair=None) -> LogMuSequence:
    """mu_n = n! s / (s - q)^(n+1) (Cauchy estimate between circles of radius q < s)."""
    if not 0 < q < s:
        raise ConfigError("need 0 < q < s")
    ls, lg = math.log(s), math.log(s - q)

    def cf(n):
        n = np.asarray(n, dtype=float)
        return log_factorial(n) + ls - (n + 1) * lg

    return LogMuSequence(cf(np.arange(N_max + 1)), "cauchy", pair or (q, s), {"q": q, "s": s}, cf)


def from_dsl(src: str, N_max: int = N_MAX, pair=(None, None)) -> LogMuSequence:
    node = dsl.compile_expr(src, {"n"})

    def cf(n):
        n = np.asarray(n, dtype=np.longdouble)
        vals = np.broadcast_to(dsl.evaluate(node, {"n": n}), n.shape)
        if np.any(vals < 0):
            raise ConfigError("mu closed form must be nonnegative")
        with np.errstate(divide="ignore"):
            return np.log(vals).astype(float)

    return LogMuSequence(cf(np.arange(N_max + 1)), "dsl", pair, {"expr": src}, cf)


def from_scan(log_mu, pair=(None, None)) -> LogMuSequence:
    return LogMuSequence(np.asarray(log_mu, dtype=float), "scan", pair, {})


def explicit(log_mu, pair=(None, None)) -> LogMuSequence:
    return LogMuSequence(np.asarray(log_mu, dtype=float), "explicit", pair, {})


# -- radius -----------------------------------------------------------------


@dataclass(frozen=True)
class RadiusEstimate:
    value: float
    stabilized: bool

    @property
    def infinite(self):
        return math.isinf(self.value)


def _root_values(mu: LogMuSequence):
    """(mu_n / (mu_0 n!))^(1/n) in logs over the last octave.

    Dividing by mu_0 leaves the limit unchanged and makes the finite-window
    estimate exactly invariant under mu_n -> c mu_n.
    """
    N = mu.N_max
    ns = np.arange(max(1, N // 2), N + 1)
    lm = mu.log_mu[ns]
    l0 = float(mu.log_mu[0])
    if not math.isfinite(l0):
        l0 = 0.0
    return ns, (lm - l0 - log_factorial(ns)) / ns


def radius(mu: LogMuSequence) -> RadiusEstimate:
    """Root-test estimate of the radius of convergence of sum mu_n t^n / n!.

    Uses the last octave n in [N/2, N] of the materialized window; returns inf
    when (log mu_n - log n!)/n is still falling like -log n there.
    """
    if mu.N_max < 64:
        raise ConfigError("radius needs at least 64 materialized terms")
    lm = mu.log_mu
    if np.any(lm == math.inf):
        return RadiusEstimate(0.0, True)
    if np.all(lm[1:] == -math.inf):
        return RadiusEstimate(math.inf, True)
    ns, r = _root_values(mu)
    finite = np.isfinite(r)
    if not finite.any():
        return RadiusEstimate(math.inf, True)
    ns, r = ns[finite], r[finite]
    if r[-1] - r[0] < -0.1:
        return RadiusEstimate(math.inf, bool(np.all(np.diff(r) <= 1e-12)))
    top = float(np.max(r))
    stable = float(top - np.min(r)) <= math.log1p(RADIUS_TOL)
    return RadiusEstimate(math.exp(-top), stable)


def certifies(mu: LogMuSequence, R: float) -> bool:
    """Stabilized radius strictly beyond R with the stabilization margin."""
    est = radius(mu)
    return est.stabilized and (est.infinite or est.value > R * (1 + RADIUS_TOL))


# -- sums and tails ---------------------------------------------------------


@dataclass(frozen=True)
class SeriesValue:
    value: float
    tail_bound: float
    N_used: int


def _log_terms(mu: LogMuSequence, t: float):
    ns = np.arange(mu.N_max + 1)
    if t == 0:
        out = np.full(ns.shape, -math.inf)
        out[0] = mu.log_mu[0]
        return out
    with np.errstate(invalid="ignore"):
        out = mu.log_mu + ns * math.log(t) - log_factorial(ns)
    return np.where(mu.log_mu == -math.inf, -math.inf, out)


def _beyond_ratio(mu: LogMuSequence, t: float, n0: int) -> float:
    """sup over n >= n0 of mu_{n+1} t / ((n+1) mu_n), from the origin's closed form."""
    o, p = mu.origin, mu.params
    if o == "geometric":
        return p["mu"] * t / (n0 + 1)
    if o == "power":
        return t / p["d"]
    if o == "cauchy":
        return t / (p["s"] - p["q"])
    if o in ("scan", "explicit", "dsl"):
        est = radius(mu)
        if not est.stabilized:
            return math.inf
        if est.infinite:
            return 0.0
        return t / est.value * (1 + RADIUS_TOL)
    return math.inf


def _tail_from_terms(mu, t, lt, N):
    """term_{N+1} / (1 - rho) with rho = sup_{n >= N+1} term_{n+1}/term_n."""
    M = mu.N_max
    if N + 1 > M:
        raise IncreaseN("N beyond the materialized window")
    a, b = lt[N + 1 : M], lt[N + 2 : M + 1]
    with np.errstate(invalid="ignore"):
        ratios = np.where((a == -math.inf) & (b == -math.inf), -math.inf, b - a)
    if np.any(np.isnan(ratios)):
        raise IncreaseN("ratio criterion not certifiable")
    log_rho = float(np.max(ratios)) if ratios.size else -math.inf
    rho = max(math.exp(log_rho) if log_rho < 700 else math.inf, _beyond_ratio(mu, t, M))
    if rho >= 1:
        raise IncreaseN(f"term ratio {rho:.4g} >= 1 after N={N}")
    return math.exp(lt[N + 1]) / (1 - rho) if lt[N + 1] > -math.inf else 0.0


def tail_bound(mu: LogMuSequence, t: float, N: int) -> float:
    """Certified upper bound for sum_{n > N} mu_n t^n / n!."""
    if t < 0:
        raise ConfigError("t must be nonnegative")
    if t == 0:
        return 0.0
    mu = mu.extend(N + 64)
    return _tail_from_terms(mu, t, _log_terms(mu, t), N)


def series_sum(mu: LogMuSequence, t: float, tol: float = 1e-12, start: int = 0, compensated: bool = False) -> SeriesValue:
    """f(t) = sum_{n >= start} mu_n t^n / n! with a certified tail below ``tol``."""
    if t < 0:
        raise ConfigError("t must be nonnegative")
    est = radius(mu)
    if not est.infinite and t >= est.value:
        raise OutsideCertifiedDisc(f"t={t} is not below the radius estimate {est.value:.6g}")
    lt = _log_terms(mu, t)
    terms = np.exp(lt)
    for N in range(start, mu.N_max):
        if t == 0:
            tail = 0.0
        else:
            try:
                tail = _tail_from_terms(mu, t, lt, N)
            except IncreaseN:
                continue
        if tail <= tol:
            part = terms[start : N + 1]
            value = math.fsum(part) if compensated else float(np.sum(part))
            return SeriesValue(value, tail, N)
    if mu.closed_form is not None and mu.N_max < 1 << 16:
        return series_sum(mu.extend(4 * mu.N_max), t, tol, start, compensated)
    raise PrecisionLimit(f"tail not below {tol} within N_max={mu.N_max}")


def truncation_order(mu: LogMuSequence, t: float, budget: float, N_cap: int = 4096):
    """Smallest N with tail_bound(mu, t, N) <= budget, as (N, tail)."""
    if t < 0:
        raise ConfigError("t must be nonnegative")
    if t == 0:
        return 0, 0.0
    if mu.closed_form is not None and mu.N_max < N_cap + 1:
        mu = mu.extend(N_cap + 1)
    lt = _log_terms(mu, t)
    for N in range(0, min(N_cap, mu.N_max - 1) + 1):
        try:
            tail = _tail_from_terms(mu, t, lt, N)
        except IncreaseN:
            continue
        if tail <= budget:
            return N, tail
    raise PrecisionLimit(f"tail above {budget:.3g} up to N={min(N_cap, mu.N_max - 1)}")
