"""Function-space models: Taylor coefficients on discs, trig polynomials on compact intervals."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError, PrecisionLimit
from .seqspace import CoefficientVector, Envelope, SeminormValue, finite_vector, tail_bound

GRID_CAP = 1 << 20


@dataclass(frozen=True)
class TaylorFunction:
    """f(z) = sum_n c_n z^n with Taylor coefficients indexed from 0."""

    coefficients: CoefficientVector
    declared_radius: float = math.inf

    def __post_init__(self):
        if self.coefficients.start != 0:
            raise ConfigError("Taylor coefficients start at index 0")
        if not self.declared_radius > 0:
            raise ConfigError("declared radius must be positive")

    @property
    def is_polynomial(self):
        return self.coefficients.exact is not None

    @classmethod
    def polynomial(cls, coeffs: Sequence, radius: float = math.inf) -> "TaylorFunction":
        return cls(finite_vector(list(coeffs) or [0], start=0, label="poly"), radius)

    @classmethod
    def monomial(cls, m: int) -> "TaylorFunction":
        return cls.polynomial([0] * m + [1])

    @classmethod
    def exponential(cls) -> "TaylorFunction":
        from scipy.special import gammaln

        vec = CoefficientVector(lambda ns: np.exp(-gammaln(np.asarray(ns, dtype=float) + 1)), Envelope(C=1.0, factorial=1), "exp", 0)
        return cls(vec)

    def derivative(self) -> "TaylorFunction":
        from .operators import TaylorDifferentiation, apply

        return TaylorFunction(apply(TaylorDifferentiation(), self.coefficients), self.declared_radius)


def partial_geometric(k: int) -> TaylorFunction:
    """f_k(z) = 1 + z + ... + z^k."""
    return TaylorFunction.polynomial([1] * (k + 1))


def _poly_sup_on_circle(c: np.ndarray, q: float, tol: float):
    """sup_{|z|=q} |sum c_n z^n| and a certified error for the grid maximum."""
    n = np.arange(len(c))
    mag = np.abs(c) * np.power(q, n.astype(float))
    nz = np.nonzero(mag)[0]
    if nz.size == 0:
        return 0.0, 0.0
    if nz.size == 1:
        return float(mag[nz[0]]), 0.0
    if np.all(np.isreal(c)) and np.all(np.real(c) >= 0):
        # nonnegative coefficients: the modulus peaks at z = q
        return float(np.sum(mag)), 0.0
    # g(theta) = |f(q e^{i theta})|^2 is smooth with g' = 0 at its maximum, so a grid
    # of spacing 2 pi / M misses at most (pi/M)^2 sup|g''| / 2 of it.
    s0, s1, s2 = float(np.sum(mag)), float(np.sum(n * mag)), float(np.sum(n * n * mag))
    g2 = 2 * s2 * s0 + 2 * s1 * s1
    M = max(256, 2 * len(c), int(math.ceil(math.pi * math.sqrt(g2 / (2 * tol * max(tol, s0 * 1e-3))))))
    M = 1 << int(math.ceil(math.log2(min(M, GRID_CAP))))
    if len(c) > M:
        raise PrecisionLimit("polynomial degree exceeds grid cap")
    scaled = c * np.power(q, n.astype(float))
    vals = np.abs(np.fft.fft(scaled, n=M))  # values at z = q e^{-2 pi i m / M}
    top = float(vals.max())
    upper = math.sqrt(top * top + 0.5 * (math.pi / M) ** 2 * g2)
    return top, upper - top


def hd_seminorm(f: TaylorFunction, q: float, tol: float = 1e-10) -> SeminormValue:
    """sup_{|z|<=q} |f(z)|, evaluated on |z| = q with a certified error <= tol."""
    if not 0 < q < f.declared_radius:
        raise ConfigError(f"radius q={q} must lie in (0, {f.declared_radius})")
    x = f.coefficients
    if x.exact is not None:
        c = np.asarray([complex(v) for v in x.exact])
        c = c.real if np.all(c.imag == 0) else c
        value, err = _poly_sup_on_circle(c, q, tol)
        if err > tol:
            raise PrecisionLimit(f"grid error {err:.3g} above tol")
        return SeminormValue(value, err, q)
    env = x.envelope
    if env.factorial == 0 and env.rho * q >= 1:
        raise ConfigError(f"coefficient envelope does not converge at radius {q}")
    log_c = math.log(env.C) if env.C > 0 else -math.inf
    N = 16
    while True:
        tail = tail_bound(log_c, env.a, env.rho * q, env.factorial, N, 1)
        if tail <= tol / 2:
            break
        N *= 2
        if N > GRID_CAP:
            raise PrecisionLimit("Taylor tail did not reach tol")
    _, c = x.coords(N, start=0)
    value, err = _poly_sup_on_circle(np.asarray(c), q, tol / 2)
    if err > tol / 2:
        raise PrecisionLimit(f"grid error {err:.3g} above tol")
    return SeminormValue(value, err + tail, q)


def cauchy_mu(n: int, q: float, s: float) -> float:
    """log of n! s / (s - q)^(n+1)."""
    if not 0 < q < s:
        raise ConfigError("need 0 < q < s")
    return math.lgamma(n + 1) + math.log(s) - (n + 1) * math.log(s - q)


def taylor_shift(coeffs: Sequence, t) -> list:
    """Coefficients of f(z + t), exact for int/Fraction input."""
    d = len(coeffs) - 1
    out = []
    for m in range(d + 1):
        acc = 0
        for n in range(m, d + 1):
            acc += math.comb(n, m) * coeffs[n] * t ** (n - m)
        out.append(acc)
    return out


def horner(coeffs: Sequence, z):
    acc = 0
    for c in reversed(coeffs):
        acc = acc * z + c
    return acc


@dataclass(frozen=True)
class DivergenceWitness:
    k: int
    exact_value: Fraction
    lower_bound: Fraction

    @property
    def holds(self):
        return self.exact_value >= self.lower_bound


def divergence_witness(k: int) -> DivergenceWitness:
    """(T(1) f_k)(3/4) = f_k(7/4), computed by an exact Taylor shift, against (3/4)^k 2^k."""
    if k < 0:
        raise ConfigError("k must be >= 0")
    shifted = taylor_shift([1] * (k + 1), 1)
    value = horner([Fraction(c) for c in shifted], Fraction(3, 4))
    return DivergenceWitness(k, value, Fraction(3, 2) ** k)


# -- trig model -------------------------------------------------------------


@dataclass(frozen=True)
class TrigMode:
    k: int
    phase: str = "sin"
    amplitude: float = 1.0

    def __post_init__(self):
        if self.k < 1 or int(self.k) != self.k:
            raise ConfigError("frequency must be a positive integer")
        if self.phase not in ("sin", "cos"):
            raise ConfigError("phase must be sin or cos")

    def __call__(self, x):
        fn = np.sin if self.phase == "sin" else np.cos
        return self.amplitude * fn(self.k * np.asarray(x, dtype=float))

    def derivative(self) -> "TrigMode":
        if self.phase == "sin":
            return TrigMode(self.k, "cos", self.amplitude * self.k)
        return TrigMode(self.k, "sin", -self.amplitude * self.k)


@dataclass(frozen=True)
class TrigPolynomial:
    modes: tuple

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        for m in self.modes:
            out = out + m(x)
        return out

    def derivative(self) -> "TrigPolynomial":
        return TrigPolynomial(tuple(m.derivative() for m in self.modes))


def translate(f, t: float) -> TrigPolynomial:
    """Exact translation x -> f(x + t) by angle addition."""
    modes = f.modes if isinstance(f, TrigPolynomial) else (f,)
    out = []
    for m in modes:
        c, s = math.cos(m.k * t), math.sin(m.k * t)
        if m.phase == "sin":
            out += [TrigMode(m.k, "sin", m.amplitude * c), TrigMode(m.k, "cos", m.amplitude * s)]
        else:
            out += [TrigMode(m.k, "cos", m.amplitude * c), TrigMode(m.k, "sin", -m.amplitude * s)]
    return TrigPolynomial(tuple(out))


@dataclass(frozen=True)
class CompactSeminormIndex:
    p: int = 0
    interval: tuple = (0.0, 2 * math.pi)

    def __post_init__(self):
        if self.p < 0:
            raise ConfigError("derivative order must be >= 0")
        if not self.interval[1] > self.interval[0]:
            raise ConfigError("empty interval")


@dataclass(frozen=True)
class TrigNorm:
    log_value: float
    method: str
    flagged: bool = False

    @property
    def value(self):
        return math.exp(self.log_value)


def trig_norm_grid(mode: TrigMode, n: int, idx: CompactSeminormIndex, points: int = 10_000) -> float:
    xs = np.linspace(idx.interval[0], idx.interval[1], points)
    d = mode
    for _ in range(n):
        d = d.derivative()
    best = 0.0
    for _ in range(idx.p + 1):
        best = max(best, float(np.max(np.abs(d(xs)))))
        d = d.derivative()
    return best


def trig_norm(mode: TrigMode, n: int, idx: CompactSeminormIndex = CompactSeminormIndex(), points: int = 10_000) -> TrigNorm:
    """log of sup_{x in K, alpha <= p} |(d/dx)^(n+alpha) mode(x)|."""
    if n < 0:
        raise ConfigError("n must be >= 0")
    if idx.interval[1] - idx.interval[0] >= 2 * math.pi / mode.k:
        return TrigNorm(math.log(abs(mode.amplitude)) + (n + idx.p) * math.log(mode.k), "closed form")
    return TrigNorm(math.log(trig_norm_grid(mode, n, idx, points)), "grid", flagged=True)


def _exact(v) -> Fraction:
    if isinstance(v, (int, Fraction)):
        return Fraction(v)
    if isinstance(v, float):
        # decimal reading of the float, so 1e300 means 10^300
        return Fraction(repr(v))
    return Fraction(str(v))


@dataclass(frozen=True)
class CinftyWitness:
    p: int
    q: int
    n: int
    k: int
    mu_n: Fraction
    log_lhs: float
    log_rhs: float

    def verify(self) -> bool:
        return Fraction(self.k) ** (self.n + self.p) > self.mu_n * Fraction(self.k) ** self.q

    def record(self):
        digits = len(str(self.k))
        k_repr = str(self.k) if digits <= 30 else f"{str(self.k)[:12]}...({digits} digits)"
        return {"p": self.p, "q": self.q, "n": self.n, "k": k_repr, "log_k": math.log(self.k) if digits < 300 else _log_int(self.k),
                "log_lhs": self.log_lhs, "log_rhs": self.log_rhs}


def _log_int(v: int) -> float:
    shift = max(0, v.bit_length() - 60)
    return math.log(v >> shift) + shift * math.log(2)


def _log_frac(v: Fraction) -> float:
    return _log_int(v.numerator) - _log_int(v.denominator)


def cinfty_refutation(p: int, q: int, mu_list) -> CinftyWitness:
    """Smallest k with k^(n+p) > mu_n k^q for n = q - p + 1 (so k > mu_n).

    ``mu_list[n]`` is the proposed constant for the n-th power; entries may be
    ints, Fractions, decimal strings or floats.
    """
    if q < p or p < 0:
        raise ConfigError("need 0 <= p <= q")
    n = q - p + 1
    if len(mu_list) <= n:
        raise ConfigError(f"mu list must have an entry for n={n}")
    mu = _exact(mu_list[n])
    if mu <= 0:
        raise ConfigError("mu_n must be positive")
    # n + p - q = 1, so the comparison reduces to k > mu_n
    k = math.floor(mu) + 1
    w = CinftyWitness(p, q, n, k, mu, (n + p) * _log_int(k), _log_frac(mu) + q * _log_int(k))
    if not w.verify():
        raise AssertionError("witness comparison failed")
    return w


# -- space descriptors for classification -----------------------------------


@dataclass(frozen=True)
class HolSpace:
    """Holomorphic functions on the disc of radius ``radius`` (inf for entire functions).

    Seminorm indices are radii r in (0, radius) with ||f||_r = sup_{|z|<=r} |f(z)|.
    """

    radius: float = 1.0

    @property
    def family(self):
        return "hol_entire" if math.isinf(self.radius) else "hol_disc"

    def default_p_list(self):
        return (1.0, 2.0, 3.0) if math.isinf(self.radius) else (0.5, 0.75)

    def default_q_candidates(self, p):
        if math.isinf(self.radius):
            return tuple(p + i for i in range(1, 17))
        return tuple(p + (self.radius - p) * i / 17 for i in range(1, 17))

    def check_index(self, r):
        if not 0 < r < self.radius:
            raise ConfigError(f"seminorm radius {r} outside (0, {self.radius})")


@dataclass(frozen=True)
class TrigSpace:
    """Trig-polynomial model of C-infinity with seminorms ||f||_{K,p}, K fixed."""

    interval: tuple = (0.0, 2 * math.pi)

    family = "cinfty_trig"

    def default_p_list(self):
        return (0, 1, 2)

    def default_q_candidates(self, p):
        return tuple(range(p, p + 17))

    def check_index(self, p):
        if p < 0 or int(p) != p:
            raise ConfigError("derivative order must be a nonnegative integer")


class TrigDifferentiation:
    """d/dx acting on trig polynomials."""

    label = "d/dx"

    def __repr__(self):
        return "TrigDifferentiation()"


def monomial_lower_log_mu(n: int, p: float, s: float) -> float:
    """log sup_m ||D^n z^m||_p / ||z^m||_s = log max_m m!/(m-n)! p^(m-n) s^(-m).

    A lower bound for the optimal constant in ||f^(n)||_p <= mu_n ||f||_s.
    The summand is log-concave in m, so the maximum sits next to m = n s/(s-p) - 1.
    """
    if not 0 < p < s:
        raise ConfigError("need 0 < p < s")
    m_star = n * s / (s - p) - 1
    best = -math.inf
    for m in {n, max(n, math.floor(m_star)), max(n, math.ceil(m_star))}:
        v = math.lgamma(m + 1) - math.lgamma(m - n + 1) + (m - n) * math.log(p) - m * math.log(s)
        best = max(best, v)
    return best
