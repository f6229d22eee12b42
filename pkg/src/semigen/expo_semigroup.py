"""T(t)x by the truncated exponential series, with certified errors in a target seminorm.

Error accounting for a partial sum S_N = sum_{n<=N} t^n A^n x / n!:

    p(T(t)x - S_N) <= q(x) * sum_{n>N} mu_n |t|^n / n!      (truncation)
                    + rounding of the longdouble evaluation

where (q, mu) comes from a certificate for p at a horizon R >= |t|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from . import mu_calculus as mucalc
from .classifier import ProbeConfig, certificate_source
from .errors import ConfigError, ErrorBudgetExhausted, ImageEnvelopeError, OutsideCertifiedDisc, PrecisionLimit
from .function_models import HolSpace, taylor_shift
from .operators import DiagonalOperator, TaylorDifferentiation, probe_grid
from .seqspace import CoefficientVector, Envelope, SpaceDescriptor, finite_vector, seminorm

EPS = float(np.finfo(np.longdouble).eps)


@dataclass
class EvaluationPlan:
    """Certificates (p -> q, mu) valid up to the horizon R, plus accuracy settings."""

    source: Callable
    R: float
    p_target: object = 1
    tol: float = 1e-10
    N_cap: int = 4096
    space: object = None

    def certificate(self, p=None):
        return self.source(self.p_target if p is None else p)

    def retarget(self, p) -> "EvaluationPlan":
        return replace(self, p_target=p)


def make_plan(A, space, R: float, p_target=1, tol: float = 1e-10, N_cap: int = 4096, cfg: ProbeConfig = ProbeConfig()) -> EvaluationPlan:
    if R <= 0 or tol <= 0:
        raise ConfigError("R and tol must be positive")
    return EvaluationPlan(certificate_source(A, space, R, cfg), R, p_target, tol, N_cap, space)


@dataclass
class TruncatedSemigroupValue:
    vector: CoefficientVector
    N_used: int
    p_target: object
    tail: float
    t: float
    parts: dict = field(default_factory=dict)

    def window(self, J: int):
        js, vals = self.vector.coords(J)
        return js, vals


# -- helpers ----------------------------------------------------------------


def _partial_exp(z, N):
    """sum_{n<=N} z^n / n! by Horner, elementwise in longdouble."""
    s = np.ones(np.shape(z), dtype=np.longdouble)
    for n in range(N, 0, -1):
        s = 1 + s * z / n
    return s


def _as_ld(v):
    v = np.asarray(v)
    return v if np.iscomplexobj(v) else v.astype(np.longdouble)


def _growth_envelope(A: DiagonalOperator, x: CoefficientVector, t: float) -> Envelope:
    """Envelope of (e^{t a_j} x_j) and of every partial sum: |.| <= e^{|t| |a_j|} |x_j|."""
    env = x.envelope
    if env.support is not None:
        js = np.arange(x.start, env.support + 1)
        a = np.abs(np.asarray(A.values(js), dtype=float))
        return Envelope(env.C * math.exp(abs(t) * float(a.max(initial=0.0))), env.a, env.rho, env.factorial, env.support)
    g = A.log_growth(probe_grid())
    if g is None:
        # e^{t a_j} outgrows every power of j: no usable envelope, which is
        # harmless where the seminorm only reads finitely many coordinates
        return Envelope(math.inf, env.a, env.rho, env.factorial, None)
    alpha, gamma = g
    return Envelope(env.C * math.exp(abs(t) * max(gamma, 0.0)), env.a + abs(t) * alpha, env.rho, env.factorial, None)


def _diag_vector(A, x, t, N, label):
    def coeff(js, _x=x, _A=A, _t=t, _N=N):
        a = np.asarray(_A.values(js), dtype=np.longdouble)
        z = np.longdouble(_t) * a
        base = _as_ld(_x.coeff(js))
        return base * (np.exp(z) if _N is None else _partial_exp(z, _N))

    return CoefficientVector(coeff, _growth_envelope(A, x, t), label, x.start)


def _rounding_vector(v: CoefficientVector, A, t):
    """|x_j| (4|z_j| + 2) e^{|z_j|} with z_j = t a_j, a coordinatewise Horner rounding bound in units of EPS.

    The degree-n term of s <- 1 + s z / n picks up at most 3n + 1 roundings of
    size EPS/2, which sums to (3|z| + 1) e^{|z|} EPS/2 whatever N is; the final
    product with x_j adds one more.  The remaining slack covers the rounding of
    z itself.  For the tail envelope, (4z + 2) e^z <= 2 e^{3z}.
    """

    def coeff(js, _v=v):
        z = abs(t) * np.abs(np.asarray(A.values(js), dtype=np.longdouble))
        return np.abs(_as_ld(_v.coeff(js))) * (4 * z + 2) * np.exp(z)

    return CoefficientVector(coeff, _growth_envelope(A, v, 3 * t).scaled(2.0), "rounding", v.start)


def diagonal_oracle(A: DiagonalOperator, x: CoefficientVector, t: float) -> CoefficientVector:
    """(e^{t a_j} x_j)_j, computed in longdouble."""
    if t == 0:
        return x
    return _diag_vector(A, x, t, None, f"oracle(t={t:g})")


def _check_horizon(t, plan):
    if abs(t) > plan.R:
        raise OutsideCertifiedDisc(f"|t|={abs(t)} beyond the certified horizon R={plan.R}; use evaluate_piecewise")


# -- evaluation -------------------------------------------------------------


def _evaluate_taylor(x: CoefficientVector, t, p_target):
    if x.exact is None:
        raise ImageEnvelopeError("Taylor evaluation is implemented for polynomials only")
    tt = Fraction(t) if isinstance(t, (int, Fraction)) else t
    coeffs = list(x.exact)
    shifted = taylor_shift(coeffs, tt)
    vec = finite_vector(shifted, start=0, label=f"T({t}){x.label}")
    return TruncatedSemigroupValue(vec, max(len(coeffs) - 1, 0), p_target, 0.0, t, {"truncation": 0.0, "rounding": 0.0})


def _evaluate_diag(A, x, t, plan: EvaluationPlan, space, budget=None):
    cert = plan.certificate()
    qx = seminorm(x, cert.q, space, tol=1e-3 * plan.tol).upper
    budget = plan.tol if budget is None else budget
    # the computed coordinates stay within EPS p(rounding vector) of the exact partial sum
    rounding = EPS * seminorm(_rounding_vector(x, A, t), plan.p_target, space, tol=1e-3 * plan.tol).upper
    if rounding >= budget:
        raise PrecisionLimit(f"rounding {rounding:.3g} alone exceeds the budget {budget:.3g}")
    if qx == 0:
        N, tb = 0, 0.0
    else:
        N, tb = mucalc.truncation_order(cert.mu, abs(t), (budget - rounding) / qx, plan.N_cap)
    trunc = qx * tb
    vec = _diag_vector(A, x, t, N, f"T({t:g})x")
    return TruncatedSemigroupValue(vec, N, plan.p_target, trunc + rounding, t,
                                   {"truncation": trunc, "rounding": rounding, "q": cert.q, "q_x": qx})


def evaluate(A, x: CoefficientVector, t: float, plan: EvaluationPlan) -> TruncatedSemigroupValue:
    """Partial sum of the exponential series at 0 <= t <= R with a certified tail in p_target."""
    if t < 0:
        raise ConfigError("evaluate needs t >= 0; use evaluate_group for negative times")
    return evaluate_group(A, x, t, plan)


def evaluate_group(A, x: CoefficientVector, t: float, plan: EvaluationPlan) -> TruncatedSemigroupValue:
    """Same series with signed t (the group extension); tails use |t|."""
    _check_horizon(t, plan)
    if isinstance(A, TaylorDifferentiation):
        return _evaluate_taylor(x, t, plan.p_target)
    if not isinstance(A, DiagonalOperator):
        raise ConfigError(f"no evaluator for {A!r}")
    if t == 0:
        return TruncatedSemigroupValue(x, 0, plan.p_target, 0.0, 0.0, {"truncation": 0.0, "rounding": 0.0})
    return _evaluate_diag(A, x, t, plan, plan.space)


@dataclass
class WindowValue:
    js: np.ndarray
    values: np.ndarray
    N_used: int
    tail: float  # max coordinate error over the window
    t: float


def evaluate_window(A: DiagonalOperator, x: CoefficientVector, t: float, J: int, tol: float = 1e-10, N_cap: int = 4096) -> WindowValue:
    """Coordinates 1..J of the partial sum, with a per-coordinate truncation bound.

    Needs no seminorm of x, so it also serves vectors outside the space
    (e.g. ones on s).  With z_j = |t a_j| the coordinate tail is
    |x_j| z^{N+1}/(N+1)! / (1 - z/(N+2)) once N + 2 > z.
    """
    js = np.arange(x.start, J + 1)
    a = np.asarray(A.values(js), dtype=np.longdouble)
    xs = np.abs(_as_ld(x.coeff(js)))
    z = float(np.max(np.abs(t * a), initial=0.0))
    xmax = float(np.max(xs, initial=0.0))
    N, tail = 0, 0.0
    if z > 0 and xmax > 0:
        for N in range(0, N_cap + 1):
            if N + 2 <= z:
                continue
            logt = (N + 1) * math.log(z) - mucalc.log_factorial(N + 1) - math.log1p(-z / (N + 2))
            tail = xmax * math.exp(logt)
            if tail <= tol:
                break
        else:
            raise ConfigError(f"N cap {N_cap} too small for |t a_j| up to {z:g}")
    vals = _as_ld(x.coeff(js)) * _partial_exp(np.longdouble(t) * a, N)
    zj = np.abs(t * a)
    tail += EPS * float(np.max(xs * (4 * zj + 2) * np.exp(zj), initial=0.0))
    return WindowValue(js, vals, N, tail, t)


def f_value(plan: EvaluationPlan, p, t: float) -> float:
    """Upper bound for f(t) = sum mu_n t^n / n! from the certificate for p (value + tail)."""
    cert = plan.certificate(p)
    if t == 0:
        return math.exp(cert.mu.log_mu[0])
    sv = mucalc.series_sum(cert.mu, t, tol=1e-12)
    return sv.value + sv.tail_bound


def evaluate_piecewise(A, x: CoefficientVector, t: float, R: float, plan: EvaluationPlan, budget: float = 1.0) -> TruncatedSemigroupValue:
    """T(t)x = T(R)^n T(w)x with t = nR + w, 0 <= w < R.

    Seminorm chain p_0 = p_target -> p_1 -> ... -> p_{n+1} from the
    certificates; the error in p_k after the step using (p_k -> p_{k+1}) is
    f_k(R) * err_{k+1} + p_{k+1}(y) * tail_k.
    """
    if t < 0 or R <= 0:
        raise ConfigError("need t >= 0 and R > 0")
    if R > plan.R:
        raise OutsideCertifiedDisc(f"step R={R} beyond certified horizon {plan.R}")
    n = int(math.floor(t / R + 1e-12))
    w = t - n * R
    if w < 0:
        w = 0.0
    if n == 0:
        return evaluate(A, x, t, plan)
    chain = [plan.p_target]
    for _ in range(n + 1):
        chain.append(plan.certificate(chain[-1]).q)
    # innermost: T(w) measured in p_n
    inner = evaluate(A, x, w, plan.retarget(chain[n]))
    y, err = inner.vector, inner.tail
    steps = [{"step": "w", "t": w, "p": chain[n], "err": err, "N": inner.N_used}]
    N_total = inner.N_used
    for k in range(n - 1, -1, -1):
        step_plan = plan.retarget(chain[k])
        fk = f_value(plan, chain[k], R)
        val = evaluate(A, y, R, step_plan)
        err = fk * err + val.tail
        N_total += val.N_used
        steps.append({"step": k, "t": R, "p": chain[k], "f_R": fk, "err": err, "N": val.N_used})
        if not math.isfinite(err) or err > budget:
            raise ErrorBudgetExhausted(f"propagated error {err:.3g} above budget at step {n - k}", n - k)
        y = val.vector
    return TruncatedSemigroupValue(y, N_total, plan.p_target, err, t, {"chain": chain, "steps": steps, "n": n, "w": w})


# -- verification -----------------------------------------------------------


def _difference(u: CoefficientVector, v: CoefficientVector, label="diff") -> CoefficientVector:
    def coeff(js, _u=u, _v=v):
        return _as_ld(_u.coeff(js)) - _as_ld(_v.coeff(js))

    return CoefficientVector(coeff, u.envelope.plus(v.envelope), label, u.start)


def _scaled(u: CoefficientVector, c) -> CoefficientVector:
    return CoefficientVector(lambda js, _u=u: _as_ld(_u.coeff(js)) * np.longdouble(c), u.envelope.scaled(c), u.label, u.start)


def distance(u: CoefficientVector, v: CoefficientVector, p, space, tol=1e-14) -> float:
    """Upper bound for p(u - v)."""
    if u is v:
        return 0.0
    return seminorm(_difference(u, v), p, space, tol=tol).upper


@dataclass
class ResidualReport:
    residual: float
    bound: float
    passed: bool
    detail: dict = field(default_factory=dict)

    @property
    def margin(self):
        return self.bound - self.residual


def verify_semigroup_law(A, x, t: float, s: float, p_target, plan: EvaluationPlan) -> ResidualReport:
    """p(T(t+s)x - T(t)T(s)x) against the sum of the constituent tails amplified by f(t)."""
    if min(t, s) < 0 or t + s > plan.R:
        raise ConfigError("need t, s >= 0 and t + s <= R")
    space = plan.space
    P = plan.retarget(p_target)
    lhs = evaluate(A, x, t + s, P)
    q = P.certificate().q
    inner = evaluate(A, x, s, plan.retarget(q))
    outer = evaluate(A, inner.vector, t, P)
    ft = f_value(plan, p_target, t)
    bound = lhs.tail + ft * inner.tail + outer.tail
    if isinstance(A, TaylorDifferentiation):
        res = _poly_distance(lhs.vector, outer.vector)
    else:
        res = distance(lhs.vector, outer.vector, p_target, space)
    return ResidualReport(res, bound, res <= bound, {"tails": [lhs.tail, inner.tail, outer.tail], "f_t": ft})


def _poly_distance(u, v):
    a, b = list(u.exact), list(v.exact)
    n = max(len(a), len(b))
    a += [0] * (n - len(a))
    b += [0] * (n - len(b))
    return float(sum(abs(x - y) for x, y in zip(a, b)))


def generator_bound(plan: EvaluationPlan, p, h: float) -> float:
    """(f(h) - f(0))/h - mu_1 = sum_{n>=2} mu_n h^(n-1) / n!, summed without cancellation."""
    cert = plan.certificate(p)
    sv = mucalc.series_sum(cert.mu, h, tol=1e-16, start=2)
    return (sv.value + sv.tail_bound) / h


def verify_generator(A: DiagonalOperator, x, h_list: Sequence[float], p_target, plan: EvaluationPlan) -> list:
    """Residuals p((T(h)x - x)/h - Ax) against q(x) ((f(h) - f(0))/h - mu_1) + tails."""
    from .operators import apply

    space = plan.space
    P = plan.retarget(p_target)
    cert = P.certificate()
    qx = seminorm(x, cert.q, space).upper
    Ax = apply(A, x)
    rows = []
    for h in h_list:
        if not 0 < h < 1:
            raise ConfigError("h must lie in (0, 1)")
        val = evaluate(A, x, h, P)
        quotient = _scaled(_difference(val.vector, x), 1.0 / h)
        res = distance(quotient, Ax, p_target, space)
        analytic = qx * generator_bound(plan, p_target, h)
        bound = analytic + val.tail / h
        rows.append(ResidualReport(res, bound, res <= bound, {"h": h, "analytic_bound": analytic, "tail_over_h": val.tail / h}))
    return rows


def continuity_modulus(A: DiagonalOperator, x_set, p_target, t: float, h_list: Sequence[float], plan: EvaluationPlan) -> list:
    """sup_x p(T(t)x - T(t+h)x) against f(t) sup_x q(x - T(h)x) (plus tails)."""
    space = plan.space
    P = plan.retarget(p_target)
    q = P.certificate().q
    ft = f_value(plan, p_target, t)
    rows = []
    for h in h_list:
        if t + h > plan.R:
            raise ConfigError("t + h beyond the certified horizon")
        mod, rhs, tails = 0.0, 0.0, 0.0
        for x in x_set:
            a = evaluate(A, x, t, P)
            b = a if h == 0 else evaluate(A, x, t + h, P)
            mod = max(mod, distance(a.vector, b.vector, p_target, space))
            if h == 0:
                continue
            c = evaluate(A, x, h, plan.retarget(q))
            rhs = max(rhs, distance(x, c.vector, q, space) + c.tail)
            tails = max(tails, a.tail + b.tail)
        bound = ft * rhs + tails
        rows.append(ResidualReport(mod, bound, mod <= bound, {"h": h, "f_t": ft, "q_x_minus_Thx": rhs}))
    return rows
