"""Explicit constants, penalty levels and probability bounds for rate consistency.

All quantities are pure arithmetic in the sparsity budget (q, eta1, eta2),
the sparse spectrum bounds (c_lower, c_upper) and the penalty level.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, asdict

from .exceptions import PreconditionError


@dataclass(frozen=True)
class SparsityBudget:
    q: int
    eta1: float = 0.0
    eta2: float = 0.0
    eta2_is_bound: bool = False

    def __post_init__(self):
        if self.q < 0 or self.eta1 < 0 or self.eta2 < 0:
            raise ValueError("q, eta1 and eta2 must be non-negative")


@dataclass(frozen=True)
class TheoryBounds:
    r1: float
    r2: float
    C: float
    m1_star: float
    m2_star: float
    m3_star: float
    lambda_star: float
    lambda_np: float | None
    q_hat_bound: float
    bias_bound: float
    zeta2_bound: float
    theorem2_threshold: float
    success_prob: float | None

    def to_dict(self) -> dict:
        out = {}
        for k, v in asdict(self).items():
            out[k] = "inf" if isinstance(v, float) and math.isinf(v) else v
        return out


def invariant_ratios(budget: SparsityBudget, c_lower: float, c_upper: float,
                     lam: float, n: int) -> tuple[float, float, float]:
    """Scale-invariant ratios (r1, r2, C).

    r1 = sqrt(c_upper eta1 n / (q lam)), r2 = sqrt(c_upper eta2^2 n / (q lam^2)),
    C = c_upper / c_lower.
    """
    if budget.q < 1:
        raise PreconditionError("q = 0 has no ratios; use theorem_bounds")
    if lam <= 0:
        raise ZeroDivisionError("penalty level must be positive")
    if not 0 < c_lower <= c_upper:
        raise PreconditionError("need 0 < c_lower <= c_upper")
    q = budget.q
    r1 = math.sqrt(c_upper * budget.eta1 * n / (q * lam))
    r2 = math.sqrt(c_upper * n / q) * budget.eta2 / lam
    return r1, r2, c_upper / c_lower


def m_star_constants(r1: float, r2: float, C: float) -> tuple[float, float, float]:
    if r1 < 0 or r2 < 0 or C < 1:
        raise PreconditionError("need r1, r2 >= 0 and C >= 1")
    sC = math.sqrt(C)
    m1 = 2 + 4 * r1**2 + 4 * sC * r2 + 4 * C
    m2 = (8 / 3) * (0.25 + r1**2 + r2 * math.sqrt(2 * C) * (1 + sC) + C * (0.5 + 4 * C / 3))
    m3 = (8 / 3) * (0.25 + r1**2 + r2 * sC * (1 + 2 * math.sqrt(1 + C))
                    + 0.75 * r2**2 + C * (7 / 6 + 2 * C / 3))
    return m1, m2, m3


def _m1_affine(budget: SparsityBudget, c_lower: float, c_upper: float, n: int):
    """Coefficients (a, b) with M1*(lam) q = a q + b / lam."""
    C = c_upper / c_lower
    a = 2 + 4 * C
    b = 4 * c_upper * budget.eta1 * n + 4 * math.sqrt(C) * math.sqrt(c_upper * n * budget.q) * budget.eta2
    return a, b


def lambda_star(budget: SparsityBudget, c_lower: float, c_upper: float, q_star: int,
                n: int) -> float:
    """Smallest penalty with M1*(lam) q + 1 <= q_star (infinite if none)."""
    if q_star < 1:
        raise PreconditionError("need q_star >= 1")
    if not 0 < c_lower <= c_upper:
        raise PreconditionError("need 0 < c_lower <= c_upper")
    a, b = _m1_affine(budget, c_lower, c_upper, n)
    room = q_star - 1 - a * budget.q
    if b == 0:
        return 0.0 if room >= 0 else math.inf
    if room <= 0:
        return math.inf
    return b / room


def lambda_np(sigma: float, c0: float, a_n: float, c_upper: float, n: int, p: int,
              warn: bool = True) -> float:
    """Noise-driven penalty floor 2 sigma sqrt(2 (1 + c0) c_upper n log(max(p, a_n)))."""
    if sigma <= 0 or c0 < 0 or a_n < 0 or p < 1:
        raise PreconditionError("need sigma > 0, c0 >= 0, a_n >= 0, p >= 1")
    base = max(p, a_n)
    if base <= 1:
        raise ValueError("log(max(p, a_n)) must be positive")
    ratio = p / base ** (1 + c0)
    if warn and ratio > 0.1:
        warnings.warn(f"p / max(p, a_n)^(1+c0) = {ratio:.3g} is not small", stacklevel=2)
    return 2 * sigma * math.sqrt(2 * (1 + c0) * c_upper * n * math.log(base))


def success_probability(p: int, a_n: float = 0.0, c0: float = 0.0) -> float:
    """Lower bound on the probability of the good event, clipped to [0, 1].

    2 - exp(2p / t) - 2 / t with t = max(p, a_n)^(1 + c0).
    """
    if p < 1:
        raise PreconditionError("p must be >= 1")
    t = max(p, a_n) ** (1 + c0)
    try:
        val = 2 - math.exp(2 * p / t) - 2 / t
    except OverflowError:
        return 0.0
    return min(max(val, 0.0), 1.0)


def theorem3_failure_bound(p: int, q: int, c0: float = 0.0) -> float:
    """Upper bound on the failure probability of the estimation-rate event, clipped to [0, 1]."""
    if p < 2 or q < 1:
        raise PreconditionError("need p >= 2 and q >= 1")
    val = (math.exp(2 / p**c0) - 1 + 2 / p ** (1 + c0)
           + (1 / p**2 + math.log(p) / (p**2 / 4)) ** ((q + 1) / 2))
    return min(max(val, 0.0), 1.0)


def theorem_bounds(budget: SparsityBudget, c_lower: float, c_upper: float, lam: float,
                   n: int, q_star: int | None = None, lam_np: float | None = None,
                   success_prob: float | None = None) -> TheoryBounds:
    """Assemble every bound at penalty ``lam``.

    For q = 0 the ratios are undefined and the reduced forms apply:
    q_hat <= 4 c_upper eta1 n / lam, bias^2 <= (8/3) eta1 lam, zeta2 = 0.
    """
    if lam <= 0:
        raise PreconditionError("penalty level must be positive")
    if not 0 < c_lower <= c_upper:
        raise PreconditionError("need 0 < c_lower <= c_upper")
    C = c_upper / c_lower
    q = budget.q
    if q == 0:
        r1 = r2 = 0.0
        m1, m2, m3 = m_star_constants(0.0, 0.0, C)
        q_hat_bound = 4 * c_upper * budget.eta1 * n / lam
        bias_bound = (8 / 3) * budget.eta1 * lam
        zeta2_bound = 0.0
        # M3* q recovered with r1^2 q = c_upper eta1 n / lam, r2^2 q = c_upper eta2^2 n / lam^2
        m3q = (8 / 3) * c_upper * n * (budget.eta1 / lam + 0.75 * budget.eta2**2 / lam**2)
        thr = m3q * lam**2 / (c_upper * c_lower * n**2)
    else:
        r1, r2, C = invariant_ratios(budget, c_lower, c_upper, lam, n)
        m1, m2, m3 = m_star_constants(r1, r2, C)
        q_hat_bound = m1 * q
        bias_bound = m2 * q * lam**2 / (c_upper * n)
        zeta2_bound = m3 * q * lam**2 / (c_upper * c_lower * n**2)
        thr = zeta2_bound
    lam_star = math.inf if q_star is None else lambda_star(budget, c_lower, c_upper, q_star, n)
    return TheoryBounds(
        r1=r1, r2=r2, C=C, m1_star=m1, m2_star=m2, m3_star=m3,
        lambda_star=lam_star, lambda_np=lam_np, q_hat_bound=q_hat_bound,
        bias_bound=bias_bound, zeta2_bound=zeta2_bound, theorem2_threshold=thr,
        success_prob=success_prob,
    )


@dataclass(frozen=True)
class Prop2Bound:
    probability: float
    tau_lower: float
    tau_upper: float


def log_binomial(p: int, m: int) -> float:
    return math.lgamma(p + 1) - math.lgamma(m + 1) - math.lgamma(p - m + 1)


def prop2_probability(eps1: float, eps2: float, eps3: float, eps4: float,
                      m: int, n: int, p: int) -> Prop2Bound:
    """Gaussian-design sparse spectrum probability bound 1 - 2 exp(-n eps4).

    Returns the bound with the spectrum factors (1 -+ eps1 - eps2)^2.
    """
    for name, e in (("eps1", eps1), ("eps2", eps2), ("eps3", eps3), ("eps4", eps4)):
        if not 0 < e < 1:
            raise PreconditionError(f"{name} must lie in (0, 1)", )
    if m < 1 or m > min(p, eps1**2 * n):
        raise PreconditionError(f"m={m} violates m <= min(p, eps1^2 n) = {min(p, eps1**2 * n)}")
    if eps1 + eps2 >= 1:
        raise PreconditionError("eps1 + eps2 must be < 1")
    if abs(eps3 + eps4 - eps2**2 / 2) > 1e-12:
        raise PreconditionError("eps3 + eps4 must equal eps2^2 / 2")
    lb = log_binomial(p, m)
    if lb > eps3 * n:
        raise PreconditionError(f"log binomial(p, m) = {lb:.4f} exceeds eps3 n = {eps3 * n:.4f}")
    prob = max(1 - 2 * math.exp(-n * eps4), 0.0)
    return Prop2Bound(prob, (1 - eps1 - eps2) ** 2, (1 + eps1 + eps2) ** 2)
