"""Sparse eigenvalue extremes and sparse Riesz condition certificates.

For a rank m the sparse extremes are

    c_lower(m) = min_{|A| = m} lambda_min(Sigma_A)
    c_upper(m) = max_{|A| = m} lambda_max(Sigma_A)

Exact values need all binomial(p, m) subsets. The Gersgorin-type certificate
only needs the correlation matrix; the sampled bracket is a heuristic for
designs too large to enumerate.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, asdict
from typing import Iterable, Iterator, Sequence

import numpy as np

from .design import as_design, gram, subset_gram
from .exceptions import BudgetExceededError, PreconditionError, SingularityError

DEFAULT_BUDGET = 10**6
DEFAULT_ALPHA_GRID = (1.0, 2.0, 4.0, math.inf)
_CHUNK = 4096

METHODS = ("exact", "gersgorin", "sampled")


@dataclass(frozen=True)
class SrcCertificate:
    rank: int
    c_lower: float
    c_upper: float
    method: str
    exact: bool
    delta: float | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if not 0 <= self.c_lower <= self.c_upper:
            raise ValueError(f"invalid bounds ({self.c_lower}, {self.c_upper})")
        if self.method == "sampled" and self.exact:
            raise ValueError("sampled certificates cannot be exact")
        if self.method == "gersgorin" and self.delta is None:
            raise ValueError("gersgorin certificates carry delta")

    @property
    def ratio(self) -> float:
        """Spectrum ratio C = c_upper / c_lower (infinite when c_lower is 0)."""
        return self.c_upper / self.c_lower if self.c_lower > 0 else math.inf

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class NoCertificate:
    """Gersgorin outcome when delta >= 1: the bound does not apply."""

    rank: int
    delta: float
    method: str = "gersgorin"

    def __bool__(self):
        return False

    def to_dict(self) -> dict:
        return {"rank": self.rank, "method": self.method, "delta": self.delta,
                "certified": False}


@dataclass(frozen=True)
class IrrepresentableDiagnostic:
    value: float
    kappa: float
    holds: bool

    def to_dict(self) -> dict:
        return asdict(self)


def _check_rank(m: int, p: int) -> int:
    m = int(m)
    if m < 1:
        raise IndexError(f"rank must be >= 1, got {m}")
    if m > p:
        raise IndexError(f"rank {m} exceeds p={p}")
    return m


def _combination_chunks(p: int, m: int, size: int = _CHUNK) -> Iterator[np.ndarray]:
    it = itertools.combinations(range(p), m)
    while True:
        block = list(itertools.islice(it, size))
        if not block:
            return
        yield np.array(block, dtype=np.intp)


def _batched_spectra(G: np.ndarray, idx: np.ndarray) -> np.ndarray:
    sub = G[idx[:, :, None], idx[:, None, :]]
    return np.linalg.eigvalsh(sub)


def sparse_extremes_exact(X, m: int, budget: int = DEFAULT_BUDGET) -> SrcCertificate:
    """Exact sparse extremes at rank m by enumerating every m-subset."""
    X = as_design(X)
    m = _check_rank(m, X.p)
    count = math.comb(X.p, m)
    if count > budget:
        raise BudgetExceededError(count, budget)
    G = gram(X)
    lo, hi = math.inf, -math.inf
    for idx in _combination_chunks(X.p, m):
        w = _batched_spectra(G, idx)
        lo = min(lo, float(w[:, 0].min()))
        hi = max(hi, float(w[:, -1].max()))
    return SrcCertificate(m, max(lo, 0.0), hi, "exact", True)


def sparse_extremes_profile(X, ranks: Iterable[int], budget: int = DEFAULT_BUDGET):
    """Map each rank to its exact certificate."""
    return {m: sparse_extremes_exact(X, m, budget) for m in ranks}


# -- Gersgorin-type certificate ------------------------------------------------

def _row_terms(R: np.ndarray, alpha: float) -> np.ndarray:
    """Per-row Holder term for a block of absolute off-diagonal correlations.

    ``R`` has shape (..., k, k) with zero diagonal. The term for row j is
    ``(sum_k |r_jk|^(a/(a-1)))^(a-1)``, which is ``max_k |r_jk|`` at a = 1.
    """
    if alpha == 1.0:
        return R.max(axis=-1)
    conj = alpha / (alpha - 1.0)
    return np.sum(R**conj, axis=-1) ** (alpha - 1.0)


def _delta_finite_alpha(R: np.ndarray, q: int, alpha: float, budget: int) -> float:
    p = R.shape[0]
    if math.comb(p, q) <= budget:
        best = 0.0
        for idx in _combination_chunks(p, q):
            sub = R[idx[:, :, None], idx[:, None, :]]
            vals = _row_terms(sub, alpha).sum(axis=-1)
            best = max(best, float(vals.max()))
        return best ** (1.0 / alpha)
    # row-wise relaxation: each row keeps its q-1 largest off-diagonal entries,
    # then the q largest row terms are summed
    top = -np.sort(-R, axis=1)[:, : q - 1]
    terms = _row_terms(top, alpha)
    return float(np.sort(terms)[::-1][:q].sum()) ** (1.0 / alpha)


def gersgorin_delta(X, q_star: int, alpha_grid: Sequence[float] = DEFAULT_ALPHA_GRID,
                    budget: int = DEFAULT_BUDGET) -> tuple[float, float]:
    """Smallest delta over the alpha grid, and the alpha achieving it."""
    X = as_design(X)
    if not X.standardized:
        raise PreconditionError("Gersgorin certificate needs a standardized design")
    q = _check_rank(q_star, X.p)
    grid = sorted(float(a) for a in alpha_grid)
    if not grid:
        raise PreconditionError("alpha grid is empty")
    if grid[0] < 1:
        raise PreconditionError("alpha grid exponents must be >= 1")
    if q == 1:
        return 0.0, grid[0]
    R = np.abs(gram(X))
    np.fill_diagonal(R, 0.0)
    best, best_alpha = math.inf, grid[0]
    for alpha in grid:
        if math.isinf(alpha):
            d = (q - 1) * float(R.max())
        else:
            d = _delta_finite_alpha(R, q, alpha, budget)
        if d < best:
            best, best_alpha = d, alpha
    return best, best_alpha


def gersgorin_certificate(X, q_star: int, alpha_grid: Sequence[float] = DEFAULT_ALPHA_GRID,
                          budget: int = DEFAULT_BUDGET):
    """Certificate (1 - delta, 1 + delta) when delta < 1, else NoCertificate."""
    delta, _ = gersgorin_delta(X, q_star, alpha_grid, budget)
    if delta >= 1.0:
        return NoCertificate(int(q_star), delta)
    return SrcCertificate(int(q_star), 1.0 - delta, 1.0 + delta, "gersgorin", False, delta)


# -- sampled bracket -----------------------------------------------------------

class _Evaluator:
    def __init__(self, G, budget):
        self.G = G
        self.budget = budget
        self.used = 0
        self.lo = math.inf
        self.hi = -math.inf

    @property
    def exhausted(self):
        return self.used >= self.budget

    def __call__(self, A):
        self.used += 1
        idx = np.asarray(A)
        w, V = np.linalg.eigh(self.G[np.ix_(idx, idx)])
        self.lo = min(self.lo, float(w[0]))
        self.hi = max(self.hi, float(w[-1]))
        return w, V


def _local_search(ev: _Evaluator, A: list[int], p: int, m: int, minimize: bool) -> None:
    """Greedy single swaps, accepted on strict improvement."""
    w, V = ev(A)
    k = 0 if minimize else -1
    current = w[k]
    cap = m * p
    spent = 0
    improved = True
    while improved and spent < cap and not ev.exhausted:
        improved = False
        v = V[:, k]
        outside = np.setdiff1d(np.arange(p), A)
        if outside.size == 0:
            return
        # columns most aligned with the extreme direction are tried first
        pull = np.abs(ev.G[np.ix_(outside, A)] @ v)
        order_in = outside[np.argsort(-pull, kind="stable")]
        order_out = np.argsort(np.abs(v), kind="stable")
        for pos in order_out:
            for j in order_in:
                if spent >= cap or ev.exhausted:
                    return
                trial = list(A)
                trial[pos] = int(j)
                spent += 1
                tw, tV = ev(trial)
                if (tw[k] < current) if minimize else (tw[k] > current):
                    A[:] = trial
                    current, V = tw[k], tV
                    improved = True
                    break
            if improved:
                break


def sampled_extremes(X, m: int, budget: int = 1000, seed: int = 0) -> SrcCertificate:
    """Heuristic bracket from random subsets refined by greedy swaps.

    ``c_lower`` is an upper bound on the true c_lower(m) and ``c_upper`` a lower
    bound on the true c_upper(m). When the budget covers every subset the
    exact certificate is returned instead.
    """
    X = as_design(X)
    m = _check_rank(m, X.p)
    if budget < 1:
        raise PreconditionError("budget must be >= 1")
    if math.comb(X.p, m) <= budget:
        return sparse_extremes_exact(X, m, budget=budget)
    rng = np.random.default_rng(seed)
    ev = _Evaluator(gram(X), budget)
    p = X.p
    while not ev.exhausted:
        start = sorted(rng.choice(p, size=m, replace=False).tolist())
        _local_search(ev, list(start), p, m, True)
        if ev.exhausted:
            break
        _local_search(ev, list(start), p, m, False)
    return SrcCertificate(m, max(ev.lo, 0.0), ev.hi, "sampled", False)


def certify(X, m: int, method: str = "exact", budget: int = DEFAULT_BUDGET, seed: int = 0,
            alpha_grid: Sequence[float] = DEFAULT_ALPHA_GRID):
    if method == "exact":
        return sparse_extremes_exact(X, m, budget)
    if method == "gersgorin":
        return gersgorin_certificate(X, m, alpha_grid, budget)
    if method == "sampled":
        return sampled_extremes(X, m, budget, seed)
    raise ValueError(f"unknown method {method!r}")


def irrepresentable_check(X, A1: Sequence[int], signs: Sequence[float],
                          kappa: float) -> IrrepresentableDiagnostic:
    """Strong irrepresentable diagnostic ||Sigma_21 Sigma_11^{-1} s_1||_inf < 1 - kappa."""
    X = as_design(X)
    if not 0 < kappa <= 1:
        raise PreconditionError("kappa must lie in (0, 1]")
    A1 = [int(a) for a in A1]
    if not A1:
        raise PreconditionError("A1 must be non-empty")
    s = np.asarray(signs, dtype=float)
    if s.shape != (len(A1),) or not np.all(np.abs(s) == 1):
        raise PreconditionError("signs must be a +/-1 vector over A1")
    order = np.argsort(A1)
    S11 = subset_gram(X, A1)
    s = s[order]
    if np.linalg.eigvalsh(S11.matrix)[0] <= 1e-10:
        raise SingularityError("Sigma_11 is singular")
    rest = np.setdiff1d(np.arange(X.p), S11.indices)
    if rest.size == 0:
        return IrrepresentableDiagnostic(0.0, kappa, True)
    S21 = X.entries[:, rest].T @ X.entries[:, list(S11.indices)] / X.n
    v = float(np.max(np.abs(S21 @ np.linalg.solve(S11.matrix, s))))
    return IrrepresentableDiagnostic(v, kappa, v < 1 - kappa)
