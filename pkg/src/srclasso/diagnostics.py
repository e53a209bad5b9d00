"""Selection-quality functionals computed against the true coefficients.

These need the true beta, so they are available in simulation only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import linalg

from .bounds import TheoryBounds
from .design import as_design
from .solver import LassoSolution

DEFAULT_ALPHAS = (0, 1, 2, math.inf)
ETA2_SUBSET_CAP = 2**16
RANK_RTOL = 1e-10


@dataclass(frozen=True)
class SparsityProfile:
    A0: tuple[int, ...]
    q: int
    eta1: float
    eta2_lower: float
    eta2_upper: float
    eta2_exact: bool
    # indices outside A0, i.e. the q largest |beta_j|
    large: tuple[int, ...] = ()

    def to_dict(self) -> dict:
        return {
            "A0": list(self.A0), "q": self.q, "eta1": self.eta1,
            "eta2_lower": self.eta2_lower, "eta2_upper": self.eta2_upper,
            "eta2_exact": self.eta2_exact,
        }


def _zeta_key(a) -> str:
    return "inf" if math.isinf(a) else str(int(a)) if float(a).is_integer() else str(a)


@dataclass(frozen=True)
class SelectionDiagnostics:
    q_hat: int
    q_tilde: int
    bias: float
    zeta: dict
    verdicts: dict
    losses: dict
    large_included: bool = field(default=False)

    def to_dict(self) -> dict:
        return {
            "q_hat": self.q_hat,
            "q_tilde": self.q_tilde,
            "bias": self.bias,
            "zeta": {_zeta_key(k): v for k, v in self.zeta.items()},
            "verdicts": dict(self.verdicts),
            "losses": dict(self.losses),
            "large_included": self.large_included,
        }


def split_small_large(beta, q: int) -> tuple[np.ndarray, np.ndarray]:
    """(A0, complement): A0 holds the p - q smallest |beta_j|.

    Ties in |beta_j| send the larger index to A0.
    """
    beta = np.asarray(beta, dtype=float)
    p = beta.size
    if not 0 <= q <= p:
        raise IndexError(f"q={q} outside [0, {p}]")
    order = np.lexsort((np.arange(p), -np.abs(beta)))
    large = np.sort(order[:q])
    small = np.sort(order[q:])
    return small, large


def _max_subset_norm_exact(V: np.ndarray) -> float:
    """max over subsets S of ||sum_{j in S} V[:, j]||, by enumerating all masks."""
    s = V.shape[1]
    if s == 0:
        return 0.0
    M = V.T @ V
    masks = ((np.arange(2**s)[:, None] >> np.arange(s)) & 1).astype(float)
    vals = np.einsum("ij,jk,ik->i", masks, M, masks)
    return math.sqrt(max(float(vals.max()), 0.0))


def _max_subset_norm_greedy(V: np.ndarray) -> float:
    M = V.T @ V
    s = M.shape[0]
    chosen = np.zeros(s, dtype=bool)
    value = 0.0
    cross = np.zeros(s)  # M @ 1_S
    while True:
        gain = 2 * cross + np.diag(M)
        gain[chosen] = -np.inf
        j = int(np.argmax(gain))
        if not np.isfinite(gain[j]) or gain[j] <= 0:
            break
        chosen[j] = True
        value += gain[j]
        cross += M[:, j]
    full = float(M.sum())
    return math.sqrt(max(value, full, 0.0))


def sparsity_profile(X, beta, q: int, eta2_budget: int = ETA2_SUBSET_CAP) -> SparsityProfile:
    X = as_design(X)
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (X.p,):
        raise ValueError("beta length does not match design")
    small, large = split_small_large(beta, q)
    eta1 = float(np.abs(beta[small]).sum())
    nz = small[beta[small] != 0]
    V = X.entries[:, nz] * beta[nz]
    norm_bound = float(X.column_norms.max()) * eta1
    if 2 ** nz.size <= eta2_budget:
        e = _max_subset_norm_exact(V)
        lo = hi = e
        exact = True
    else:
        M = V.T @ V
        lo = _max_subset_norm_greedy(V)
        hi = min(norm_bound, math.sqrt(float(np.maximum(M, 0).sum())))
        exact = False
    return SparsityProfile(tuple(int(j) for j in small), int(q), eta1, lo, hi, exact,
                           tuple(int(j) for j in large))


def selected_model_bias(X, beta, A_hat: Iterable[int]) -> float:
    """Norm of the part of X beta orthogonal to span{x_j : j in A_hat}."""
    X = as_design(X)
    mu = X.entries @ np.asarray(beta, dtype=float)
    idx = sorted(int(j) for j in A_hat)
    if not idx:
        return float(np.linalg.norm(mu))
    XA = X.entries[:, idx]
    Q, R, _ = linalg.qr(XA, mode="economic", pivoting=True)
    d = np.abs(np.diag(R))
    if d.size == 0 or d[0] == 0:
        return float(np.linalg.norm(mu))
    rank = int(np.sum(d > RANK_RTOL * d[0]))
    Qr = Q[:, :rank]
    resid = mu - Qr @ (Qr.T @ mu)
    return float(np.linalg.norm(resid))


def missing_coefficients(beta, A0: Iterable[int], A_hat: Iterable[int],
                         alphas: Sequence[float] = DEFAULT_ALPHAS) -> dict:
    """zeta_alpha of the large coefficients missed by the selection."""
    beta = np.asarray(beta, dtype=float)
    mask = np.ones(beta.size, dtype=bool)
    mask[list(A0)] = False
    mask[list(A_hat)] = False
    missing = np.abs(beta[mask])
    out = {}
    for a in alphas:
        if a == 0:
            out[a] = float(missing.size)
        elif missing.size == 0:
            out[a] = 0.0
        elif math.isinf(a):
            out[a] = float(missing.max())
        else:
            out[a] = float(np.sum(missing**a) ** (1.0 / a))
    return out


def estimation_losses(X, beta, beta_hat) -> dict:
    X = as_design(X)
    d = np.asarray(beta_hat, dtype=float) - np.asarray(beta, dtype=float)
    return {
        "prediction": float(np.linalg.norm(X.entries @ d)),
        "l1": float(np.abs(d).sum()),
        "l2": float(np.linalg.norm(d)),
        "linf": float(np.abs(d).max()) if d.size else 0.0,
    }


def theorem_verdicts(X, beta, profile: SparsityProfile, solution: LassoSolution,
                     bounds: TheoryBounds) -> SelectionDiagnostics:
    """Fill every diagnostic and compare against the bounds at solution.lam."""
    X = as_design(X)
    beta = np.asarray(beta, dtype=float)
    sel = solution.selected
    large = profile.large
    sel_set = set(sel)
    q_hat = len(sel)
    missing_large = [j for j in large if j not in sel_set]
    q_tilde = q_hat + len(missing_large)
    bias = selected_model_bias(X, beta, sel)
    zeta = missing_coefficients(beta, profile.A0, sel)
    thr = bounds.theorem2_threshold
    must = np.flatnonzero(beta**2 > thr)
    verdicts = {
        "q_tilde_bound": bool(q_tilde <= bounds.q_hat_bound),
        "bias_bound": bool(bias**2 <= bounds.bias_bound),
        "zeta2_bound": bool(zeta[2] ** 2 <= bounds.zeta2_bound),
        "theorem2_inclusion": bool(all(int(j) in sel_set for j in must)),
    }
    return SelectionDiagnostics(
        q_hat=q_hat, q_tilde=q_tilde, bias=bias, zeta=zeta, verdicts=verdicts,
        losses=estimation_losses(X, beta, solution.beta_hat),
        large_included=not missing_large,
    )
