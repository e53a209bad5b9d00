"""LASSO by cyclic coordinate descent, certified through the KKT conditions.

The objective is ``||y - X b||^2 / 2 + lam * ||b||_1`` with no 1/n factor on
the loss. A point b is optimal iff for every j

    x_j'(y - X b) = sign(b_j) * lam      if b_j != 0
    |x_j'(y - X b)| <= lam               if b_j == 0
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .design import as_design
from .exceptions import NonConvergenceError, PreconditionError

ZERO_DUST = 1e-12
DEFAULT_TOL = 1e-8
DEFAULT_MAX_SWEEPS = 100_000
MIN_BATCH = 10


@dataclass(frozen=True)
class KktReport:
    active_residual: float
    inactive_excess: float
    satisfied: bool
    tol: float
    # some zero coordinate sits within tol of the boundary |x_j'r| = lam
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            "active_residual": self.active_residual,
            "inactive_excess": self.inactive_excess,
            "satisfied": self.satisfied,
            "degenerate": self.degenerate,
        }


@dataclass(frozen=True)
class LassoSolution:
    lam: float
    beta_hat: np.ndarray
    kkt: KktReport
    n_sweeps: int = 0
    objective_history: tuple = field(default=(), repr=False, compare=False)

    @property
    def selected(self) -> tuple[int, ...]:
        return tuple(int(j) for j in np.flatnonzero(self.beta_hat))

    @property
    def q_hat(self) -> int:
        return int(np.count_nonzero(self.beta_hat))

    def to_dict(self) -> dict:
        return {
            "lambda": float(self.lam),
            "beta_hat": [float(b) for b in self.beta_hat],
            "selected": list(self.selected),
            "q_hat": self.q_hat,
            "kkt": self.kkt.to_dict(),
        }


def soft_threshold(z, t):
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)


def lasso_objective(X, y, beta, lam) -> float:
    X = as_design(X)
    r = np.asarray(y, dtype=float) - X.entries @ beta
    return 0.5 * float(r @ r) + lam * float(np.abs(beta).sum())


def _kkt_from_gradient(c, beta, lam, tol) -> KktReport:
    active = beta != 0
    scale = tol * max(lam, 1.0)
    if active.any():
        act = float(np.max(np.abs(c[active] - np.sign(beta[active]) * lam)))
    else:
        act = 0.0
    if (~active).any():
        slack = np.abs(c[~active]) - lam
        inact = float(max(slack.max(), 0.0))
        degenerate = bool(np.any(np.abs(slack) <= scale))
    else:
        inact = 0.0
        degenerate = False
    return KktReport(act, inact, bool(act <= scale and inact <= scale), tol, degenerate)


def kkt_report(X, y, beta, lam: float, tol: float = DEFAULT_TOL) -> KktReport:
    """Evaluate the KKT residuals of ``beta`` without modifying it."""
    X = as_design(X)
    y = np.asarray(y, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if y.shape != (X.n,) or beta.shape != (X.p,):
        raise ValueError("dimension mismatch between X, y and beta")
    c = X.entries.T @ (y - X.entries @ beta)
    return _kkt_from_gradient(c, beta, lam, tol)


def _check_inputs(X, y, lam):
    X = as_design(X)
    y = np.asarray(y, dtype=float)
    if y.shape != (X.n,):
        raise ValueError(f"y has shape {y.shape}, expected ({X.n},)")
    if not np.all(np.isfinite(y)):
        raise ValueError("y contains non-finite values")
    if not np.isfinite(lam) or lam < 0:
        raise PreconditionError(f"lambda must be finite and >= 0, got {lam}")
    return X, y


class _GramCache:
    """Columns of X'X, computed on first use."""

    def __init__(self, X):
        self.X = X
        self.cols = {}

    def __getitem__(self, j):
        col = self.cols.get(j)
        if col is None:
            col = self.X.T @ self.X[:, j]
            self.cols[j] = col
        return col


def solve_lasso(X, y, lam: float, tol: float = DEFAULT_TOL,
                max_sweeps: int = DEFAULT_MAX_SWEEPS, beta0=None,
                record_objective: bool = False) -> LassoSolution:
    """Minimize ``||y - Xb||^2/2 + lam ||b||_1`` by cyclic coordinate descent.

    Each outer pass forms a working set from the current support plus the
    worst zero coordinates violating their KKT inequality (at most
    ``max(10, 2 * support size)`` of them), then sweeps that set in index
    order until its own KKT residuals fall below ``tol * max(lam, 1) / 2``.
    The outer loop ends when the KKT check on a freshly recomputed residual
    passes for all p coordinates.

    Raises NonConvergenceError (carrying the last iterate) when ``max_sweeps``
    coordinate sweeps are used up first.
    """
    X, y = _check_inputs(X, y, lam)
    A = X.entries
    p = X.p
    col_sq = X.column_norms**2
    beta = np.zeros(p) if beta0 is None else np.array(beta0, dtype=float)
    if beta.shape != (p,):
        raise ValueError(f"beta0 has shape {beta.shape}, expected ({p},)")
    beta[col_sq == 0] = 0.0
    G = _GramCache(A)
    scale = tol * max(lam, 1.0)
    inner_scale = 0.5 * scale
    history = []

    def objective():
        r = y - A @ beta
        return 0.5 * float(r @ r) + lam * float(np.abs(beta).sum())

    if record_objective:
        history.append(objective())
    c = np.empty(p)

    def sweep(idx):
        for j in idx:
            old = beta[j]
            z = c[j] + col_sq[j] * old
            new = np.sign(z) * max(abs(z) - lam, 0.0) / col_sq[j]
            if abs(new) < ZERO_DUST:
                new = 0.0
            if new != old:
                c[:] -= G[j] * (new - old)
                beta[j] = new
        if record_objective:
            history.append(objective())

    def inner_ok(idx):
        sub = _kkt_from_gradient(c[idx], beta[idx], lam, tol)
        return sub.active_residual <= inner_scale and sub.inactive_excess <= inner_scale

    sweeps = 0
    while True:
        c[:] = A.T @ (y - A @ beta)
        report = _kkt_from_gradient(c, beta, lam, tol)
        if report.satisfied:
            return LassoSolution(lam, beta, report, sweeps, tuple(history))
        if sweeps >= max_sweeps:
            best = LassoSolution(lam, beta, report, sweeps, tuple(history))
            raise NonConvergenceError(
                f"no KKT point after {sweeps} sweeps (active residual "
                f"{report.active_residual:.3g}, inactive excess {report.inactive_excess:.3g})",
                solution=best,
            )
        # support plus the worst KKT violators, a bounded batch per outer pass
        viol = np.flatnonzero((beta == 0) & (np.abs(c) > lam) & (col_sq > 0))
        support = np.flatnonzero(beta != 0)
        limit = max(MIN_BATCH, 2 * support.size)
        if viol.size > limit:
            viol = viol[np.argsort(-np.abs(c[viol]), kind="stable")[:limit]]
        ws = np.union1d(support, viol)

        while sweeps < max_sweeps:
            sweeps += 1
            sweep(ws)
            if inner_ok(ws):
                break
            # cycle over the nonzero coordinates only, then re-check the working set
            act = ws[beta[ws] != 0]
            while sweeps < max_sweeps and act.size and not inner_ok(act):
                sweeps += 1
                sweep(act)
            if inner_ok(ws):
                break


def solve_path(X, y, lambdas: Sequence[float], tol: float = DEFAULT_TOL,
               max_sweeps: int = DEFAULT_MAX_SWEEPS) -> list[LassoSolution]:
    """Warm-started solutions over a strictly decreasing penalty grid."""
    lambdas = [float(v) for v in lambdas]
    if any(v < 0 for v in lambdas):
        raise PreconditionError("penalties must be >= 0")
    if any(b >= a for a, b in zip(lambdas, lambdas[1:])):
        raise PreconditionError("penalty grid must be strictly decreasing")
    X = as_design(X)
    out = []
    beta = None
    for k, lam in enumerate(lambdas):
        try:
            sol = solve_lasso(X, y, lam, tol=tol, max_sweeps=max_sweeps, beta0=beta)
        except NonConvergenceError as err:
            err.index = k
            err.args = (f"grid point {k} (lambda={lam}): {err.args[0]}",)
            raise
        out.append(sol)
        beta = sol.beta_hat
    return out


def lambda_max(X, y) -> float:
    """Smallest penalty at which the zero vector is optimal: ||X'y||_inf."""
    X = as_design(X)
    return float(np.max(np.abs(X.entries.T @ np.asarray(y, dtype=float))))
