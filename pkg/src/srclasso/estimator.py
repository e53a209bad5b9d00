"""scikit-learn compatible wrappers around the functional API."""
from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .certify import DEFAULT_ALPHA_GRID, DEFAULT_BUDGET, certify
from .design import DesignMatrix
from .exceptions import DegenerateColumnError
from .solver import DEFAULT_MAX_SWEEPS, DEFAULT_TOL, solve_lasso, solve_path


class ColumnStandardizer(TransformerMixin, BaseEstimator):
    """Scale columns to squared norm n (per the fitted sample size). No centering."""

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        norms = np.linalg.norm(X, axis=0)
        zero = np.flatnonzero(norms == 0)
        if zero.size:
            raise DegenerateColumnError(int(zero[0]))
        self.scale_ = np.sqrt(X.shape[0]) / norms
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "scale_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return X * self.scale_

    def inverse_transform(self, X):
        check_is_fitted(self, "scale_")
        return check_array(X, dtype=float) / self.scale_


class SrcLasso(RegressorMixin, BaseEstimator):
    """LASSO with penalty ``lam`` on the unnormalized loss ``||y - Xb||^2 / 2``.

    After ``fit``: ``coef_``, ``selected_`` (support indices), ``q_hat_``,
    ``kkt_`` and ``solution_``.
    """

    def __init__(self, lam=1.0, tol=DEFAULT_TOL, max_sweeps=DEFAULT_MAX_SWEEPS,
                 warm_start=False):
        self.lam = lam
        self.tol = tol
        self.max_sweeps = max_sweeps
        self.warm_start = warm_start

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float, y_numeric=True)
        beta0 = None
        if self.warm_start and getattr(self, "coef_", None) is not None \
                and self.coef_.shape == (X.shape[1],):
            beta0 = self.coef_
        sol = solve_lasso(DesignMatrix(X), y, float(self.lam), tol=self.tol,
                          max_sweeps=self.max_sweeps, beta0=beta0)
        self.solution_ = sol
        self.coef_ = sol.beta_hat
        self.selected_ = np.array(sol.selected, dtype=int)
        self.q_hat_ = sol.q_hat
        self.kkt_ = sol.kkt
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=float)
        return X @ self.coef_

    def path(self, X, y, lambdas):
        """Warm-started solutions over a strictly decreasing grid."""
        X, y = check_X_y(X, y, dtype=float, y_numeric=True)
        return solve_path(DesignMatrix(X), y, lambdas, tol=self.tol, max_sweeps=self.max_sweeps)


class SparseRieszCertifier(BaseEstimator):
    """Certify sparse spectrum bounds at rank ``rank``.

    ``fit`` stores ``certificate_``, which is a NoCertificate when the
    Gersgorin bound does not apply.
    """

    def __init__(self, rank=1, method="exact", budget=DEFAULT_BUDGET, seed=0,
                 alpha_grid=DEFAULT_ALPHA_GRID, standardize=True):
        self.rank = rank
        self.method = method
        self.budget = budget
        self.seed = seed
        self.alpha_grid = alpha_grid
        self.standardize = standardize

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        if self.standardize:
            X = ColumnStandardizer().fit_transform(X)
        D = DesignMatrix(X, standardized=self.standardize)
        self.certificate_ = certify(D, self.rank, self.method, budget=self.budget,
                                    seed=self.seed, alpha_grid=self.alpha_grid)
        self.n_features_in_ = X.shape[1]
        return self

    @property
    def spectrum_ratio_(self):
        check_is_fitted(self, "certificate_")
        cert = self.certificate_
        return getattr(cert, "ratio", math.inf)
