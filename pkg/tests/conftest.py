import numpy as np
import pytest

from srclasso.design import DesignMatrix


def orthonormal_design(n, p, seed=0):
    """X with X'X/n = I_p (requires p <= n)."""
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((n, p)))
    return DesignMatrix(np.sqrt(n) * Q, standardized=True)


def gram_design(S):
    """Square design whose Gram matrix X'X/n equals S exactly (up to rounding)."""
    S = np.asarray(S, dtype=float)
    n = S.shape[0]
    L = np.linalg.cholesky(S)
    return DesignMatrix(np.sqrt(n) * L.T, standardized=True)


def equicorrelation(p, rho):
    S = np.full((p, p), rho)
    np.fill_diagonal(S, 1.0)
    return S


def random_standardized(n, p, rng, corr=0.0):
    Z = rng.standard_normal((n, p))
    if corr:
        Z = Z + corr * rng.standard_normal((n, 1))
    return DesignMatrix(Z * (np.sqrt(n) / np.linalg.norm(Z, axis=0)), standardized=True)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
