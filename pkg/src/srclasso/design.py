"""Design matrices, column standardization and subset Gram matrices."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .exceptions import DegenerateColumnError, EmptyInputError, ParseError

STANDARDIZED_RTOL = 1e-8


@dataclass(frozen=True)
class DesignMatrix:
    """An n x p design with rows as observations and columns as variables.

    ``standardized`` means every column satisfies ``||x_j||^2 == n``. No
    intercept is modelled, so columns are never centered.
    """

    entries: np.ndarray
    standardized: bool = False
    _norms: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        X = np.array(self.entries, dtype=float, copy=True)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise ValueError(f"design must be a non-empty 2-D array, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise ValueError("design contains non-finite entries")
        X.setflags(write=False)
        object.__setattr__(self, "entries", X)
        norms = np.sqrt(np.einsum("ij,ij->j", X, X))
        norms.setflags(write=False)
        object.__setattr__(self, "_norms", norms)
        if self.standardized:
            n = X.shape[0]
            bad = np.flatnonzero(np.abs(norms**2 - n) > STANDARDIZED_RTOL * n)
            if bad.size:
                raise ValueError(f"columns {bad.tolist()} are not standardized")

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def p(self) -> int:
        return self.entries.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    @property
    def column_norms(self) -> np.ndarray:
        return self._norms

    def column(self, j: int) -> np.ndarray:
        return self.entries[:, j]

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


@dataclass(frozen=True)
class SubsetGram:
    indices: tuple[int, ...]
    matrix: np.ndarray

    def eigenvalues(self) -> np.ndarray:
        if not self.indices:
            return np.empty(0)
        return np.linalg.eigvalsh(self.matrix)


def as_design(X) -> DesignMatrix:
    if isinstance(X, DesignMatrix):
        return X
    return DesignMatrix(np.asarray(X, dtype=float))


def load_design(path, has_header: bool = False) -> DesignMatrix:
    """Read a rectangular numeric CSV into a DesignMatrix.

    Errors name the 1-based line (and column) of the offending cell.
    """
    path = Path(path)
    rows: list[list[float]] = []
    width = None
    with path.open(newline="", encoding="utf-8") as fh:
        for lineno, record in enumerate(csv.reader(fh), start=1):
            if has_header and lineno == 1:
                continue
            if not record or all(not c.strip() for c in record):
                continue
            if width is None:
                width = len(record)
            elif len(record) != width:
                raise ParseError(
                    f"{path}: line {lineno} has {len(record)} fields, expected {width}",
                    line=lineno,
                )
            values = []
            for col, cell in enumerate(record, start=1):
                try:
                    values.append(float(cell))
                except ValueError:
                    raise ParseError(
                        f"{path}: non-numeric value {cell!r} at line {lineno}, column {col}",
                        line=lineno,
                        column=col,
                    ) from None
            rows.append(values)
    if not rows:
        raise EmptyInputError(f"{path}: no data rows")
    X = np.array(rows, dtype=float)
    if not np.all(np.isfinite(X)):
        raise ParseError(f"{path}: non-finite values present")
    return DesignMatrix(X)


def load_vector(path, has_header: bool = False) -> np.ndarray:
    """Read a single-column (or single-row) CSV as a 1-D float array."""
    D = load_design(path, has_header=has_header).entries
    if D.shape[1] == 1:
        return D[:, 0].copy()
    if D.shape[0] == 1:
        return D[0].copy()
    raise ParseError(f"{path}: expected a single column, got shape {D.shape}")


def standardize_columns(X) -> DesignMatrix:
    """Scale every column by sqrt(n)/||x_j|| so that ||x_j||^2 = n."""
    X = as_design(X)
    norms = X.column_norms
    zero = np.flatnonzero(norms == 0)
    if zero.size:
        raise DegenerateColumnError(int(zero[0]))
    scaled = X.entries * (np.sqrt(X.n) / norms)
    return DesignMatrix(scaled, standardized=True)


def _check_indices(A, p: int) -> tuple[int, ...]:
    idx = [int(a) for a in A]
    if len(set(idx)) != len(idx):
        raise IndexError(f"duplicate indices in {idx}")
    for a in idx:
        if not 0 <= a < p:
            raise IndexError(f"index {a} out of range for p={p}")
    return tuple(sorted(idx))


def subset_gram(X, A: Sequence[int]) -> SubsetGram:
    """Return Sigma_A = X_A' X_A / n for the (0-based) column subset A."""
    X = as_design(X)
    idx = _check_indices(A, X.p)
    XA = X.entries[:, idx]
    G = XA.T @ XA / X.n
    G = 0.5 * (G + G.T)
    return SubsetGram(idx, G)


def gram(X) -> np.ndarray:
    """Full symmetrized Gram matrix X'X / n."""
    X = as_design(X)
    G = X.entries.T @ X.entries / X.n
    return 0.5 * (G + G.T)
