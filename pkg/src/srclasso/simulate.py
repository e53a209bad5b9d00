"""Monte-Carlo replications of the selection theorems and of the sparse
spectrum bounds for random designs.

Every replication owns an RNG stream derived from ``(master_seed, index)``, and
results are collected by index, so a report does not depend on how many
worker threads produced it.
"""
from __future__ import annotations

import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from functools import lru_cache
from typing import Any, Mapping, Sequence

import numpy as np

from . import __version__
from .bounds import (SparsityBudget, lambda_np, success_probability, theorem_bounds)
from .certify import NoCertificate, certify, sparse_extremes_exact
from .config import coerce, to_bool, to_float, to_float_list, to_int
from .design import DesignMatrix, standardize_columns
from .diagnostics import sparsity_profile, theorem_verdicts
from .exceptions import ConfigError, NonConvergenceError, PreconditionError
from .solver import lambda_max, solve_lasso, solve_path

COVARIANCES = ("identity", "ar1", "equicorrelation", "toeplitz", "bounded_uniform")
SRC_METHODS = ("exact", "gersgorin", "sampled", "population")
SIGN_PATTERNS = ("random", "positive", "alternating")

# spawn keys outside the replication index range
_FIXED_DESIGN = 2**32
_COEFFICIENTS = 2**32 + 1
_PILOT = 2**32 + 2


@dataclass(frozen=True)
class CovarianceSpec:
    kind: str = "identity"
    rho: float = 0.0
    sequence: tuple[float, ...] = ()
    K: float = 1.0

    def __post_init__(self):
        if self.kind not in COVARIANCES:
            raise ValueError(f"unknown covariance {self.kind!r}")

    def matrix(self, p: int) -> np.ndarray:
        if self.kind in ("identity", "bounded_uniform"):
            return np.eye(p)
        if self.kind == "ar1":
            i = np.arange(p)
            return self.rho ** np.abs(i[:, None] - i[None, :])
        if self.kind == "equicorrelation":
            S = np.full((p, p), self.rho)
            np.fill_diagonal(S, 1.0)
            return S
        seq = np.zeros(p)
        k = min(p, len(self.sequence))
        seq[:k] = self.sequence[:k]
        i = np.arange(p)
        return seq[np.abs(i[:, None] - i[None, :])]

    def riesz_bounds(self, p: int) -> tuple[float, float]:
        """Extreme eigenvalues of the population covariance."""
        if self.kind in ("identity", "bounded_uniform"):
            return 1.0, 1.0
        if self.kind == "equicorrelation":
            vals = (1.0 - self.rho, 1.0 + (p - 1) * self.rho) if p > 1 else (1.0, 1.0)
            return min(vals), max(vals)
        w = np.linalg.eigvalsh(self.matrix(p))
        return float(w[0]), float(w[-1])


@lru_cache(maxsize=16)
def _cholesky(spec: CovarianceSpec, p: int) -> np.ndarray:
    S = spec.matrix(p)
    try:
        return np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        raise PreconditionError(f"covariance {spec} is not positive definite for p={p}") from None


@dataclass(frozen=True)
class GeneratedDesign:
    design: DesignMatrix
    rho_lower: float
    rho_upper: float


def gen_design(n: int, p: int, spec: CovarianceSpec, seed) -> GeneratedDesign:
    """Rows i.i.d. with the given covariance: Gaussian via a Cholesky factor,
    or uniform(-K, K) entries rescaled to unit variance for ``bounded_uniform``."""
    rng = np.random.default_rng(seed)
    if spec.kind == "bounded_uniform":
        if spec.K <= 0:
            raise PreconditionError("K must be positive")
        X = rng.uniform(-spec.K, spec.K, size=(n, p)) * (math.sqrt(3.0) / spec.K)
    else:
        L = _cholesky(spec, p)
        X = rng.standard_normal((n, p)) @ L.T
    lo, hi = spec.riesz_bounds(p)
    return GeneratedDesign(DesignMatrix(X), lo, hi)


gen_gaussian_design = gen_design


def gen_coefficients(p: int, q: int, magnitude: float, eta1_target: float = 0.0,
                     small_count: int = 0, seed=0, signs: str = "random") -> np.ndarray:
    """q entries of size ``magnitude`` and ``small_count`` entries sharing ``eta1_target``,
    at random disjoint positions; the rest are exactly zero."""
    if q < 0 or small_count < 0 or q + small_count > p:
        raise PreconditionError("need q + small_count <= p")
    if eta1_target < 0:
        raise PreconditionError("eta1_target must be >= 0")
    if small_count == 0 and eta1_target > 0:
        raise PreconditionError("eta1_target > 0 needs small_count > 0")
    rng = np.random.default_rng(seed)
    pos = rng.permutation(p)
    beta = np.zeros(p)
    large = pos[:q]
    if signs == "random":
        s = rng.choice([-1.0, 1.0], size=q)
    elif signs == "positive":
        s = np.ones(q)
    elif signs == "alternating":
        s = np.where(np.arange(q) % 2 == 0, 1.0, -1.0)
    else:
        raise PreconditionError(f"unknown sign pattern {signs!r}")
    beta[large] = magnitude * s
    if small_count:
        small = pos[q:q + small_count]
        beta[small] = (eta1_target / small_count) * rng.choice([-1.0, 1.0], size=small_count)
    return beta


# -- configuration -------------------------------------------------------------

def _choice(options):
    def conv(v: str) -> str:
        v = v.strip()
        if v not in options:
            raise ValueError(f"{v!r} not in {options}")
        return v
    return conv


def _opt_float(v: str):
    return None if v.strip().lower() in ("", "none") else to_float(v)


def _opt_int(v: str):
    return None if v.strip().lower() in ("", "none") else to_int(v)


EXPERIMENT_SCHEMA = {
    "n": (to_int, 100),
    "p": (to_int, 200),
    "q": (to_int, 5),
    "covariance": (_choice(COVARIANCES), "identity"),
    "rho": (to_float, 0.0),
    "toeplitz": (to_float_list, ()),
    "K": (to_float, 1.0),
    "magnitude": (to_float, 1.0),
    "magnitude_thm2_factor": (_opt_float, None),
    "signs": (_choice(SIGN_PATTERNS), "random"),
    "eta1": (to_float, 0.0),
    "small_count": (to_int, 0),
    "sigma": (to_float, 1.0),
    "lambda": (_opt_float, None),
    "c0": (to_float, 0.0),
    "a_n": (to_float, 0.0),
    "replications": (to_int, 100),
    "master_seed": (to_int, 0),
    "src_method": (_choice(SRC_METHODS), "population"),
    "src_rank": (_opt_int, None),
    "src_budget": (to_int, 200),
    "fixed_design": (to_bool, False),
    "fixed_coefficients": (to_bool, True),
    "standardize": (to_bool, True),
    "tol": (to_float, 1e-8),
    "max_sweeps": (to_int, 100_000),
    "path_points": (to_int, 10),
    "min_frequency": (_opt_float, None),
}


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 100
    p: int = 200
    q: int = 5
    covariance: str = "identity"
    rho: float = 0.0
    toeplitz: tuple = ()
    K: float = 1.0
    magnitude: float = 1.0
    magnitude_thm2_factor: float | None = None
    signs: str = "random"
    eta1: float = 0.0
    small_count: int = 0
    sigma: float = 1.0
    lam: float | None = None
    c0: float = 0.0
    a_n: float = 0.0
    replications: int = 100
    master_seed: int = 0
    src_method: str = "population"
    src_rank: int | None = None
    src_budget: int = 200
    fixed_design: bool = False
    fixed_coefficients: bool = True
    standardize: bool = True
    tol: float = 1e-8
    max_sweeps: int = 100_000
    path_points: int = 10
    min_frequency: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "toeplitz", tuple(float(t) for t in self.toeplitz))
        if self.replications < 1:
            raise ConfigError("replications must be >= 1", key="replications")
        if not 0 <= self.q <= self.p:
            raise ConfigError("need 0 <= q <= p", key="q")
        if self.q + self.small_count > self.p:
            raise ConfigError("need q + small_count <= p", key="small_count")
        if self.sigma <= 0:
            raise ConfigError("sigma must be positive", key="sigma")
        if self.n < 1 or self.p < 1:
            raise ConfigError("n and p must be positive", key="n")
        if self.covariance in ("ar1", "equicorrelation") and not -1 < self.rho < 1:
            raise ConfigError("rho must lie in (-1, 1)", key="rho")
        if self.src_method == "gersgorin" and not self.standardize:
            raise ConfigError("gersgorin certification needs standardize = true", key="src_method")

    @classmethod
    def from_mapping(cls, raw: Mapping[str, Any]) -> "ExperimentConfig":
        vals = coerce(raw, EXPERIMENT_SCHEMA)
        vals["lam"] = vals.pop("lambda")
        return cls(**vals)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        d["toeplitz"] = list(d["toeplitz"])
        return dict(sorted(d.items()))

    @property
    def covariance_spec(self) -> CovarianceSpec:
        return CovarianceSpec(self.covariance, self.rho, self.toeplitz, self.K)

    def resolved_rank(self, rho_lower: float, rho_upper: float) -> int:
        if self.src_rank is not None:
            return max(1, min(self.src_rank, self.p))
        C = rho_upper / rho_lower
        return max(1, min(self.n, self.p, math.ceil((2 + 4 * C) * self.q + 1)))


# -- experiment ----------------------------------------------------------------

@dataclass
class ReplicationResult:
    index: int
    lam: float
    c_lower: float
    c_upper: float
    certified: bool
    src_method: str
    q_star: int
    diagnostics: dict
    bounds: dict
    kkt_satisfied: bool
    n_sweeps: int

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return d


@dataclass
class ExperimentReport:
    config: dict
    replications: list
    frequencies: dict
    success_prob: float
    loss_summary: dict
    src_summary: dict
    path: list = field(default_factory=list)
    magnitude: float = 0.0

    def to_dict(self) -> dict:
        return {
            "tool_version": __version__,
            "master_seed": self.config["master_seed"],
            "config": self.config,
            "magnitude": self.magnitude,
            "frequencies": self.frequencies,
            "success_prob": self.success_prob,
            "loss_summary": self.loss_summary,
            "src_summary": self.src_summary,
            "path": self.path,
            "replications": [r.to_dict() for r in self.replications],
        }

    def to_json(self) -> str:
        return json.dumps(_jsonable(self.to_dict()), indent=2, sort_keys=True, allow_nan=False)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        if math.isnan(f):
            return "nan"
        return f
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _seed(master: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(master, spawn_key=tuple(int(k) for k in key))


def _prepare_design(cfg: ExperimentConfig, key: int) -> GeneratedDesign:
    g = gen_design(cfg.n, cfg.p, cfg.covariance_spec, _seed(cfg.master_seed, key, 0))
    if cfg.standardize:
        return GeneratedDesign(standardize_columns(g.design), g.rho_lower, g.rho_upper)
    return g


def _spectrum(cfg: ExperimentConfig, g: GeneratedDesign, key: int):
    """(c_lower, c_upper, certified, method, rank) for one design."""
    rank = cfg.resolved_rank(g.rho_lower, g.rho_upper)
    if cfg.src_method == "population":
        return g.rho_lower, g.rho_upper, False, "population", rank
    cert_seed = int(_seed(cfg.master_seed, key, 2).generate_state(1)[0])
    budget = cfg.src_budget if cfg.src_method == "sampled" else max(cfg.src_budget, 10**6)
    cert = certify(g.design, rank, cfg.src_method, budget=budget, seed=cert_seed)
    if isinstance(cert, NoCertificate) or cert.c_lower <= 0:
        # certification failed: fall back to the population bounds, flagged
        return g.rho_lower, g.rho_upper, False, cfg.src_method, rank
    return cert.c_lower, cert.c_upper, cert.method != "sampled", cert.method, rank


def _penalty(cfg: ExperimentConfig, c_upper: float) -> float:
    if cfg.lam is not None:
        return cfg.lam
    return lambda_np(cfg.sigma, cfg.c0, cfg.a_n, c_upper, cfg.n, cfg.p, warn=False)


def _resolve_magnitude(cfg: ExperimentConfig) -> float:
    if cfg.magnitude_thm2_factor is None:
        return cfg.magnitude
    g = _prepare_design(cfg, _PILOT)
    c_lo, c_hi, _, _, rank = _spectrum(cfg, g, _PILOT)
    lam = _penalty(cfg, c_hi)
    b = theorem_bounds(SparsityBudget(cfg.q, cfg.eta1, 0.0), c_lo, c_hi, lam, cfg.n)
    return cfg.magnitude_thm2_factor * math.sqrt(b.theorem2_threshold)


def _coefficients(cfg: ExperimentConfig, magnitude: float, key: int) -> np.ndarray:
    return gen_coefficients(cfg.p, cfg.q, magnitude, cfg.eta1, cfg.small_count,
                            seed=_seed(cfg.master_seed, key, 1), signs=cfg.signs)


def _replicate(cfg: ExperimentConfig, idx: int, magnitude: float, fixed) -> ReplicationResult:
    g = fixed if fixed is not None else _prepare_design(cfg, idx)
    beta = _coefficients(cfg, magnitude, _COEFFICIENTS if cfg.fixed_coefficients else idx)
    c_lo, c_hi, certified, method, rank = _spectrum(cfg, g, idx)
    lam = _penalty(cfg, c_hi)
    X = g.design
    noise = np.random.default_rng(_seed(cfg.master_seed, idx, 3)).standard_normal(cfg.n)
    y = X.entries @ beta + cfg.sigma * noise
    try:
        sol = solve_lasso(X, y, lam, tol=cfg.tol, max_sweeps=cfg.max_sweeps)
    except NonConvergenceError as err:
        err.index = idx
        err.args = (f"replication {idx}: {err.args[0]}",)
        raise
    prof = sparsity_profile(X, beta, cfg.q)
    budget = SparsityBudget(cfg.q, prof.eta1, prof.eta2_upper, not prof.eta2_exact)
    bounds = theorem_bounds(budget, c_lo, c_hi, lam, cfg.n, q_star=rank)
    diag = theorem_verdicts(X, beta, prof, sol, bounds)
    return ReplicationResult(
        index=idx, lam=lam, c_lower=c_lo, c_upper=c_hi, certified=certified,
        src_method=method, q_star=rank, diagnostics=diag.to_dict(),
        bounds=bounds.to_dict(), kkt_satisfied=sol.kkt.satisfied, n_sweeps=sol.n_sweeps,
    )


def _path_table(cfg: ExperimentConfig, magnitude: float, fixed) -> list[dict]:
    if cfg.path_points < 1:
        return []
    g = fixed if fixed is not None else _prepare_design(cfg, 0)
    beta = _coefficients(cfg, magnitude, _COEFFICIENTS if cfg.fixed_coefficients else 0)
    c_lo, c_hi, _, _, _ = _spectrum(cfg, g, 0)
    lam = _penalty(cfg, c_hi)
    X = g.design
    noise = np.random.default_rng(_seed(cfg.master_seed, 0, 3)).standard_normal(cfg.n)
    y = X.entries @ beta + cfg.sigma * noise
    top = max(lambda_max(X, y), 2 * lam)
    grid = np.geomspace(top, lam / 2, cfg.path_points) if cfg.path_points > 1 else np.array([lam])
    prof = sparsity_profile(X, beta, cfg.q)
    rows = []
    for sol in solve_path(X, y, grid, tol=cfg.tol, max_sweeps=cfg.max_sweeps):
        b = theorem_bounds(SparsityBudget(cfg.q, prof.eta1, prof.eta2_upper), c_lo, c_hi,
                           sol.lam, cfg.n)
        d = theorem_verdicts(X, beta, prof, sol, b)
        rows.append({"lambda": float(sol.lam), "q_hat": d.q_hat, "bias": d.bias,
                     "zeta2": d.zeta[2]})
    return rows


def _summary(values) -> dict:
    v = np.asarray(values, dtype=float)
    q = np.quantile(v, [0.1, 0.5, 0.9])
    return {"mean": float(v.mean()), "q10": float(q[0]), "median": float(q[1]),
            "q90": float(q[2])}


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> ExperimentReport:
    """Run every replication and aggregate theorem frequencies and losses."""
    if cfg.lam is None:
        ratio = cfg.p / max(cfg.p, cfg.a_n) ** (1 + cfg.c0)
        if ratio > 0.1:
            warnings.warn(f"p / max(p, a_n)^(1+c0) = {ratio:.3g} is not small", stacklevel=2)
    magnitude = _resolve_magnitude(cfg)
    fixed = _prepare_design(cfg, _FIXED_DESIGN) if cfg.fixed_design else None
    indices = range(cfg.replications)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda i: _replicate(cfg, i, magnitude, fixed), indices))
    else:
        results = [_replicate(cfg, i, magnitude, fixed) for i in indices]
    results.sort(key=lambda r: r.index)

    verdict_keys = ("q_tilde_bound", "bias_bound", "zeta2_bound", "theorem2_inclusion")
    freqs = {k: float(np.mean([r.diagnostics["verdicts"][k] for r in results]))
             for k in verdict_keys}
    freqs["large_included"] = float(np.mean([r.diagnostics["large_included"] for r in results]))
    loss_keys = ("prediction", "l1", "l2", "linf")
    losses = {k: _summary([r.diagnostics["losses"][k] for r in results]) for k in loss_keys}
    src = {
        "method": cfg.src_method,
        "c_lower": _summary([r.c_lower for r in results]),
        "c_upper": _summary([r.c_upper for r in results]),
        "certified_fraction": float(np.mean([r.certified for r in results])),
    }
    return ExperimentReport(
        config=cfg.to_dict(), replications=results, frequencies=freqs,
        success_prob=success_probability(cfg.p, cfg.a_n, cfg.c0),
        loss_summary=losses, src_summary=src,
        path=_path_table(cfg, magnitude, fixed), magnitude=magnitude,
    )


REPLICATION_COLUMNS = (
    "index", "lambda", "c_lower", "c_upper", "q_hat", "q_tilde", "bias", "zeta0", "zeta2",
    "zeta_inf", "q_tilde_bound", "bias_bound", "zeta2_bound", "theorem2_inclusion",
    "prediction_loss", "l1_loss", "l2_loss", "linf_loss",
)


def replication_rows(report: ExperimentReport) -> list[list]:
    rows = []
    for r in report.replications:
        d = r.diagnostics
        v, lo = d["verdicts"], d["losses"]
        rows.append([r.index, r.lam, r.c_lower, r.c_upper, d["q_hat"], d["q_tilde"], d["bias"],
                     d["zeta"]["0"], d["zeta"]["2"], d["zeta"]["inf"],
                     int(v["q_tilde_bound"]), int(v["bias_bound"]), int(v["zeta2_bound"]),
                     int(v["theorem2_inclusion"]), lo["prediction"], lo["l1"], lo["l2"], lo["linf"]])
    return rows


# -- loss scaling --------------------------------------------------------------

@dataclass(frozen=True)
class ScalingResult:
    cells: list
    prediction_slope: float
    l2_slope: float


def _slope(x, y) -> float:
    x = np.log(np.asarray(x, dtype=float))
    y = np.log(np.asarray(y, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def loss_scaling(n_grid: Sequence[int], p_grid: Sequence[int], q_grid: Sequence[int],
                 replications: int = 50, master_seed: int = 0, threads: int = 1,
                 **overrides) -> ScalingResult:
    """Fit log mean losses against the rates sqrt(q log p) and sqrt(q log p / n).

    ``overrides`` are extra ExperimentConfig fields applied to every cell.
    """
    cells = []
    for k, (n, p, q) in enumerate((n, p, q) for n in n_grid for p in p_grid for q in q_grid):
        cfg = ExperimentConfig(n=n, p=p, q=q, replications=replications,
                               master_seed=master_seed + k, path_points=0, **overrides)
        rep = run_experiment(cfg, threads=threads)
        cells.append({
            "n": n, "p": p, "q": q,
            "prediction": rep.loss_summary["prediction"]["mean"],
            "l2": rep.loss_summary["l2"]["mean"],
        })
    rate_pred = [math.sqrt(c["q"] * math.log(c["p"])) for c in cells]
    rate_l2 = [math.sqrt(c["q"] * math.log(c["p"]) / c["n"]) for c in cells]
    return ScalingResult(
        cells=cells,
        prediction_slope=_slope(rate_pred, [c["prediction"] for c in cells]),
        l2_slope=_slope(rate_l2, [c["l2"] for c in cells]),
    )


# -- random-design spectra -----------------------------------------------------

@dataclass(frozen=True)
class WishartSummary:
    m: int
    n: int
    reps: int
    lambda_min: list = field(repr=False)
    lambda_max: list = field(repr=False)
    mean_min: float = 0.0
    mean_max: float = 0.0
    quantiles_min: dict = field(default_factory=dict)
    quantiles_max: dict = field(default_factory=dict)
    center_min: float = 0.0
    center_max: float = 0.0
    tau_lower: float | None = None
    tau_upper: float | None = None
    frequency: float | None = None

    def to_dict(self, include_samples: bool = False) -> dict:
        d = asdict(self)
        if not include_samples:
            d.pop("lambda_min")
            d.pop("lambda_max")
        return d


def wishart_extreme_trials(m: int, n: int, reps: int, seed: int = 0,
                           tau_lower: float | None = None,
                           tau_upper: float | None = None) -> WishartSummary:
    """Extreme eigenvalues of W/n for W = U'U, U an n x m standard Gaussian matrix."""
    if not 1 <= m <= n:
        raise PreconditionError(f"need 1 <= m <= n, got m={m}, n={n}")
    if reps < 1:
        raise PreconditionError("reps must be >= 1")
    rng = np.random.default_rng(seed)
    lo = np.empty(reps)
    hi = np.empty(reps)
    for r in range(reps):
        U = rng.standard_normal((n, m))
        w = np.linalg.eigvalsh(U.T @ U / n)
        lo[r], hi[r] = w[0], w[-1]
    qs = (0.05, 0.5, 0.95)
    freq = None
    if tau_lower is not None and tau_upper is not None:
        freq = float(np.mean((lo >= tau_lower) & (hi <= tau_upper)))
    ratio = math.sqrt(m / n)
    return WishartSummary(
        m=m, n=n, reps=reps, lambda_min=lo.tolist(), lambda_max=hi.tolist(),
        mean_min=float(lo.mean()), mean_max=float(hi.mean()),
        quantiles_min={str(a): float(v) for a, v in zip(qs, np.quantile(lo, qs))},
        quantiles_max={str(a): float(v) for a, v in zip(qs, np.quantile(hi, qs))},
        center_min=(1 - ratio) ** 2, center_max=(1 + ratio) ** 2,
        tau_lower=tau_lower, tau_upper=tau_upper, frequency=freq,
    )


def sparse_spectrum_trials(n: int, p: int, m: int, spec: CovarianceSpec, reps: int,
                           seed: int = 0, tau_lower: float = 0.0,
                           tau_upper: float = math.inf) -> float:
    """Frequency over random designs of tau_lower rho_* <= c_lower(m) <= c_upper(m) <= tau_upper rho^*.

    Uses exact enumeration, so binomial(p, m) must be small.
    """
    hits = 0
    for r in range(reps):
        g = gen_design(n, p, spec, _seed(seed, r, 0))
        cert = sparse_extremes_exact(g.design, m)
        hits += tau_lower * g.rho_lower <= cert.c_lower and cert.c_upper <= tau_upper * g.rho_upper
    return hits / reps
