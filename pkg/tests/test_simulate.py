import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from srclasso.bounds import SparsityBudget, prop2_probability, theorem_bounds
from srclasso.diagnostics import sparsity_profile, theorem_verdicts
from srclasso.exceptions import ConfigError, PreconditionError
from srclasso.simulate import (CovarianceSpec, ExperimentConfig, gen_coefficients, gen_design,
                               replication_rows, REPLICATION_COLUMNS, run_experiment,
                               sparse_spectrum_trials, wishart_extreme_trials)
from srclasso.solver import solve_lasso

from conftest import orthonormal_design


def test_identity_design_norms():
    g = gen_design(200, 30, CovarianceSpec("identity"), 1)
    assert (g.rho_lower, g.rho_upper) == (1.0, 1.0)
    r = g.design.column_norms**2 / 200
    assert np.all((r > 0.7) & (r < 1.3))


def test_ar1_bounds():
    lo, hi = CovarianceSpec("ar1", 0.3).riesz_bounds(50)
    assert lo >= 0.7 / 1.3 - 1e-12 and hi <= 1.3 / 0.7 + 1e-12
    w = np.linalg.eigvalsh(CovarianceSpec("ar1", 0.3).matrix(50))
    assert (lo, hi) == pytest.approx((w[0], w[-1]))


def test_equicorrelation_spectrum():
    spec = CovarianceSpec("equicorrelation", 0.2)
    w = np.linalg.eigvalsh(spec.matrix(10))
    np.testing.assert_allclose(w, [0.8] * 9 + [2.8], atol=1e-12)
    assert spec.riesz_bounds(10) == pytest.approx((0.8, 2.8))


def test_design_covariance_and_determinism():
    spec = CovarianceSpec("ar1", 0.5)
    g = gen_design(20000, 4, spec, 7)
    S = g.design.entries.T @ g.design.entries / 20000
    np.testing.assert_allclose(S, spec.matrix(4), atol=0.05)
    np.testing.assert_array_equal(gen_design(10, 4, spec, 7).design.entries,
                                  gen_design(10, 4, spec, 7).design.entries)


def test_bounded_uniform_unit_variance():
    g = gen_design(20000, 3, CovarianceSpec("bounded_uniform", K=2.0), 0)
    E = g.design.entries
    assert np.all(np.abs(E) <= math.sqrt(3) + 1e-12)
    np.testing.assert_allclose(E.var(axis=0), 1, atol=0.05)


def test_non_pd_covariance():
    with pytest.raises(PreconditionError):
        gen_design(5, 3, CovarianceSpec("toeplitz", sequence=(1.0, 0.9, -0.9)), 0)


def test_coefficients_examples():
    b = gen_coefficients(20, 3, 1.0, seed=1)
    assert np.count_nonzero(b) == 3 and np.all(np.abs(b[b != 0]) == 1)
    b = gen_coefficients(30, 3, 2.0, 0.5, 10, seed=2)
    small = b[(b != 0) & (np.abs(b) < 1)]
    assert small.size == 10 and np.allclose(np.abs(small), 0.05)
    assert np.abs(small).sum() == pytest.approx(0.5)
    with pytest.raises(PreconditionError):
        gen_coefficients(10, 2, 1.0, 0.5, 0)


def test_coefficients_round_trip():
    X = orthonormal_design(40, 30)
    b = gen_coefficients(30, 4, 3.0, 0.7, 8, seed=5)
    prof = sparsity_profile(X, b, 4)
    assert prof.q == 4
    assert prof.eta1 == pytest.approx(0.7, abs=1e-12)


def test_orthonormal_spike_inclusion():
    """Soft-threshold closed form: a spike of 10 lam / n is always selected."""
    n = p = 32
    X = orthonormal_design(n, p, seed=2)
    lam = 2.0 * math.sqrt(2 * n * math.log(p))
    beta = np.zeros(p)
    beta[7] = 10 * lam / n
    prof = sparsity_profile(X, beta, 1)
    tb = theorem_bounds(SparsityBudget(1), 1.0, 1.0, lam, n)
    rng = np.random.default_rng(0)
    hits = 0
    for _ in range(100):
        y = X.entries @ beta + rng.standard_normal(n)
        sol = solve_lasso(X, y, lam)
        z = X.entries.T @ y / n
        assert abs(z[7]) > lam / n
        hits += theorem_verdicts(X, beta, prof, sol, tb).verdicts["theorem2_inclusion"]
    assert hits == 100


pytestmark = pytest.mark.filterwarnings("ignore:p / max")


def small_config(**kw):
    base = dict(n=40, p=60, q=2, magnitude=3.0, replications=6, master_seed=3, path_points=4,
                covariance="ar1", rho=0.3)
    base.update(kw)
    return ExperimentConfig(**base)


def test_noiseless_verdicts():
    cfg = small_config(sigma=1e-6, lam=5.0, replications=5)
    rep = run_experiment(cfg)
    assert rep.frequencies["bias_bound"] == 1.0
    assert rep.frequencies["zeta2_bound"] == 1.0


def test_report_determinism_and_shape():
    cfg = small_config()
    a = run_experiment(cfg).to_json()
    b = run_experiment(cfg, threads=3).to_json()
    assert a == b
    rep = run_experiment(cfg)
    assert len(rep.replications) == cfg.replications
    assert all(0 <= f <= 1 for f in rep.frequencies.values())
    rows = replication_rows(rep)
    assert len(rows) == cfg.replications and len(rows[0]) == len(REPLICATION_COLUMNS)
    assert len(rep.path) == 4
    assert run_experiment(small_config(master_seed=4)).to_json() != a


@pytest.mark.parametrize("method", ["exact", "gersgorin", "sampled", "population"])
def test_src_methods(method):
    cfg = small_config(p=12, n=60, replications=2, src_method=method, src_rank=3,
                       rho=0.1, path_points=0)
    rep = run_experiment(cfg)
    for r in rep.replications:
        assert 0 < r.c_lower <= r.c_upper
    if method == "exact":
        assert rep.src_summary["certified_fraction"] == 1.0


def test_selection_identity_each_replication():
    rep = run_experiment(small_config(replications=10, magnitude=0.5))
    for r in rep.replications:
        d = r.diagnostics
        assert d["q_tilde"] - d["q_hat"] == d["zeta"]["0"]


def test_thm2_factor_sets_magnitude():
    rep = run_experiment(small_config(magnitude_thm2_factor=2.0, replications=2))
    thr = rep.replications[0].bounds["theorem2_threshold"]
    assert rep.magnitude > 0
    assert rep.magnitude**2 > thr


def test_config_from_mapping():
    cfg = ExperimentConfig.from_mapping({"n": "50", "lambda": "3.5", "covariance": "ar1",
                                         "rho": "0.2"})
    assert cfg.lam == 3.5 and cfg.to_dict()["lambda"] == 3.5
    with pytest.raises(ConfigError) as info:
        ExperimentConfig.from_mapping({"lamda": "1"})
    assert info.value.key == "lamda"
    with pytest.raises(ConfigError):
        ExperimentConfig.from_mapping({"q": "10", "p": "5"})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_mapping({"covariance": "banded"})


def test_wishart_m1():
    n, reps = 50, 400
    s = wishart_extreme_trials(1, n, reps, seed=0)
    assert s.lambda_min == s.lambda_max
    assert abs(s.mean_min - 1) <= 3 * math.sqrt(2 / (n * reps))


def test_wishart_centers():
    s = wishart_extreme_trials(10, 200, 200, seed=1, tau_lower=0.16, tau_upper=2.56)
    assert s.center_min == pytest.approx(0.603, abs=1e-3)
    assert s.center_max == pytest.approx(1.497, abs=1e-3)
    assert abs(s.mean_min - s.center_min) < 0.15 and abs(s.mean_max - s.center_max) < 0.15
    assert s.frequency >= 0.99


def test_wishart_square():
    s = wishart_extreme_trials(100, 100, 20, seed=2)
    assert s.mean_min < 0.05
    with pytest.raises(PreconditionError):
        wishart_extreme_trials(11, 10, 5)


def test_prop2_event_frequency():
    # a valid configuration small enough for exact enumeration
    n, p, m, reps = 400, 12, 3, 20
    bound = prop2_probability(0.3, 0.3, 0.0225, 0.0225, m, n, p)
    freq = sparse_spectrum_trials(n, p, m, CovarianceSpec("ar1", 0.2), reps, seed=4,
                                  tau_lower=bound.tau_lower, tau_upper=bound.tau_upper)
    se = math.sqrt(max(bound.probability * (1 - bound.probability), 1e-12) / reps)
    assert freq >= bound.probability - 3 * se


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31), st.floats(0.0, 0.6))
def test_prop2_frequency_property(seed, rho):
    n, p, m, reps = 400, 10, 3, 10
    bound = prop2_probability(0.3, 0.3, 0.0225, 0.0225, m, n, p)
    freq = sparse_spectrum_trials(n, p, m, CovarianceSpec("ar1", rho), reps, seed=seed,
                                  tau_lower=bound.tau_lower, tau_upper=bound.tau_upper)
    se = math.sqrt(max(bound.probability * (1 - bound.probability), 1e-12) / reps)
    assert freq >= bound.probability - 3 * se
