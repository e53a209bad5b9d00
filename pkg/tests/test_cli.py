import csv
import json

import numpy as np
import pytest
from click.testing import CliRunner

from srclasso.cli import main

from conftest import orthonormal_design


def write_matrix(path, M):
    np.savetxt(path, np.atleast_2d(M), delimiter=",", fmt="%.17g")
    return str(path)


pytestmark = pytest.mark.filterwarnings("ignore:p / max")


@pytest.fixture
def runner():
    return CliRunner()


def test_certify_gersgorin_orthogonal(tmp_path, runner):
    X = orthonormal_design(10, 4).entries
    f = write_matrix(tmp_path / "x.csv", X)
    r = runner.invoke(main, ["certify", f, "--rank", "4", "--method", "gersgorin",
                             "--out", str(tmp_path / "o")])
    assert r.exit_code == 0, r.output
    d = json.loads((tmp_path / "o" / "certificate.json").read_text())
    assert d["certificate"]["delta"] == pytest.approx(0, abs=1e-12)
    assert {"tool_version", "config", "master_seed"} <= set(d)


def test_certify_no_certificate(tmp_path, runner, rng):
    a = rng.standard_normal(30)
    X = np.column_stack([a, a + 0.01 * rng.standard_normal(30), rng.standard_normal((30, 4))])
    f = write_matrix(tmp_path / "x.csv", X)
    r = runner.invoke(main, ["certify", f, "--rank", "6", "--method", "gersgorin",
                             "--out", str(tmp_path / "o")])
    assert r.exit_code == 3
    assert (tmp_path / "o" / "certificate.json").exists()


def test_certify_budget(tmp_path, runner, rng):
    f = write_matrix(tmp_path / "x.csv", rng.standard_normal((30, 20)))
    r = runner.invoke(main, ["certify", f, "--rank", "10", "--budget", "1000"])
    assert r.exit_code == 2
    assert "184756" in r.output


def test_certify_parse_error(tmp_path, runner):
    (tmp_path / "x.csv").write_text("1,2\n3,abc\n")
    r = runner.invoke(main, ["certify", str(tmp_path / "x.csv"), "--rank", "1"])
    assert r.exit_code == 1
    r = runner.invoke(main, ["certify", str(tmp_path / "missing.csv"), "--rank", "1"])
    assert r.exit_code == 1


def test_solve_large_lambda(tmp_path, runner, rng):
    X = rng.standard_normal((20, 5))
    y = rng.standard_normal(20)
    fx, fy = write_matrix(tmp_path / "x.csv", X), write_matrix(tmp_path / "y.csv", y[:, None])
    lam = 2 * np.max(np.abs(X.T @ y))
    r = runner.invoke(main, ["solve", fx, fy, "--lambda", str(lam), "--out", str(tmp_path / "o")])
    assert r.exit_code == 0, r.output
    d = json.loads((tmp_path / "o" / "solve.json").read_text())
    assert d["solution"]["q_hat"] == 0 and d["solution"]["kkt"]["satisfied"]


def test_solve_dimension_mismatch(tmp_path, runner, rng):
    fx = write_matrix(tmp_path / "x.csv", rng.standard_normal((20, 5)))
    fy = write_matrix(tmp_path / "y.csv", rng.standard_normal((19, 1)))
    r = runner.invoke(main, ["solve", fx, fy, "--lambda", "1"])
    assert r.exit_code == 1


def test_path_csv(tmp_path, runner):
    n = 16
    X = orthonormal_design(n, 6).entries
    y = X @ np.array([3.0, -2, 1, 0.5, 0, 0])
    fx, fy = write_matrix(tmp_path / "x.csv", X), write_matrix(tmp_path / "y.csv", y[:, None])
    r = runner.invoke(main, ["path", fx, fy, "--grid", f"{2.5 * n},{1.5 * n},{0.2 * n}",
                             "--out", str(tmp_path / "o")])
    assert r.exit_code == 0, r.output
    rows = list(csv.reader((tmp_path / "o" / "path.csv").open()))
    assert rows[0] == ["lambda", "q_hat"] and len(rows) == 4
    q = [int(row[1]) for row in rows[1:]]
    assert q == sorted(q) and q == [1, 2, 4]


def test_solve_non_convergence(tmp_path, runner, rng):
    fx = write_matrix(tmp_path / "x.csv", rng.standard_normal((10, 30)))
    fy = write_matrix(tmp_path / "y.csv", rng.standard_normal((10, 1)))
    r = runner.invoke(main, ["solve", fx, fy, "--lambda", "0.001", "--max-sweeps", "2",
                             "--out", str(tmp_path / "o")])
    assert r.exit_code == 4
    d = json.loads((tmp_path / "o" / "solve.json").read_text())
    assert d["solution"]["kkt"]["satisfied"] is False


def test_bounds_m1(tmp_path, runner):
    cfg = tmp_path / "b.cfg"
    cfg.write_text("# q = 3 with C = 2 gives M1* = 10\nq = 3\nC = 2\neta1 = 0\neta2 = 0\nlambda = 10\n")
    r = runner.invoke(main, ["bounds", str(cfg)])
    assert r.exit_code == 0, r.output
    d = json.loads(r.output)
    assert d["bounds"]["m1_star"] == 10
    assert d["bounds"]["q_hat_bound"] == 30
    assert d["config"]["C"] == 2


def test_unknown_key(tmp_path, runner):
    cfg = tmp_path / "s.cfg"
    cfg.write_text("n = 20\nlamda = 3\n")
    for cmd in ("simulate", "bounds"):
        r = runner.invoke(main, [cmd, str(cfg)])
        assert r.exit_code == 1
        assert "lamda" in r.output


SIM_CFG = """n = 30
p = 40
q = 2
magnitude = 2
covariance = ar1
rho = 0.3
replications = 4
master_seed = 9
path_points = 3
"""


def test_simulate_byte_identical(tmp_path, runner):
    cfg = tmp_path / "s.cfg"
    cfg.write_text(SIM_CFG)
    outs = []
    for k, threads in enumerate(("1", "2")):
        o = tmp_path / f"o{k}"
        r = runner.invoke(main, ["simulate", str(cfg), "--threads", threads, "--out", str(o)])
        assert r.exit_code == 0, r.output
        outs.append(o)
    for name in ("report.json", "replications.csv", "path.csv"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
    d = json.loads((outs[0] / "report.json").read_text())
    assert d["master_seed"] == 9 and d["config"]["n"] == 30
    assert len(list(csv.reader((outs[0] / "path.csv").open()))) == 4


def test_simulate_threshold(tmp_path, runner):
    cfg = tmp_path / "s.cfg"
    # a frequency can never exceed 1, so this threshold is always missed
    cfg.write_text(SIM_CFG + "min_frequency = 1.01\n")
    r = runner.invoke(main, ["simulate", str(cfg), "--out", str(tmp_path / "o")])
    assert r.exit_code == 5
    assert (tmp_path / "o" / "report.json").exists()


def test_wishart(tmp_path, runner):
    cfg = tmp_path / "w.cfg"
    cfg.write_text("m = 10\nn = 200\nreps = 50\ntau_lower = 0.16\ntau_upper = 2.56\n"
                   "min_frequency = 0.9\n")
    r = runner.invoke(main, ["wishart", str(cfg), "--out", str(tmp_path / "o")])
    assert r.exit_code == 0, r.output
    d = json.loads((tmp_path / "o" / "wishart.json").read_text())
    assert d["summary"]["frequency"] >= 0.9
    rows = list(csv.reader((tmp_path / "o" / "wishart.csv").open()))
    assert len(rows) == 51
    cfg.write_text("m = 20\nn = 10\n")
    assert runner.invoke(main, ["wishart", str(cfg)]).exit_code == 1
