"""Command-line entry point.

Exit codes: 0 success, 1 input/config error, 2 enumeration budget exceeded,
3 no Gersgorin certificate, 4 solver non-convergence, 5 a frequency
threshold set in the config was missed. JSON output is written for codes 3-5.
"""
from __future__ import annotations

import csv
import json
import math
import sys
from pathlib import Path

import click

from . import __version__
from .bounds import SparsityBudget, lambda_np, success_probability, theorem_bounds
from .certify import NoCertificate, certify
from .config import coerce, read_kv, to_float, to_int
from .design import load_design, load_vector, standardize_columns
from .exceptions import BudgetExceededError, ConfigError, NonConvergenceError, SrcLassoError
from .simulate import (REPLICATION_COLUMNS, ExperimentConfig, _jsonable, replication_rows,
                       run_experiment, wishart_extreme_trials)
from .solver import solve_lasso, solve_path

EXIT_OK, EXIT_INPUT, EXIT_BUDGET, EXIT_NO_CERT, EXIT_NONCONV, EXIT_THRESHOLD = range(6)


def _dump(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _write(out: Path | None, name: str, text: str) -> None:
    if out is None:
        click.echo(text, nl=False)
        return
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text, encoding="utf-8")


def _write_csv(out: Path | None, name: str, header, rows) -> None:
    if out is None:
        return
    out.mkdir(parents=True, exist_ok=True)
    with (out / name).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _fail(msg: str, code: int = EXIT_INPUT):
    click.echo(f"error: {msg}", err=True)
    sys.exit(code)


def _envelope(command: str, config: dict, seed, payload: dict) -> dict:
    return {"tool_version": __version__, "command": command, "config": config,
            "master_seed": seed, **payload}


out_option = click.option("--out", "out", type=click.Path(file_okay=False, path_type=Path),
                          default=None, help="Output directory (stdout when omitted).")


@click.group()
@click.version_option(__version__)
def main():
    """Certified LASSO, sparse Riesz certification and rate-consistency checks."""


@main.command("certify")
@click.argument("design_csv", type=click.Path(dir_okay=False))
@click.option("--rank", "rank", type=int, required=True)
@click.option("--method", type=click.Choice(["exact", "gersgorin", "sampled"]), default="exact")
@click.option("--budget", type=int, default=10**6)
@click.option("--seed", type=int, default=0)
@click.option("--header/--no-header", default=False)
@out_option
def cmd_certify(design_csv, rank, method, budget, seed, header, out):
    """Standardize a design and certify its sparse spectrum at RANK."""
    config = {"design": str(design_csv), "rank": rank, "method": method, "budget": budget,
              "seed": seed, "header": header}
    try:
        X = standardize_columns(load_design(design_csv, has_header=header))
        cert = certify(X, rank, method, budget=budget, seed=seed)
    except BudgetExceededError as err:
        _fail(f"binomial(p, m) = {err.count} subsets exceeds budget {err.budget}", EXIT_BUDGET)
    except (OSError, SrcLassoError, ValueError, IndexError) as err:
        _fail(str(err))
    _write(out, "certificate.json", _dump(_envelope("certify", config, seed,
                                                    {"certificate": cert.to_dict()})))
    if isinstance(cert, NoCertificate):
        click.echo(f"no certificate: delta = {cert.delta:.6g} >= 1", err=True)
        sys.exit(EXIT_NO_CERT)


def _solve_common(design_csv, response_csv, lam, grid, tol, max_sweeps, header, out, command):
    config = {"design": str(design_csv), "response": str(response_csv), "lambda": lam,
              "grid": grid, "tol": tol, "max_sweeps": max_sweeps, "header": header}
    try:
        X = load_design(design_csv, has_header=header)
        y = load_vector(response_csv, has_header=header)
    except (OSError, ValueError) as err:
        _fail(str(err))
    if y.shape[0] != X.n:
        _fail(f"response has {y.shape[0]} rows, design has {X.n}")
    if (lam is None) == (grid is None):
        _fail("give exactly one of --lambda or --grid")
    try:
        lambdas = [lam] if grid is None else [to_float(v) for v in grid.split(",") if v.strip()]
    except ValueError as err:
        _fail(f"bad --grid: {err}")
    if not lambdas:
        _fail("empty --grid")
    code = EXIT_OK
    sols = []
    try:
        sols = solve_path(X, y, lambdas, tol=tol, max_sweeps=max_sweeps)
    except NonConvergenceError as err:
        code = EXIT_NONCONV
        click.echo(f"error: {err}", err=True)
        # keep solutions before the failure and the failing iterate
        beta = None
        for k, v in enumerate(lambdas[: err.index]):
            s = solve_lasso(X, y, v, tol=tol, max_sweeps=max_sweeps, beta0=beta)
            sols.append(s)
            beta = s.beta_hat
        sols.append(err.solution)
    except (SrcLassoError, ValueError) as err:
        _fail(str(err))
    payload = [s.to_dict() for s in sols]
    body = {"solution": payload[0]} if grid is None and payload else {"path": payload}
    _write(out, f"{command}.json", _dump(_envelope(command, config, None, body)))
    _write_csv(out, "path.csv", ["lambda", "q_hat"], [[s.lam, s.q_hat] for s in sols])
    if code == EXIT_OK and not all(s.kkt.satisfied for s in sols):
        code = EXIT_NONCONV
    sys.exit(code)


_solve_args = [
    click.argument("design_csv", type=click.Path(dir_okay=False)),
    click.argument("response_csv", type=click.Path(dir_okay=False)),
    click.option("--tol", type=float, default=1e-8),
    click.option("--max-sweeps", type=int, default=100_000),
    click.option("--header/--no-header", default=False),
    out_option,
]


def _apply(decorators):
    def wrap(f):
        for d in reversed(decorators):
            f = d(f)
        return f
    return wrap


@main.command("solve")
@_apply(_solve_args)
@click.option("--lambda", "lam", type=float, default=None)
@click.option("--grid", type=str, default=None, help="Comma-separated decreasing penalties.")
def cmd_solve(design_csv, response_csv, tol, max_sweeps, header, out, lam, grid):
    """Solve the LASSO at one penalty (or a grid) with a KKT certificate."""
    _solve_common(design_csv, response_csv, lam, grid, tol, max_sweeps, header, out,
                  "solve" if grid is None else "path")


@main.command("path")
@_apply(_solve_args)
@click.option("--grid", type=str, required=True, help="Comma-separated decreasing penalties.")
def cmd_path(design_csv, response_csv, tol, max_sweeps, header, out, grid):
    """Warm-started LASSO path over a decreasing penalty grid."""
    _solve_common(design_csv, response_csv, None, grid, tol, max_sweeps, header, out, "path")


def _opt_float(v):
    return None if v.strip().lower() in ("", "none") else to_float(v)


BOUNDS_SCHEMA = {
    "q": (to_int, 1),
    "eta1": (to_float, 0.0),
    "eta2": (to_float, 0.0),
    "c_lower": (_opt_float, None),
    "c_upper": (_opt_float, None),
    "C": (_opt_float, None),
    "lambda": (_opt_float, None),
    "n": (to_int, 100),
    "p": (to_int, 1000),
    "q_star": (lambda v: None if v.strip().lower() == "none" else to_int(v), None),
    "sigma": (to_float, 1.0),
    "c0": (to_float, 0.0),
    "a_n": (to_float, 0.0),
}


def _resolve_spectrum(cfg):
    lo, hi, C = cfg["c_lower"], cfg["c_upper"], cfg["C"]
    if C is not None:
        if lo is not None and hi is not None and not math.isclose(hi / lo, C):
            raise ConfigError("C conflicts with c_upper / c_lower", key="C")
        if hi is None and lo is None:
            lo, hi = 1.0, C
        elif hi is None:
            hi = lo * C
        elif lo is None:
            lo = hi / C
    lo = 1.0 if lo is None else lo
    hi = lo if hi is None else hi
    if not 0 < lo <= hi:
        raise ConfigError("need 0 < c_lower <= c_upper", key="c_lower")
    return lo, hi


def evaluate_bounds_config(raw: dict) -> dict:
    cfg = coerce(raw, BOUNDS_SCHEMA)
    lo, hi = _resolve_spectrum(cfg)
    lam_np = lambda_np(cfg["sigma"], cfg["c0"], cfg["a_n"], hi, cfg["n"], cfg["p"])
    lam = cfg["lambda"] if cfg["lambda"] is not None else lam_np
    budget = SparsityBudget(cfg["q"], cfg["eta1"], cfg["eta2"])
    b = theorem_bounds(budget, lo, hi, lam, cfg["n"], q_star=cfg["q_star"], lam_np=lam_np,
                       success_prob=success_probability(cfg["p"], cfg["a_n"], cfg["c0"]))
    resolved = dict(cfg, c_lower=lo, c_upper=hi, C=hi / lo, **{"lambda": lam})
    return {"config": resolved, "bounds": b.to_dict()}


@main.command("bounds")
@click.argument("config_file", type=click.Path(dir_okay=False))
@out_option
def cmd_bounds(config_file, out):
    """Evaluate every explicit constant and threshold from a config file."""
    try:
        res = evaluate_bounds_config(read_kv(config_file))
    except (OSError, SrcLassoError, ValueError) as err:
        _fail(str(err))
    _write(out, "bounds.json", _dump(_envelope("bounds", res["config"], None,
                                               {"bounds": res["bounds"]})))


@main.command("simulate")
@click.argument("config_file", type=click.Path(dir_okay=False))
@click.option("--threads", type=int, default=1, help="Worker threads for replications.")
@out_option
def cmd_simulate(config_file, threads, out):
    """Run Monte-Carlo replications from a config file."""
    try:
        cfg = ExperimentConfig.from_mapping(read_kv(config_file))
        report = run_experiment(cfg, threads=max(1, threads))
    except NonConvergenceError as err:
        _write(out, "report.json", _dump(_envelope("simulate", cfg.to_dict(), cfg.master_seed,
                                                   {"error": str(err), "replication": err.index})))
        _fail(str(err), EXIT_NONCONV)
    except (OSError, SrcLassoError, ValueError) as err:
        _fail(str(err))
    _write(out, "report.json", report.to_json() + "\n")
    _write_csv(out, "replications.csv", REPLICATION_COLUMNS, replication_rows(report))
    _write_csv(out, "path.csv", ["lambda", "q_hat", "bias", "zeta2"],
               [[r["lambda"], r["q_hat"], r["bias"], r["zeta2"]] for r in report.path])
    if cfg.min_frequency is not None:
        keys = ("q_tilde_bound", "bias_bound", "zeta2_bound", "theorem2_inclusion")
        low = {k: report.frequencies[k] for k in keys if report.frequencies[k] < cfg.min_frequency}
        if low:
            click.echo(f"frequency below {cfg.min_frequency}: {low}", err=True)
            sys.exit(EXIT_THRESHOLD)


WISHART_SCHEMA = {
    "m": (to_int, 10),
    "n": (to_int, 200),
    "reps": (to_int, 500),
    "master_seed": (to_int, 0),
    "tau_lower": (_opt_float, None),
    "tau_upper": (_opt_float, None),
    "min_frequency": (_opt_float, None),
}


@main.command("wishart")
@click.argument("config_file", type=click.Path(dir_okay=False))
@out_option
def cmd_wishart(config_file, out):
    """Extreme eigenvalues of W/n for Gaussian Wishart matrices."""
    try:
        cfg = coerce(read_kv(config_file), WISHART_SCHEMA)
        res = wishart_extreme_trials(cfg["m"], cfg["n"], cfg["reps"], cfg["master_seed"],
                                     cfg["tau_lower"], cfg["tau_upper"])
    except (OSError, SrcLassoError, ValueError) as err:
        _fail(str(err))
    _write(out, "wishart.json", _dump(_envelope("wishart", cfg, cfg["master_seed"],
                                                {"summary": res.to_dict()})))
    _write_csv(out, "wishart.csv", ["rep", "lambda_min", "lambda_max"],
               [[i, a, b] for i, (a, b) in enumerate(zip(res.lambda_min, res.lambda_max))])
    if cfg["min_frequency"] is not None and res.frequency is not None \
            and res.frequency < cfg["min_frequency"]:
        click.echo(f"frequency {res.frequency} below {cfg['min_frequency']}", err=True)
        sys.exit(EXIT_THRESHOLD)


if __name__ == "__main__":
    main()
