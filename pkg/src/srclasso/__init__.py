"""LASSO model selection under the sparse Riesz condition.

Solver with KKT certificates, sparse eigenvalue certification, the explicit
rate-consistency bounds and Monte-Carlo checks of them.
"""
__version__ = "0.1.0"

from .bounds import (SparsityBudget, TheoryBounds, invariant_ratios, lambda_np, lambda_star,
                     m_star_constants, prop2_probability, success_probability,
                     theorem3_failure_bound, theorem_bounds)
from .certify import (NoCertificate, SrcCertificate, gersgorin_certificate, irrepresentable_check,
                      sampled_extremes, sparse_extremes_exact)
from .design import DesignMatrix, SubsetGram, load_design, standardize_columns, subset_gram
from .diagnostics import (SelectionDiagnostics, SparsityProfile, missing_coefficients,
                          selected_model_bias, sparsity_profile, theorem_verdicts)
from .estimator import ColumnStandardizer, SparseRieszCertifier, SrcLasso
from .simulate import (CovarianceSpec, ExperimentConfig, ExperimentReport, gen_coefficients,
                       gen_gaussian_design, run_experiment, wishart_extreme_trials)
from .solver import KktReport, LassoSolution, kkt_report, solve_lasso, solve_path

__all__ = [
    "ColumnStandardizer", "CovarianceSpec", "DesignMatrix", "ExperimentConfig",
    "ExperimentReport", "KktReport", "LassoSolution", "NoCertificate", "SelectionDiagnostics",
    "SparseRieszCertifier", "SparsityBudget", "SparsityProfile", "SrcCertificate", "SrcLasso",
    "SubsetGram", "TheoryBounds", "gen_coefficients", "gen_gaussian_design",
    "gersgorin_certificate", "invariant_ratios", "irrepresentable_check", "kkt_report",
    "lambda_np", "lambda_star", "load_design", "m_star_constants", "missing_coefficients",
    "prop2_probability", "run_experiment", "sampled_extremes", "selected_model_bias",
    "solve_lasso", "solve_path", "sparse_extremes_exact", "sparsity_profile",
    "standardize_columns", "subset_gram", "success_probability", "theorem3_failure_bound",
    "theorem_bounds", "theorem_verdicts", "wishart_extreme_trials",
]
