"""Numerical checks for Carleman estimates of complex elliptic operators with
a jump across a flat interface."""

__version__ = "0.1.0"

from .coefficients import (CoefficientPair, ComplexSymmetricMatrix, derived_constants,
                           gamma_threshold, pair_from_config, perturbed_pair, validate)
from .weights import WeightParameters, grad_psi, hess_psi, phi_delta, psi
from .symbol_analysis import factor_at, principal_sqrt, principal_symbol
from .transmission import alpha_ratio, certify_transmission, classify, det_T
from .pseudoconvexity import calibrate_epsilon, certify, eval_Q, null_points
from .partition_of_unity import audit, build_partition, bump, vertical_cutoff
from .grid_fields import GridField, GridSpec, h_half_seminorm, jump_data, synthesize
from .carleman_harness import (CarlemanReport, apply_operator, assemble, interior_check,
                               split_check, tau_sweep)
from .analysis import analyze, auto_weights

__all__ = [
    "CoefficientPair", "ComplexSymmetricMatrix", "derived_constants", "gamma_threshold",
    "pair_from_config", "perturbed_pair", "validate", "WeightParameters", "grad_psi",
    "hess_psi", "phi_delta", "psi", "factor_at", "principal_sqrt", "principal_symbol",
    "alpha_ratio", "certify_transmission", "classify", "det_T", "calibrate_epsilon", "certify",
    "eval_Q", "null_points", "audit", "build_partition", "bump", "vertical_cutoff", "GridField",
    "GridSpec", "h_half_seminorm", "jump_data", "synthesize", "CarlemanReport",
    "apply_operator", "assemble", "interior_check", "split_check", "tau_sweep", "analyze",
    "auto_weights",
]
