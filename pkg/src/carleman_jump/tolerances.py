"""Single source for the numerical tolerances used in checks and invariants."""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    eig_margin: float = 1e-10
    sqrt_identity: float = 1e-12
    schur_identity: float = 1e-12
    factorization: float = 1e-10
    ak_bound: float = 1e-10
    det_cross_check: float = 1e-10
    system_residual: float = 1e-10
    q_imag: float = 1e-12
    null_residual: float = 1e-10
    partition_sum: float = 1e-12
    # exp() underflows below about -745; keep shifted exponents above this
    log_budget: float = 700.0


TOL = Tolerances()
