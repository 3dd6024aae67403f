"""End-to-end analysis of a coefficient pair: hypotheses, symbol facts,
transmission and pseudoconvexity, plus the automatic weight chain."""

import logging

import numpy as np

from .coefficients import CoefficientPair, derived_constants, gamma_threshold, validate
from .errors import CarlemanError, InvalidInputError, PseudoconvexityError
from .pseudoconvexity import calibrate_pair, certify_pair
from .sampling import sphere_points
from .symbol_analysis import factor_arrays
from .transmission import alpha_ratio, certify_transmission
from .weights import WeightParameters

log = logging.getLogger(__name__)

WEIGHT_FIELDS = ("alpha_plus", "alpha_minus", "beta", "epsilon", "delta")


def auto_weights(pair: CoefficientPair, sphere_samples=2048, overrides=None) -> WeightParameters:
    """beta = 1, alpha_minus = 1, alpha_plus from the ratio condition, epsilon
    from calibration and delta = epsilon. Any field in ``overrides`` wins;
    alpha_plus follows an overridden alpha_minus to keep the ratio."""
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    unknown = set(overrides) - set(WEIGHT_FIELDS)
    if unknown:
        raise InvalidInputError(f"unknown weight fields {sorted(unknown)}")
    beta = float(overrides.get("beta", 1.0))
    am = float(overrides.get("alpha_minus", 1.0))
    ap = overrides.get("alpha_plus")
    if ap is None:
        ap = am * alpha_ratio(pair, sphere_samples)
    probe = WeightParameters(float(ap), am, beta)
    eps = overrides.get("epsilon")
    if eps is None:
        eps = calibrate_pair(pair, probe, sphere_samples)
    delta = overrides.get("delta", min(float(eps), 1.0))
    return WeightParameters(float(ap), am, beta, float(eps), float(delta))


def per_side_gamma0(pair: CoefficientPair):
    """gamma0 with bounds bracketing each side separately (smaller of the two)."""
    vals = []
    for side in ("plus", "minus"):
        m = pair.side(side)
        eigs = np.concatenate([np.linalg.eigvalsh(m.M), np.linalg.eigvalsh(m.N)])
        vals.append(gamma_threshold(float(eigs.min()), float(eigs.max()), pair.n))
    return float(min(vals))


def weights_summary(pair: CoefficientPair, weights: WeightParameters):
    d = derived_constants(pair)
    out = weights.to_dict()
    out["gamma0"] = d.gamma0
    out["ratio"] = weights.ratio
    return out


def symbol_summary(pair: CoefficientPair, samples=2048):
    """Extremes of the factorization quantities over unit xi'."""
    xi = sphere_points(pair.n - 1, samples)
    d = derived_constants(pair)
    out = {}
    for side in ("plus", "minus"):
        f = factor_arrays(pair.side(side), xi)
        A, F, B = f["A"], f["F"], f["B"]
        margin = A - np.sqrt(d.lambda_tilde1 + F ** 2)
        cap = pair.n * (pair.Lambda0 / pair.lambda0) ** 2 - (A ** 2 + B ** 2)
        out[side] = {
            "min_A": float(A.min()),
            "min_A_minus_F": float((A - F).min()),
            "min_lower_bound_margin": float(margin.min()),
            "min_cap_margin": float(cap.min()),
            "max_schur_defect": float(np.max(f["schur_defect"])),
        }
    out["xi_samples"] = int(len(xi))
    return out


def analyze(pair: CoefficientPair, weights=None, sphere_samples=2048, null_samples=2048,
            certify_samples=4096, seed=0, weight_overrides=None):
    """Returns (report dict, violations list). Without ``weights`` the automatic
    chain runs, with ``weight_overrides`` applied."""
    val = validate(pair)
    d = derived_constants(pair)
    violations = []
    if not val.passed:
        violations.append({"kind": "hypothesis", "messages": list(val.messages)})
    report = {
        "validation": val.to_dict(),
        "derived": {"lambda_tilde1": d.lambda_tilde1, "lambda_tilde2": d.lambda_tilde2,
                    "gamma0": d.gamma0,
                    "gamma0_per_side": per_side_gamma0(pair)},
    }
    if any(val.symmetry_defect.values()):
        # the factorization below assumes a_lj = a_jl; nothing downstream is meaningful
        report["certified"] = False
        report["violations"] = violations
        return report, violations
    report["symbol"] = symbol_summary(pair, sphere_samples)
    if weights is None:
        weights = auto_weights(pair, sphere_samples, weight_overrides)
    report["weights"] = weights_summary(pair, weights)
    tr = certify_transmission(pair, weights)
    report["transmission"] = tr.to_dict()
    violations.extend(tr.violations)
    try:
        certs = certify_pair(pair, weights, certify_samples, null_samples, seed)
        report["pseudoconvexity"] = {k: c.to_dict() for k, c in certs.items()}
        for side, c in certs.items():
            if not c.lower_bound_holds or c.revalidation_margin < -1e-8:
                violations.append({"kind": "pseudoconvexity", "side": side,
                                   "min_Q": c.min_Q_on_null_set, "lower_bound": c.lower_bound,
                                   "revalidation_margin": c.revalidation_margin})
    except PseudoconvexityError as exc:
        report["pseudoconvexity"] = {"error": str(exc)}
        violations.append({"kind": "pseudoconvexity", "message": str(exc),
                           "xi": None if exc.xi is None else np.asarray(exc.xi).tolist(),
                           "tau": exc.tau})
    except CarlemanError as exc:
        report["pseudoconvexity"] = {"error": str(exc)}
        violations.append({"kind": "pseudoconvexity", "message": str(exc)})
    report["certified"] = not violations
    report["violations"] = violations
    return report, violations
