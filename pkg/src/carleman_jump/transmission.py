"""Transmission-condition analysis at the interface.

For each tangential frequency and tau the pair of conjugated symbols falls in
one of three cases, according to how many roots each side has in the lower
half plane:

* Case1: both roots of side 2 lie below the real axis. The condition holds by
  polynomial division.
* Case2: side 2 has a root with Im >= 0 and side 1 has both roots there. The
  condition fails; the weight ratio alpha_plus/alpha_minus must exclude it.
* Case3: one root of each side below the axis. The condition holds iff the
  4x4 matrix T is nonsingular.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .coefficients import CoefficientPair, gamma_threshold
from .errors import (InternalInconsistencyError, SingularSystemError,
                     TransmissionCertificationError)
from .sampling import sphere_points
from .symbol_analysis import SymbolFactorization, conjugated_roots, factor_arrays
from .tolerances import TOL
from .weights import WeightParameters

CASE1, CASE2, CASE3 = "Case1", "Case2", "Case3"

# fixed test data for the explicit constructions in certify_transmission
_Q1 = (0.7 - 0.2j, -1.3 + 0.5j, 1.0)   # q1(lambda) = q10 + q11 lambda + q12 lambda^2
_Q2 = (1.0, 0.0, 0.0)
_TEST_LAMBDAS = np.array([0.3 + 0.1j, -1.2 + 0.7j, 2.0 - 0.4j])


@dataclass(frozen=True)
class CaseClassification:
    case_id: str
    im_sigma: dict
    detT: complex = None
    certificate: str = ""


def _split(facts):
    f1, f2 = facts
    if f1.side != 1 or f2.side != 2:
        raise ValueError("facts must be ordered (side 1 = minus, side 2 = plus)")
    return f1, f2


def _case_from_signs(x2, y1):
    """x2 = -tau a2 - F2 + A2 (sign of Im sigma_2 on side 2, flipped),
    y1 = tau a1 + F1 - A1 (sign of Im sigma_2 on side 1)."""
    return np.where(x2 < 0, 1, np.where(y1 >= 0, 2, 3))


def classify(facts, alpha_minus, alpha_plus, tau) -> CaseClassification:
    f1, f2 = _split(facts)
    s11, s21 = conjugated_roots(f1, alpha_minus, tau)
    s12, s22 = conjugated_roots(f2, alpha_plus, tau)
    x2 = -tau * alpha_plus - f2.F + f2.A
    y1 = tau * alpha_minus + f1.F - f1.A
    case = {1: CASE1, 2: CASE2, 3: CASE3}[int(_case_from_signs(x2, y1))]
    im = {"sigma1_side1": s11.imag, "sigma2_side1": s21.imag,
          "sigma1_side2": s12.imag, "sigma2_side2": s22.imag}
    det = None
    if case == CASE1:
        cert = "K2 = 1; q1 reduced modulo K1 and the remainder matched by c1, c2"
    elif case == CASE2:
        cert = "violated: K1 has degree 2 and K2 degree 1, three conditions on (c1, c2)"
    else:
        det = det_T(facts, alpha_minus, alpha_plus, tau)
        cert = "remainders are constants; 4x4 system solvable since det T != 0"
    return CaseClassification(case, im, det, cert)


def transmission_matrix(facts, alpha_minus, alpha_plus, tau):
    """The 4x4 matrix T acting on (mu1, mu2, c1, c2)."""
    f1, f2 = _split(facts)
    s11, _ = conjugated_roots(f1, alpha_minus, tau)
    _, s22 = conjugated_roots(f2, alpha_plus, tau)
    a1, a2 = f1.a_nn, f2.a_nn
    z1 = a1 * complex(f1.E, tau * alpha_minus + f1.F)
    z2 = a2 * complex(f2.E, tau * alpha_plus + f2.F)
    return np.array([[1, 0, 0, a1],
                     [0, 1, 0, a2],
                     [s11, 0, 1, z1],
                     [0, -s22, 1, z2]], dtype=complex)


def det_T_closed(facts):
    f1, f2 = _split(facts)
    return f2.a_nn * complex(f2.B, f2.A) + f1.a_nn * complex(f1.B, f1.A)


def det_T(facts, alpha_minus=1.0, alpha_plus=1.0, tau=1.0):
    """Closed-form det T, cross-checked against the assembled 4x4 determinant.

    The closed form does not depend on tau or the alphas; they only enter
    the brute-force matrix.
    """
    closed = det_T_closed(facts)
    brute = complex(np.linalg.det(transmission_matrix(facts, alpha_minus, alpha_plus, tau)))
    scale = max(abs(closed), np.finfo(float).tiny)
    if abs(closed - brute) > TOL.det_cross_check * scale:
        raise InternalInconsistencyError(
            f"det T closed form {closed} differs from 4x4 determinant {brute}")
    return closed


def solve_transmission_system(facts, q1_tilde, q2_tilde, alpha_minus, alpha_plus, tau):
    """(mu1, mu2, c1, c2) solving the reduced Case-3 system."""
    T = transmission_matrix(facts, alpha_minus, alpha_plus, tau)
    rhs = np.array([0.0, 0.0, -q1_tilde, q2_tilde], dtype=complex)
    det = det_T_closed(facts)
    if abs(det) <= np.finfo(float).eps * np.abs(T).max() ** 2:
        raise SingularSystemError(f"T is singular (det T = {det})")
    sol = np.linalg.solve(T, rhs)
    resid = np.abs(T @ sol - rhs).max()
    if resid > TOL.system_residual * (1 + abs(q1_tilde) + abs(q2_tilde)):
        raise SingularSystemError(f"residual {resid:.3e} too large; T is ill-conditioned")
    return tuple(complex(v) for v in sol)


def _ratio_values(pair, xi):
    d2 = factor_arrays(pair.plus, xi)
    d1 = factor_arrays(pair.minus, xi)
    den = d1["A"] - d1["F"]
    if np.any(den <= 0):
        bad = xi[np.argmin(den)]
        raise InternalInconsistencyError(
            f"A - F <= 0 on side 1 at xi'={bad.tolist()}; inputs violate ellipticity")
    return (d2["A"] - d2["F"]) / den


def alpha_ratio(pair: CoefficientPair, sphere_samples=2048, refine=True):
    """Weight ratio alpha_plus/alpha_minus: 1 + max over unit xi' of
    (A2 - F2)/(A1 - F1).

    The maximum is taken over deterministic sphere samples and then polished
    by a local Nelder-Mead search started from the best sample.
    """
    m = pair.n - 1
    xi = sphere_points(m, sphere_samples)
    vals = _ratio_values(pair, xi)
    best = float(vals.max())
    if refine and m >= 2:
        x0 = xi[int(np.argmax(vals))]

        def neg(v):
            nv = np.linalg.norm(v)
            if nv == 0:
                return 0.0
            return -float(_ratio_values(pair, (v / nv)[None, :])[0])

        res = minimize(neg, x0, method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 2000})
        best = max(best, -float(res.fun))
    return best + 1.0


@dataclass
class TransmissionReport:
    certified: bool
    min_abs_detT: float
    alpha_ratio: float
    required_ratio: float
    gamma: float
    gamma0: float
    case_counts: dict
    violations: list = field(default_factory=list)
    margins: dict = field(default_factory=dict)
    samples: dict = field(default_factory=dict)
    certificate: str = ""

    def to_dict(self):
        return {
            "certified": self.certified,
            "min_abs_detT": self.min_abs_detT,
            "alpha_ratio": self.alpha_ratio,
            "required_ratio": self.required_ratio,
            "gamma": self.gamma,
            "gamma0": self.gamma0,
            "case_counts": dict(self.case_counts),
            "violations": list(self.violations),
            "margins": dict(self.margins),
            "samples": dict(self.samples),
            "certificate": self.certificate,
        }

    def require(self):
        if not self.certified:
            raise TransmissionCertificationError(
                f"transmission certification failed with {len(self.violations)} "
                "violation(s)", self.violations)
        return self


def default_tau_grid(points=50, tau_min=1.0, tau_max=1e3):
    return np.geomspace(tau_min, tau_max, points)


def _poly(q, lam):
    return q[0] + q[1] * lam + q[2] * lam * lam


def _case_arrays(d1, d2, a1, a2, tau, q1=_Q1, q2=_Q2, lams=_TEST_LAMBDAS):
    """Classification and constructions for arrays of equal shape.

    ``d1``/``d2`` hold E, F, A, B (broadcast against ``tau``), ``a1``/``a2``
    the constant a_nn per side. Returns a dict of arrays.
    """
    E1, F1, A1, B1 = d1
    E2, F2, A2, B2 = d2
    ta1, ta2 = tau * a1[0], tau * a2[0]
    ann1, ann2 = a1[1], a2[1]
    s11 = (E1 + B1) + 1j * (ta1 + F1 + A1)
    s21 = (E1 - B1) + 1j * (ta1 + F1 - A1)
    s22 = (-E2 + B2) - 1j * (ta2 + F2 - A2)
    x2 = -ta2 - F2 + A2
    y1 = ta1 + F1 - A1
    case = _case_from_signs(x2, y1)
    margin = np.maximum(-x2, -y1)

    shape = np.shape(case)
    lam = lams.reshape((-1,) + (1,) * len(shape))
    w1 = 1j * ta1 + E1 + 1j * F1                    # t2_1 = ann1 (lambda - w1)
    w2 = 1j * ta2 + E2 + 1j * F2                    # t2_2 = ann2 (lambda + w2)
    t1_1, t1_2 = -1.0, 1.0
    t2_1 = ann1 * (lam - w1)
    t2_2 = ann2 * (lam + w2)

    # Case1: K2 = 1, K1 of degree 1 or 2; divide q1 by K1
    deg2 = y1 >= 0
    s_sum, s_prod = s11 + s21, s11 * s21
    r11 = np.where(deg2, q1[1] + q1[2] * s_sum, 0.0)
    r10 = np.where(deg2, q1[0] - q1[2] * s_prod, q1[0] + s11 * (q1[1] + q1[2] * s11))
    U1 = np.where(deg2, q1[2] + 0 * lam, q1[2] * lam + q1[1] + q1[2] * s11)
    K1 = np.where(deg2, (lam - s11) * (lam - s21), lam - s11)
    c2 = r11 / ann1
    c1 = -r10 - c2 * ann1 * w1
    res1 = np.abs(_poly(q1, lam) - (c1 * t1_1 + c2 * t2_1 + U1 * K1)).max(axis=0)
    U2 = _poly(q2, lam) - c1 * t1_2 - c2 * t2_2
    res1 = np.maximum(res1, np.abs(_poly(q2, lam) - (c1 * t1_2 + c2 * t2_2 + U2)).max(axis=0))

    # Case3: constant remainders q1(s11), q2(s22); solve the 4x4 system
    qt1, qt2 = _poly(q1, s11), _poly(q2, s22)
    z1, z2 = ann1 * w1, ann2 * w2
    T = np.zeros(shape + (4, 4), dtype=complex)
    T[..., 0, 0] = 1
    T[..., 0, 3] = ann1
    T[..., 1, 1] = 1
    T[..., 1, 3] = ann2
    T[..., 2, 0] = s11
    T[..., 2, 2] = 1
    T[..., 2, 3] = z1
    T[..., 3, 1] = -s22
    T[..., 3, 2] = 1
    T[..., 3, 3] = z2
    detc = ann2 * (B2 + 1j * A2) + ann1 * (B1 + 1j * A1)
    detc = np.broadcast_to(detc, shape)
    detb = np.linalg.det(T)
    det_defect = np.abs(detc - detb) / np.maximum(np.abs(detc), np.finfo(float).tiny)
    rhs = np.zeros(shape + (4,), dtype=complex)
    rhs[..., 2] = -qt1
    rhs[..., 3] = qt2
    safe = np.abs(detc) > 0
    Ts = np.where(safe[..., None, None], T, np.eye(4))
    sol = np.linalg.solve(Ts, rhs[..., None])[..., 0]
    res3 = np.abs(np.einsum("...ij,...j->...i", T, sol) - rhs).max(axis=-1)
    mu1, mu2, cc1, cc2 = (sol[..., i] for i in range(4))
    # reduced identities qt_k = mu_k K_k + c1 t1_k + c2 t2_k at the test lambdas
    e1 = qt1 - (mu1 * (lam - s11) + cc1 * t1_1 + cc2 * t2_1)
    e2 = qt2 - (mu2 * (lam - s22) + cc1 * t1_2 + cc2 * t2_2)
    res3 = np.maximum(res3, np.maximum(np.abs(e1).max(axis=0), np.abs(e2).max(axis=0)))
    res3 = np.where(safe, res3, np.inf)
    scale1 = 1 + sum(abs(c) for c in q1) * (1 + np.abs(lam).max() ** 2)
    scale3 = 1 + np.abs(qt1) + np.abs(qt2)
    return {"case": case, "margin": margin, "detT": detc, "det_defect": det_defect,
            "res_case1": res1 / scale1, "res_case3": res3 / scale3}


def certify_transmission(pair: CoefficientPair, weights: WeightParameters,
                         xi_grid=None, tau_grid=None, max_violations=20):
    """Check the transmission condition on a grid of (xi', tau).

    ``xi_grid`` is an array of unit tangential frequencies or a sample count
    (default 2048 for n >= 3; for n = 2 the two directions +-1). The tau grid
    is augmented per xi' with the case-boundary values where classification
    can flip.
    """
    m = pair.n - 1
    if xi_grid is None:
        xi_grid = 2048
    xi = sphere_points(m, xi_grid) if np.isscalar(xi_grid) else np.atleast_2d(xi_grid)
    taus = default_tau_grid() if tau_grid is None else np.asarray(tau_grid, dtype=float)
    a1, a2 = weights.alpha_minus, weights.alpha_plus
    d1 = factor_arrays(pair.minus, xi)
    d2 = factor_arrays(pair.plus, xi)
    bd2 = (d2["A"] - d2["F"]) / a2
    bd1 = (d1["A"] - d1["F"]) / a1
    tau = np.concatenate([np.broadcast_to(taus, (len(xi), len(taus))),
                          bd2[:, None], bd1[:, None]], axis=1)
    col = lambda d: tuple(d[k][:, None] for k in ("E", "F", "A", "B"))
    out = _case_arrays(col(d1), col(d2), (a1, d1["a_nn"]), (a2, d2["a_nn"]), tau)

    case = out["case"]
    violations = []
    gamma0 = float(gamma_threshold(pair.lambda0, pair.Lambda0, pair.n)) \
        if 0 < pair.lambda0 <= pair.Lambda0 else float("nan")
    if not pair.gamma < gamma0:
        violations.append({"kind": "gamma-threshold", "gamma": pair.gamma, "gamma0": gamma0,
                           "message": f"gamma={pair.gamma:.6g} is not below gamma0={gamma0:.6g}"})
    idx2 = np.argwhere(case == 2)
    for i, j in idx2[:max_violations]:
        violations.append({"kind": CASE2, "xi_prime": xi[i].tolist(), "tau": float(tau[i, j]),
                           "margin": float(out["margin"][i, j]),
                           "message": "both conjugated symbols leave too many roots in "
                                      "Im >= 0 (Case2)"})
    c3 = case == 3
    c1 = case == 1
    singular = c3 & ~np.isfinite(out["res_case3"])
    bad3 = c3 & (out["res_case3"] > TOL.system_residual)
    bad1 = c1 & (out["res_case1"] > TOL.system_residual)
    for mask, kind in ((singular, "singular-T"), (bad3 & ~singular, "case3-residual"),
                       (bad1, "case1-residual")):
        for i, j in np.argwhere(mask)[:max_violations]:
            violations.append({"kind": kind, "xi_prime": xi[i].tolist(), "tau": float(tau[i, j])})
    det_bad = out["det_defect"] > TOL.det_cross_check
    if np.any(det_bad):
        i, j = np.argwhere(det_bad)[0]
        raise InternalInconsistencyError(
            f"det T closed form disagrees with 4x4 determinant at xi'={xi[i].tolist()}, "
            f"tau={tau[i, j]}: relative defect {out['det_defect'][i, j]:.3e}")

    abs_det = np.abs(out["detT"][:, 0])
    required = alpha_ratio(pair, sphere_samples=len(xi) if m >= 2 else 2)
    # whenever side 2 has a root with Im >= 0, side 1 must not (excludes Case2)
    implication_ok = not idx2.size
    certified = not violations
    margins = {
        "min_case2_margin": float(out["margin"].min()),
        "max_case1_residual": float(out["res_case1"][c1].max()) if c1.any() else 0.0,
        "max_case3_residual": float(out["res_case3"][c3].max()) if c3.any() else 0.0,
        "max_detT_defect": float(out["det_defect"].max()),
        "ratio_condition_holds": bool(weights.ratio > required - 1.0),
        "case_exclusion_holds": implication_ok,
    }
    counts = {CASE1: int(c1.sum()), CASE2: int(idx2.shape[0]), CASE3: int(c3.sum())}
    return TransmissionReport(
        certified=certified,
        min_abs_detT=float(abs_det.min()),
        alpha_ratio=float(weights.ratio),
        required_ratio=float(required),
        gamma=pair.gamma,
        gamma0=gamma0,
        case_counts=counts,
        violations=violations,
        margins=margins,
        samples={"xi_count": int(len(xi)), "tau_count": int(tau.shape[1]),
                 "tau_min": float(taus.min()), "tau_max": float(taus.max())},
        certificate=("case analysis: Case1 by division with remainder, Case3 by solving "
                     "the 4x4 reduced system; Case2 must not occur. Arbitrary polynomial "
                     "data q1, q2 reduce to these cases."),
    )


def scalar_case_check(facts, alpha_minus, alpha_plus, tau, q1=_Q1, q2=_Q2):
    """Single-point version of the certification constructions (for audits)."""
    f1, f2 = _split(facts)
    d1 = (f1.E, f1.F, f1.A, f1.B)
    d2 = (f2.E, f2.F, f2.A, f2.B)
    out = _case_arrays(d1, d2, (alpha_minus, f1.a_nn), (alpha_plus, f2.a_nn),
                       np.asarray(float(tau)), q1, q2)
    return {k: (v.item() if np.ndim(v) == 0 else v) for k, v in out.items()}
