"""Strong pseudoconvexity of the weight psi_epsilon for each side's operator.

The functional is

    Q(x, xi, tau) = sum_{l,j} d_lj psi(x) * d_{xi_j} p(zeta) * conj(d_{xi_l} p(zeta)),
    zeta = xi + i tau grad psi(x),

which for the constant Hessian diag(-eps I, beta) is
-eps * sum_{j<n} |d_j p|^2 + beta |d_n p|^2. The null set of the conjugated
symbol at x = 0 is enumerated in closed form from the factorization: with
p(xi) = a_nn ((xi_n + E + iF)^2 + (A - iB)^2) the zeros satisfy

    xi_n + i tau alpha = -E + B - i(F - A)   (tau alpha = A - F > 0), or
    xi_n + i tau alpha = -E - B - i(F + A)   (tau alpha = -(A + F) < 0, discarded).
"""

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize

from .coefficients import ComplexSymmetricMatrix, DerivedConstants, derived_constants
from .errors import InternalInconsistencyError, InvalidParameterError, PseudoconvexityError
from .sampling import ball_points, hemisphere_points, sphere_points
from .symbol_analysis import _complex_matrix, factor_arrays, principal_symbol
from .tolerances import TOL
from .weights import WeightParameters, grad_psi, hess_psi


def _grad_batch(a, zeta):
    """d p / d xi at zeta for symmetric a: 2 a zeta."""
    return 2.0 * np.einsum("lj,...j->...l", a, zeta)


def eval_Q(matrix, weights: WeightParameters, x, xi, tau, side):
    """Q(x, xi, tau) for the operator with coefficient ``matrix`` and the
    side's weight. Inputs broadcast; x, xi carry a trailing axis of length n."""
    a = _complex_matrix(matrix)
    n = a.shape[0]
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    tau = np.asarray(tau, dtype=float)
    zeta = xi + 1j * tau[..., None] * grad_psi(weights, x, side, extend=True)
    g = _grad_batch(a, zeta)
    H = hess_psi(weights, n)
    q = np.einsum("...l,lj,...j->...", g.conj(), H, g)
    scale = np.einsum("...l,lj,...j->...", np.abs(g), np.abs(H), np.abs(g))
    if np.any(np.abs(q.imag) > TOL.q_imag * np.maximum(scale, np.finfo(float).tiny)):
        raise InternalInconsistencyError("Q has a non-negligible imaginary part")
    return q.real


def conjugated_abs(matrix, weights, x, xi, tau, side):
    """|p(xi + i tau grad psi(x))|."""
    x = np.asarray(x, dtype=float)
    zeta = np.asarray(xi, dtype=float) + 1j * np.asarray(tau, dtype=float)[..., None] \
        * grad_psi(weights, x, side, extend=True)
    return np.abs(principal_symbol(matrix, zeta))


@dataclass(frozen=True)
class NullPoint:
    xi: np.ndarray
    tau: float
    side: str
    normalized: bool = False


@dataclass
class NullSet:
    """Null points of p(xi + i tau alpha e_n) for sampled unit xi'."""
    xi: np.ndarray           # (m, n), |xi'| = 1 before normalization
    tau: np.ndarray          # (m,)
    side: str
    alpha: float
    discarded: int
    normalized: bool = False
    max_residual: float = 0.0

    def __len__(self):
        return len(self.tau)

    def points(self):
        return [NullPoint(x, float(t), self.side, self.normalized)
                for x, t in zip(self.xi, self.tau)]

    def normalize(self):
        r = np.sqrt(np.sum(self.xi ** 2, axis=1) + self.tau ** 2)
        return NullSet(self.xi / r[:, None], self.tau / r, self.side, self.alpha,
                       self.discarded, True, self.max_residual)


def null_points(matrix, alpha, count=2048, side="plus", normalize=False):
    """Closed-form null set at x = 0 over ``count`` unit tangential directions.

    Both branches are evaluated; points with tau <= 0 are dropped and counted.
    """
    if alpha <= 0:
        raise InvalidParameterError("alpha must be positive")
    a = _complex_matrix(matrix)
    n = a.shape[0]
    xp = sphere_points(n - 1, count)
    d = factor_arrays(a, xp)
    E, F, A, B = d["E"], d["F"], d["A"], d["B"]
    branches = [(-E + B, (A - F) / alpha), (-E - B, -(A + F) / alpha)]
    xs, ts, dropped = [], [], 0
    for xn, t in branches:
        keep = t > 0
        dropped += int(np.sum(~keep))
        xs.append(np.column_stack([xp[keep], xn[keep]]))
        ts.append(t[keep])
    xi = np.concatenate(xs)
    tau = np.concatenate(ts)
    zeta = xi.astype(complex)
    zeta[:, -1] += 1j * tau * alpha
    res = np.abs(principal_symbol(a, zeta))
    size = np.sum(xi ** 2, axis=1) + tau ** 2
    worst = float(np.max(res / size)) if len(res) else 0.0
    if worst > TOL.null_residual:
        raise InternalInconsistencyError(f"null point residual {worst:.3e} exceeds tolerance")
    out = NullSet(xi, tau, side, float(alpha), dropped, False, worst)
    return out.normalize() if normalize else out


def _null_terms(a, ns: NullSet):
    """Split Q(0) = 4(-eps T1 + beta T2) on the null set."""
    zeta = ns.xi.astype(complex)
    zeta[:, -1] += 1j * ns.tau * ns.alpha
    half = np.einsum("lj,mj->ml", a, zeta)
    return np.sum(np.abs(half[:, :-1]) ** 2, axis=1), np.abs(half[:, -1]) ** 2


def calibrate_epsilon(matrix, weights: WeightParameters, derived=None, sphere_samples=2048,
                      max_halvings=60):
    """Largest eps = beta 2^-m (m >= 1) with min Q over the null set at least half
    of its eps -> 0 limit. ``weights.epsilon`` is ignored; ``derived`` is
    accepted for interface symmetry and unused.
    """
    a = _complex_matrix(matrix)
    beta = weights.beta
    # Q on the null set at x = 0 does not depend on alpha
    ns = null_points(a, 1.0, sphere_samples)
    t1, t2 = _null_terms(a, ns)
    # relative slack so the exact-equality lattice point is not lost to rounding
    target = 0.5 * np.min(4.0 * beta * t2) * (1.0 - 1e-12)
    for m in range(1, max_halvings + 1):
        eps = beta * 2.0 ** -m
        if np.min(4.0 * (-eps * t1 + beta * t2)) >= target:
            return eps
    return beta * 2.0 ** -max_halvings


def calibrate_pair(pair, weights, sphere_samples=2048):
    """Smallest calibrated epsilon over the two sides."""
    return min(calibrate_epsilon(pair.plus, weights, None, sphere_samples),
               calibrate_epsilon(pair.minus, weights, None, sphere_samples))


@dataclass
class PseudoconvexityCertificate:
    side: str
    epsilon_used: float
    min_Q_on_null_set: float
    lower_bound: float
    lower_bound_holds: bool
    bound_constant: float
    C1: float
    C2: float
    delta_prime: float
    delta_prime_limit: float
    revalidation_margin: float
    null_points: int
    null_discarded: int
    samples: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def _s_values(a, weights, side, C1, v):
    """C1 Q(0, .) + |p| at hemisphere-folded unit vectors v (m, n+1)."""
    v = v / np.linalg.norm(v, axis=-1, keepdims=True)
    xi, tau = v[..., :-1], np.abs(v[..., -1])
    x0 = np.zeros_like(xi)
    return C1 * eval_Q(a, weights, x0, xi, tau, side) + conjugated_abs(a, weights, x0, xi, tau, side)


def certify(matrix, weights: WeightParameters, derived: DerivedConstants = None,
            delta_prime=None, samples=4096, side="plus", null_samples=2048,
            ball_samples=48, seed=0):
    """Strong pseudoconvexity certificate for one side: constants C1, C2 with
    C1 Q + |p| >= C2 on the unit sphere at x = 0, and a radius delta' on which
    the same sum stays above C2 / 2.

    Raises PseudoconvexityError with the minimizing (xi, tau) when no C1 in
    {2^k} gives a positive C2, or when no localization radius passes.
    """
    a = _complex_matrix(matrix)
    n = a.shape[0]
    if derived is None:
        mat = matrix if isinstance(matrix, ComplexSymmetricMatrix) else None
        if mat is None:
            raise InvalidParameterError("derived constants are required for raw arrays")
        eigs = np.concatenate([np.linalg.eigvalsh(mat.M), np.linalg.eigvalsh(mat.N)])
        derived = derived_constants((float(eigs.min()), float(eigs.max())), n)
    alpha = weights.alpha(side)
    beta = weights.beta

    ns = null_points(a, alpha, null_samples, side)
    q0 = eval_Q(a, weights, np.zeros_like(ns.xi), ns.xi, ns.tau, side)
    xi_t2 = np.sum(ns.xi[:, :-1] ** 2, axis=1)
    min_q = float(np.min(q0 / xi_t2))
    lower = 2.0 * beta * derived.lambda_tilde1 * derived.lambda0 ** 2
    full2 = np.sum(ns.xi ** 2, axis=1) + (ns.tau * alpha) ** 2
    bound_c = float(np.min(q0 / (beta * full2)))

    # unit sphere, tau >= 0, with the normalized null points included
    nn = ns.normalize()
    S = np.vstack([hemisphere_points(n + 1, samples), np.column_stack([nn.xi, nn.tau])])
    Q = eval_Q(a, weights, np.zeros((len(S), n)), S[:, :-1], S[:, -1], side)
    P = conjugated_abs(a, weights, np.zeros((len(S), n)), S[:, :-1], S[:, -1], side)
    grid = 2.0 ** np.arange(-12, 13)
    mins = np.array([np.min(c * Q + P) for c in grid])
    k = int(np.argmax(mins))
    C1 = float(grid[k])
    vals = C1 * Q + P
    if mins[k] <= 0:
        i = int(np.argmin(vals))
        raise PseudoconvexityError(
            f"no C1 in 2^[-12..12] gives C1*Q + |p| > 0 on S; minimum {mins[k]:.3e} at "
            f"xi={S[i, :-1].tolist()}, tau={S[i, -1]:.6g}", S[i, :-1], float(S[i, -1]))
    C2 = float(mins[k])
    order = np.argsort(vals)
    starts = [S[order[0]]]
    for i in order[1:]:
        if len(starts) >= 8:
            break
        if min(np.linalg.norm(S[i] - s) for s in starts) > 0.05:
            starts.append(S[i])
    f = lambda v: float(_s_values(a, weights, side, C1, v[None, :])[0])
    for s0 in starts:
        res = minimize(f, s0, method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000})
        C2 = min(C2, float(res.fun))
    if C2 <= 0:
        raise PseudoconvexityError(f"refined minimum of C1*Q + |p| is {C2:.3e} <= 0",
                                   S[order[0], :-1], float(S[order[0], -1]))

    rng = np.random.default_rng(seed)
    fresh = rng.standard_normal((samples, n + 1))
    margin = float(np.min(_s_values(a, weights, side, C1, fresh)) - C2)

    # localize to |x| <= delta', halving until it holds
    limit = alpha / (2.0 * beta)
    dp = 0.99 * limit if delta_prime is None else min(float(delta_prime), 0.99 * limit)
    Ssub = S[:: max(1, len(S) // 1024)]
    for _ in range(40):
        X = ball_points(n, ball_samples, dp)
        xx = np.broadcast_to(X[:, None, :], (len(X), len(Ssub), n))
        xi = np.broadcast_to(Ssub[None, :, :-1], xx.shape)
        tau = np.broadcast_to(Ssub[None, :, -1], xx.shape[:-1])
        v = C1 * eval_Q(a, weights, xx, xi, tau, side) + conjugated_abs(a, weights, xx, xi, tau, side)
        if np.min(v) >= 0.5 * C2:
            break
        dp *= 0.5
    else:
        raise PseudoconvexityError("no localization radius found with C1*Q + |p| >= C2/2")

    return PseudoconvexityCertificate(
        side=str(side), epsilon_used=weights.epsilon, min_Q_on_null_set=min_q,
        lower_bound=lower, lower_bound_holds=bool(min_q >= lower - 1e-8),
        bound_constant=bound_c, C1=C1, C2=C2, delta_prime=float(dp),
        delta_prime_limit=float(limit), revalidation_margin=margin,
        null_points=len(ns), null_discarded=ns.discarded,
        samples={"sphere": int(samples), "null_xi": int(null_samples),
                 "ball": int(ball_samples), "seed": int(seed)})


def certify_pair(pair, weights, samples=4096, null_samples=2048, seed=0):
    derived = derived_constants(pair)
    return {side: certify(pair.side(side), weights, derived, None, samples, side,
                          null_samples, seed=seed)
            for side in ("plus", "minus")}
