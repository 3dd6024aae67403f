"""Carleman weights.

``psi`` is the piecewise quadratic weight
``alpha_side * x_n + beta * x_n**2 / 2 - epsilon * |x'|**2 / 2`` and
``phi_delta(x) = psi_delta(x / delta)`` its rescaled version. Points are arrays
whose last axis has length n; the last coordinate is x_n.
"""

from dataclasses import asdict, dataclass

import numpy as np

from .errors import InvalidInputError, InvalidParameterError

SIDES = ("plus", "minus")


@dataclass(frozen=True)
class WeightParameters:
    alpha_plus: float
    alpha_minus: float
    beta: float = 1.0
    epsilon: float = 0.1
    delta: float = 0.1

    def __post_init__(self):
        for name in ("alpha_plus", "alpha_minus", "beta", "epsilon", "delta"):
            v = float(getattr(self, name))
            if not np.isfinite(v) or v <= 0:
                raise InvalidParameterError(f"{name} must be positive, got {v}")
            object.__setattr__(self, name, v)
        if self.delta > 1:
            raise InvalidParameterError(f"delta must lie in (0, 1], got {self.delta}")

    def alpha(self, side):
        return self.alpha_plus if _side(side) == "plus" else self.alpha_minus

    @property
    def ratio(self):
        return self.alpha_plus / self.alpha_minus

    def localization_bound(self, side):
        """Upper bound alpha/(2 beta) on the pseudoconvexity radius."""
        return self.alpha(side) / (2.0 * self.beta)

    def replace(self, **kw):
        d = asdict(self)
        d.update(kw)
        return WeightParameters(**d)

    def to_dict(self):
        return asdict(self)


def _side(side):
    if side in ("plus", "+", 2):
        return "plus"
    if side in ("minus", "-", 1):
        return "minus"
    raise InvalidInputError(f"side must be 'plus' or 'minus', got {side!r}")


def _points(x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] < 2:
        raise InvalidInputError("points need at least 2 coordinates")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("non-finite point coordinates")
    return x


def _check_side(x, side):
    xn = x[..., -1]
    if side == "plus" and np.any(xn < 0):
        raise InvalidInputError("side 'plus' evaluated at x_n < 0 (pass extend=True "
                                "to evaluate the smooth extension)")
    if side == "minus" and np.any(xn > 0):
        raise InvalidInputError("side 'minus' evaluated at x_n > 0 (pass extend=True "
                                "to evaluate the smooth extension)")


def _quadratic(alpha, beta, eps, x):
    xn = x[..., -1]
    xt2 = np.sum(x[..., :-1] ** 2, axis=-1)
    return alpha * xn + 0.5 * beta * xn * xn - 0.5 * eps * xt2


def psi(params: WeightParameters, x, side, extend=False):
    """psi_epsilon on the given side.

    The side is always explicit; at x_n = 0 both sides agree. With
    ``extend=True`` the side's formula is evaluated everywhere, which is how
    the grid code uses it for the smooth extensions u+-.
    """
    side = _side(side)
    x = _points(x)
    if not extend:
        _check_side(x, side)
    return _quadratic(params.alpha(side), params.beta, params.epsilon, x)


def grad_psi(params: WeightParameters, x, side, extend=False):
    side = _side(side)
    x = _points(x)
    if not extend:
        _check_side(x, side)
    g = np.empty_like(x)
    g[..., :-1] = -params.epsilon * x[..., :-1]
    g[..., -1] = params.alpha(side) + params.beta * x[..., -1]
    return g


def hess_psi(params: WeightParameters, n):
    """Constant Hessian diag(-epsilon I_{n-1}, beta)."""
    d = np.full(n, -params.epsilon)
    d[-1] = params.beta
    return np.diag(d)


def _delta_side(x, side):
    if side is not None:
        return _side(side)
    xn = x[..., -1]
    if np.ndim(xn) and (np.any(xn > 0) and np.any(xn < 0)):
        raise InvalidInputError("mixed-sign x_n; call once per side or pass side")
    return "plus" if np.all(xn >= 0) else "minus"


def phi_delta(params: WeightParameters, x, side=None, extend=False):
    """phi_delta(x) = psi_delta(x / delta): epsilon is replaced by delta.

    Without ``side`` the side follows the sign of x_n (x_n >= 0 is 'plus').
    """
    if params.delta <= 0:
        raise InvalidParameterError("delta must be positive")
    x = _points(x)
    side = _delta_side(x, side)
    if not extend:
        _check_side(x, side)
    return _quadratic(params.alpha(side), params.beta, params.delta, x / params.delta)


def grad_phi_delta(params: WeightParameters, x, side, extend=False):
    side = _side(side)
    x = _points(x)
    if not extend:
        _check_side(x, side)
    d = params.delta
    y = x / d
    g = np.empty_like(x)
    g[..., :-1] = -y[..., :-1]
    g[..., -1] = (params.alpha(side) + params.beta * y[..., -1]) / d
    return g


def weight_function(params, kind, side):
    """(w, grad w) callables of a point array, for kind 'psi' or 'phi'."""
    if kind == "psi":
        return (lambda x: psi(params, x, side, extend=True),
                lambda x: grad_psi(params, x, side, extend=True))
    if kind == "phi":
        return (lambda x: phi_delta(params, x, side, extend=True),
                lambda x: grad_phi_delta(params, x, side, extend=True))
    raise InvalidInputError(f"unknown weight kind {kind!r}")
