"""Smooth cutoffs and the lattice partition of unity eta_{g,mu}.

The bump is theta0(t) = T(3 - 2|t|) with the smooth step
T(x) = s(x) / (s(x) + s(1 - x)), s(x) = exp(-1/x) for x > 0 and 0 otherwise,
so theta0 = 1 on [-1, 1] and theta0 = 0 outside (-3/2, 3/2), exactly.
"""

from dataclasses import asdict, dataclass, field
from itertools import product

import numpy as np

from .errors import ConstraintError, InvalidParameterError, UnsupportedOrderError


def _s(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def _s_derivs(x):
    """s, s', s'' at x (all zero for x <= 0)."""
    x = np.asarray(x, dtype=float)
    s = _s(x)
    xs = np.where(x > 0, x, 1.0)
    d1 = np.where(x > 0, s / xs ** 2, 0.0)
    d2 = np.where(x > 0, s * (1.0 / xs ** 4 - 2.0 / xs ** 3), 0.0)
    return s, d1, d2


def smooth_step(x, order=0):
    """T(x) and its first two derivatives."""
    s1, s1d, s1dd = _s_derivs(x)
    s2, s2d, s2dd = _s_derivs(1.0 - np.asarray(x, dtype=float))
    # chain rule for s(1 - x)
    s2d, s2dd = -s2d, s2dd
    D = s1 + s2
    if order == 0:
        return s1 / D
    N = s1d * s2 - s1 * s2d
    if order == 1:
        return N / D ** 2
    Nd = s1dd * s2 - s1 * s2dd
    Dd = s1d + s2d
    return (Nd * D - 2.0 * N * Dd) / D ** 3


def bump(t):
    """theta0(t); equals 1 on [-1, 1] and 0 for |t| >= 3/2."""
    t = np.asarray(t, dtype=float)
    return smooth_step(3.0 - 2.0 * np.abs(t))


def bump_deriv(t, order=1):
    if order not in (0, 1, 2):
        raise UnsupportedOrderError(f"derivative order {order} not supported (max 2)")
    t = np.asarray(t, dtype=float)
    x = 3.0 - 2.0 * np.abs(t)
    if order == 0:
        return smooth_step(x)
    if order == 1:
        return -2.0 * np.sign(t) * smooth_step(x, 1)
    return 4.0 * smooth_step(x, 2)


class PartitionGrid:
    """eta_g(x) = theta_g(x) / theta_bar(x) on the lattice g / mu, g in Z^d,
    restricted to the indices whose supports meet ``box``.

    Both theta_g and theta_bar factor over coordinates, which keeps every
    evaluation a product of 1-D sums.
    """

    def __init__(self, mu, d, box=(-1.0, 1.0)):
        if mu < 1:
            raise InvalidParameterError(f"mu must be >= 1, got {mu}")
        if d < 1:
            raise InvalidParameterError("dimension must be >= 1")
        self.mu = float(mu)
        self.d = int(d)
        lo, hi = float(box[0]), float(box[1])
        self.box = (lo, hi)
        self.g_min = int(np.floor(lo * self.mu - 1.5))
        self.g_max = int(np.ceil(hi * self.mu + 1.5))

    @property
    def indices_1d(self):
        return np.arange(self.g_min, self.g_max + 1)

    def indices(self):
        return list(product(self.indices_1d, repeat=self.d))

    def center(self, g):
        return np.asarray(g, dtype=float) / self.mu

    def _coords(self, x):
        x = np.asarray(x, dtype=float)
        if self.d == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        if x.shape[-1] != self.d:
            raise InvalidParameterError(f"points must have {self.d} coordinates")
        return x

    def _bar_1d(self, t):
        # sum over the full lattice; only |mu t - g| < 3/2 contributes
        k = np.floor(self.mu * t)
        tot = np.zeros_like(t)
        for off in range(-2, 4):
            tot = tot + bump(self.mu * t - (k + off))
        return tot

    def theta(self, g, x):
        x = self._coords(x)
        y = self.mu * x - np.asarray(g, dtype=float)
        return np.prod(bump(y), axis=-1)

    def theta_bar(self, x):
        x = self._coords(x)
        return np.prod(self._bar_1d(x), axis=-1)

    def eta(self, g, x):
        return self.theta(g, x) / self.theta_bar(x)

    def eta_sum(self, x):
        """sum_g eta_g(x), accumulated term by term over the stored indices."""
        x = self._coords(x)
        bar = self.theta_bar(x)
        tot = np.zeros(x.shape[:-1])
        for g in self.indices():
            tot += self.theta(g, x) / bar
        return tot


def build_partition(mu, d, bounding_box=(-1.0, 1.0)):
    return PartitionGrid(mu, d, bounding_box)


def overlap_cardinality(part: PartitionGrid, g=None, resolution=64):
    """Number of g' whose support meets supp theta_g, found numerically on a
    fine grid covering supp theta_g."""
    g = np.zeros(part.d, dtype=int) if g is None else np.asarray(g, dtype=int)
    t = np.linspace(-1.5, 1.5, 2 * resolution + 3)[1:-1]
    axes = [(gi + t) / part.mu for gi in g]
    X = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    base = part.theta(g, X) > 0
    count = 0
    for off in product(range(-4, 5), repeat=part.d):
        gp = g + np.asarray(off)
        if np.any(base & (part.theta(gp, X) > 0)):
            count += 1
    return count


@dataclass
class PartitionAudit:
    mu: float
    d: int
    nodes: int
    sum_deviation: float
    support_violation: float
    theta_bar_min: float
    overlap: int
    C1: list = field(default_factory=list)   # |D^k theta_g| / mu^k, k = 0, 1, 2
    C2: list = field(default_factory=list)   # |D^k theta_bar| / mu^k
    C3: list = field(default_factory=list)   # |D^k eta_g| / mu^k
    plateau_gradient: float = 0.0

    @property
    def constants(self):
        """C1, C2, C3 as bounds valid for k = 0, 1, 2 (never below 1)."""
        return {name: max(1.0, max(vals)) for name, vals in
                (("C1", self.C1), ("C2", self.C2), ("C3", self.C3))}

    def to_dict(self):
        d = asdict(self)
        d["constants"] = self.constants
        return d


def _fd_max(f, X, h, d):
    """Max over points of |f|, max|grad f| and max|second partials| by central
    differences with step h."""
    f0 = f(X)
    m0 = np.max(np.abs(f0))
    m1 = m2 = 0.0
    eye = np.eye(d) * h
    for i in range(d):
        fp, fm = f(X + eye[i]), f(X - eye[i])
        m1 = max(m1, np.max(np.abs(fp - fm)) / (2 * h))
        m2 = max(m2, np.max(np.abs(fp - 2 * f0 + fm)) / h ** 2)
        for j in range(i + 1, d):
            fpp = f(X + eye[i] + eye[j])
            fpm = f(X + eye[i] - eye[j])
            fmp = f(X - eye[i] + eye[j])
            fmm = f(X - eye[i] - eye[j])
            m2 = max(m2, np.max(np.abs(fpp - fpm - fmp + fmm)) / (4 * h * h))
    return [float(m0), float(m1), float(m2)]


def audit(part: PartitionGrid, nodes=10_000, cells=3, per_cell=40):
    """Checks of the partition properties on audit grids.

    Sum-to-one and support containment use a grid of about ``nodes`` points
    over the bounding box. Derivative constants use a grid covering ``cells``
    lattice cells on each side of the origin with ``per_cell`` points per
    cell, so the sampling pattern is the same for every mu; finite differences
    use the step 1e-4 / mu.
    """
    d, mu = part.d, part.mu
    per_axis = max(2, int(round(nodes ** (1.0 / d))))
    ax = np.linspace(part.box[0], part.box[1], per_axis)
    X = np.stack(np.meshgrid(*([ax] * d), indexing="ij"), axis=-1)
    dev = float(np.max(np.abs(part.eta_sum(X) - 1.0)))
    bar_min = float(np.min(part.theta_bar(X)))

    viol = 0.0
    for g in part.indices():
        outside = np.max(np.abs(X - part.center(g)), axis=-1) >= 1.5 / mu
        if np.any(outside):
            viol = max(viol, float(np.max(np.abs(part.eta(g, X[outside])))))

    fine = (np.arange(-cells * per_cell, cells * per_cell + 1) + 0.5 / np.pi) / (per_cell * mu)
    Y = np.stack(np.meshgrid(*([fine] * d), indexing="ij"), axis=-1)
    h = 1e-4 / mu
    g0 = np.zeros(d, dtype=int)
    c1 = _fd_max(lambda Z: part.theta(g0, Z), Y, h, d)
    c2 = _fd_max(part.theta_bar, Y, h, d)
    c3 = _fd_max(lambda Z: part.eta(g0, Z), Y, h, d)
    scale = [1.0, mu, mu * mu]
    # theta_g is identically 1 on the inner cube Q_{1/mu}(x_g), so its gradient vanishes there
    inner = np.max(np.abs(Y), axis=-1) < 1.0 / mu - 2 * h
    c_inner = _fd_max(lambda Z: part.theta(g0, Z), Y[inner], h, d)[1] if np.any(inner) else 0.0
    return PartitionAudit(
        mu=mu, d=d, nodes=int(X[..., 0].size), sum_deviation=dev, support_violation=viol,
        theta_bar_min=bar_min, overlap=overlap_cardinality(part),
        C1=[c / s for c, s in zip(c1, scale)], C2=[c / s for c, s in zip(c2, scale)],
        C3=[c / s for c, s in zip(c3, scale)], plateau_gradient=float(c_inner))


def vertical_cutoff(mu, r0=0.5):
    """(eta_mu, 1 - eta_mu) as callables of x_n, with eta_mu(x_n) = theta0(mu x_n).

    Requires 2 / mu < r0.
    """
    if not mu >= 1:
        raise InvalidParameterError(f"mu must be >= 1, got {mu}")
    if not 2.0 / mu < r0:
        raise ConstraintError(f"cutoff scale 2/mu = {2.0 / mu:.4g} must be below r0 = {r0}")
    eta = lambda xn: bump(mu * np.asarray(xn, dtype=float))
    return eta, (lambda xn: 1.0 - eta(xn))
