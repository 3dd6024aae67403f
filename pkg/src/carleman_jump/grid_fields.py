"""Piecewise-smooth fields u = H+ u+ + H- u- sampled on a box around x_n = 0.

Both u+ and u- are stored on the whole box as smooth functions; integrals over
a side only use that side's half, with the x_n = 0 layer weighted by 1/2.
Arrays use ``indexing="ij"`` and the last axis is x_n.
"""

from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import NamedTuple

import numpy as np

from .errors import DimensionError, InvalidInputError, InvalidParameterError, UnsupportedOrderError
from .partition_of_unity import bump, bump_deriv
from .weights import weight_function


@dataclass(frozen=True)
class GridSpec:
    n: int
    h: float
    half_width: float

    def __post_init__(self):
        if self.n < 2:
            raise DimensionError("grid dimension must be >= 2")
        if not (self.h > 0 and self.half_width > 0):
            raise InvalidParameterError("h and half_width must be positive")

    @property
    def m(self):
        return int(np.ceil(self.half_width / self.h - 1e-9))

    @property
    def size(self):
        return 2 * self.m + 1

    @property
    def shape(self):
        return (self.size,) * self.n

    def axis(self):
        return self.h * np.arange(-self.m, self.m + 1)

    def points(self):
        ax = self.axis()
        return np.stack(np.meshgrid(*([ax] * self.n), indexing="ij"), axis=-1)

    def interface_points(self):
        ax = self.axis()
        grids = np.meshgrid(*([ax] * (self.n - 1)), indexing="ij")
        return np.stack(list(grids) + [np.zeros_like(grids[0])], axis=-1)

    @property
    def iface(self):
        return self.m

    def to_dict(self):
        return {"n": self.n, "h": self.h, "half_width": self.m * self.h, "nodes_per_axis": self.size}


@dataclass
class GridField:
    spec: GridSpec
    u_plus: np.ndarray
    u_minus: np.ndarray
    rho: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("u_plus", "u_minus"):
            a = np.asarray(getattr(self, name), dtype=complex)
            if a.shape != self.spec.shape:
                raise DimensionError(f"{name} has shape {a.shape}, grid is {self.spec.shape}")
            if not np.all(np.isfinite(a)):
                raise InvalidInputError(f"{name} has non-finite samples")
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def n(self):
        return self.spec.n

    @property
    def h(self):
        return self.spec.h

    def side(self, side):
        if side in ("plus", "+", 2):
            return self.u_plus
        if side in ("minus", "-", 1):
            return self.u_minus
        raise InvalidInputError(f"unknown side {side!r}")

    def trace(self, side):
        return self.side(side)[..., self.spec.iface]

    def boundary_max(self, cells=2):
        """max |u| within ``cells`` nodes of the box boundary."""
        out = 0.0
        for u in (self.u_plus, self.u_minus):
            for ax in range(self.n):
                sl = [slice(None)] * self.n
                for part in (slice(0, cells), slice(-cells, None)):
                    sl[ax] = part
                    out = max(out, float(np.max(np.abs(u[tuple(sl)]))))
        return out

    def scaled(self, c):
        return GridField(self.spec, c * self.u_plus, c * self.u_minus, self.rho, dict(self.meta))

    def with_values(self, u_plus, u_minus, **meta):
        m = dict(self.meta)
        m.update(meta)
        return GridField(self.spec, u_plus, u_minus, self.rho, m)


# finite differences ----------------------------------------------------------

def _d1(u, axis, h):
    """Central first difference; the field vanishes near the boundary, so the
    two end nodes are set to zero."""
    out = np.zeros_like(u)
    n = u.ndim
    c = [slice(None)] * n
    p = [slice(None)] * n
    m = [slice(None)] * n
    c[axis], p[axis], m[axis] = slice(1, -1), slice(2, None), slice(0, -2)
    out[tuple(c)] = (u[tuple(p)] - u[tuple(m)]) / (2.0 * h)
    return out


def _d2(u, axis, h):
    out = np.zeros_like(u)
    n = u.ndim
    c = [slice(None)] * n
    p = [slice(None)] * n
    m = [slice(None)] * n
    c[axis], p[axis], m[axis] = slice(1, -1), slice(2, None), slice(0, -2)
    out[tuple(c)] = (u[tuple(p)] - 2.0 * u[tuple(c)] + u[tuple(m)]) / (h * h)
    return out


def grid_derivative(u, h, multi_index):
    """D^alpha u by second-order central differences (|alpha| <= 2)."""
    k = tuple(int(v) for v in multi_index)
    if len(k) != u.ndim:
        raise DimensionError(f"multi-index {k} does not match a {u.ndim}-d array")
    order = sum(k)
    if order > 2 or min(k) < 0:
        raise UnsupportedOrderError(f"derivative order {order} not supported (max 2)")
    if order == 0:
        return np.array(u)
    axes = [i for i, v in enumerate(k) for _ in range(v)]
    if order == 1:
        return _d1(u, axes[0], h)
    if axes[0] == axes[1]:
        return _d2(u, axes[0], h)
    return _d1(_d1(u, axes[0], h), axes[1], h)


def derivative(field: GridField, side, multi_index):
    return grid_derivative(field.side(side), field.h, multi_index)


def multi_indices(n, k):
    """All multi-indices of order k in n variables."""
    out = []
    for combo in combinations_with_replacement(range(n), k):
        a = [0] * n
        for i in combo:
            a[i] += 1
        out.append(tuple(a))
    return out


def gradient(u, h):
    return np.stack([_d1(u, ax, h) for ax in range(u.ndim)], axis=-1)


def derivative_energy(u, h, k):
    """sum over |alpha| = k of |D^alpha u|^2, pointwise."""
    return sum(np.abs(grid_derivative(u, h, a)) ** 2 for a in multi_indices(u.ndim, k))


# quadrature ------------------------------------------------------------------

def side_weights(spec: GridSpec, side):
    """Trapezoid weights over the side's half box (x_n = 0 layer halved)."""
    wn = np.zeros(spec.size)
    i0 = spec.iface
    if side in ("plus", "+", 2):
        wn[i0:] = 1.0
    else:
        wn[: i0 + 1] = 1.0
    wn[i0] = 0.5
    w = np.ones(spec.shape) * spec.h ** spec.n
    return w * wn


def interface_weights(spec: GridSpec):
    return np.full((spec.size,) * (spec.n - 1), spec.h ** (spec.n - 1))


class Scaled(NamedTuple):
    """A positive quantity stored as value * exp(log_offset)."""
    value: float
    log_offset: float

    def unscaled(self):
        with np.errstate(over="ignore"):
            return float(self.value * np.exp(self.log_offset))


def _weights(params, kind, side):
    return weight_function(params, kind, side)


def weight_values(spec: GridSpec, params, kind, side):
    w, _ = _weights(params, kind, side)
    return w(spec.points())


def default_log_offset(field: GridField, params, kind, tau):
    """2 tau max w over the support box of the field on both halves."""
    X = field.spec.points()
    xt = np.linalg.norm(X[..., :-1], axis=-1)
    box = (xt <= field.rho + 1e-12) & (np.abs(X[..., -1]) <= field.rho + 1e-12)
    best = -np.inf
    for side, half in (("plus", X[..., -1] >= 0), ("minus", X[..., -1] <= 0)):
        w, _ = _weights(params, kind, side)
        sel = box & half
        best = max(best, float(np.max(w(X[sel]))))
    return 2.0 * tau * best


def weighted_volume_term(field: GridField, params, tau, k, use_phi_delta=False, log_offset=None):
    """sum_sides tau^(3-2k) int_side |D^k u|^2 exp(2 tau w), with w = phi_delta or
    psi_epsilon, returned as a :class:`Scaled` value."""
    if tau <= 0:
        raise InvalidParameterError("tau must be positive")
    kind = "phi" if use_phi_delta else "psi"
    if log_offset is None:
        log_offset = default_log_offset(field, params, kind, tau)
    total = 0.0
    for side in ("plus", "minus"):
        wv = weight_values(field.spec, params, kind, side)
        e = np.exp(2.0 * tau * wv - log_offset)
        dens = derivative_energy(field.side(side), field.h, k)
        total += float(np.sum(side_weights(field.spec, side) * dens * e))
    return Scaled(tau ** (3 - 2 * k) * total, float(log_offset))


# H^{1/2} seminorm ---------------------------------------------------------------

def _freqs(shape, h):
    ks = np.meshgrid(*[2.0 * np.pi * np.fft.fftfreq(N, d=h) for N in shape], indexing="ij")
    return np.sqrt(sum(k * k for k in ks))


def fourier_energy(f, h, multiplier, pad=4):
    """int multiplier(|xi|) |f_hat(xi)|^2 d xi with f_hat = int f e^{-i x.xi} dx
    approximated by the scaled DFT.

    ``f`` is compactly supported, so it is zero-padded to ``pad`` times its
    length per axis; this refines the frequency step without changing f_hat.
    """
    f = np.asarray(f, dtype=complex)
    if not np.all(np.isfinite(f)):
        raise InvalidInputError("non-finite samples")
    if f.ndim == 0:
        raise DimensionError("need at least one axis")
    shape = tuple(int(pad) * N for N in f.shape)
    F = np.fft.fftn(f, s=shape, axes=tuple(range(f.ndim))) * h ** f.ndim
    dxi = np.prod([2.0 * np.pi / (N * h) for N in shape])
    return float(np.sum(multiplier(_freqs(shape, h)) * np.abs(F) ** 2) * dxi)


def h_half_seminorm(f, h, pad=4):
    """int |xi'| |f_hat(xi')|^2 d xi' (the squared seminorm)."""
    return fourier_energy(f, h, lambda k: k, pad)


def l2_via_fourier(f, h):
    """int |f|^2 recovered through the same DFT pipeline."""
    f = np.asarray(f)
    return fourier_energy(f, h, np.ones_like, pad=1) / (2.0 * np.pi) ** f.ndim


def double_integral_seminorm(f, h):
    """int int |f(x) - f(y)|^2 / |x - y|^2 dx dy for 1-D samples.

    Direct O(N^2) sum over node pairs, plus the diagonal cells (integrand
    tends to |f'|^2) and the exterior of the sampled interval, where f = 0.
    """
    f = np.asarray(f, dtype=complex)
    if f.ndim != 1:
        raise DimensionError("the direct double integral is implemented in 1-D only")
    N = len(f)
    x = h * np.arange(N)
    diff = np.abs(f[:, None] - f[None, :]) ** 2
    dist = (x[:, None] - x[None, :]) ** 2
    np.fill_diagonal(dist, 1.0)
    inner = np.sum(diff / dist) - np.sum(np.diag(diff))
    fp = np.gradient(f, h)
    diag = np.sum(np.abs(fp) ** 2)
    a, b = x[0] - 0.5 * h, x[-1] + 0.5 * h
    tail = 2.0 * np.sum(np.abs(f) ** 2 * (1.0 / (x - a) + 1.0 / (b - x)))
    return float((inner + diag) * h * h + tail * h)


# traces and jumps -------------------------------------------------------------

@dataclass
class JumpData:
    h0: np.ndarray
    h1: np.ndarray


def interface_matrices(matrices, spec: GridSpec):
    """Coefficient arrays (..., n, n) on the interface layer from either a
    constant pair of matrices or a callable x -> (A+, A-)."""
    if callable(matrices):
        return matrices(spec.interface_points())
    ap, am = (np.asarray(m.a if hasattr(m, "a") else m, dtype=complex) for m in matrices)
    return ap, am


def jump_data(field: GridField, matrices) -> JumpData:
    """h0 = u+ - u- and h1 = A+ grad u+ . e_n - A- grad u- . e_n on x_n = 0.

    ``matrices`` is a pair (A+, A-) of constant matrices, a CoefficientPair
    (its base matrices), or a callable returning interface-layer arrays.
    """
    if hasattr(matrices, "plus") and hasattr(matrices, "minus"):
        matrices = (matrices.plus, matrices.minus)
    ap, am = interface_matrices(matrices, field.spec)
    i0 = field.spec.iface
    gp = gradient(field.u_plus, field.h)[..., i0, :]
    gm = gradient(field.u_minus, field.h)[..., i0, :]
    fp = np.einsum("...j,...j->...", np.broadcast_to(ap[..., -1, :], gp.shape), gp)
    fm = np.einsum("...j,...j->...", np.broadcast_to(am[..., -1, :], gm.shape), gm)
    return JumpData(field.trace("plus") - field.trace("minus"), fp - fm)


def trace_terms(field: GridField, params, tau, use_phi_delta=False, log_offset=None):
    """The four interface groups, each a Scaled value:

    trace0  = sum tau^3 int |u(x',0)|^2 e^{2 tau w}
    trace1  = sum tau   int |Du(x',0)|^2 e^{2 tau w}
    half_u  = sum tau^2 [e^{tau w} u(.,0)]^2
    half_Du = sum [D(e^{tau w} u)(.,0)]^2   (all n components)
    """
    kind = "phi" if use_phi_delta else "psi"
    if log_offset is None:
        log_offset = default_log_offset(field, params, kind, tau)
    spec = field.spec
    P = spec.interface_points()
    wq = interface_weights(spec)
    i0 = spec.iface
    out = dict(trace0=0.0, trace1=0.0, half_u=0.0, half_Du=0.0)
    for side in ("plus", "minus"):
        w, gw = _weights(params, kind, side)
        wv, gv = w(P), gw(P)
        half = np.exp(tau * wv - 0.5 * log_offset)
        u = field.side(side)
        u0 = u[..., i0]
        Du = gradient(u, field.h)[..., i0, :]
        out["trace0"] += tau ** 3 * float(np.sum(wq * np.abs(u0) ** 2 * half ** 2))
        out["trace1"] += tau * float(np.sum(wq * np.sum(np.abs(Du) ** 2, axis=-1) * half ** 2))
        out["half_u"] += tau ** 2 * h_half_seminorm(half * u0, field.h)
        comp = half[..., None] * (Du + tau * u0[..., None] * gv)
        out["half_Du"] += sum(h_half_seminorm(comp[..., j], field.h) for j in range(field.n))
    return {k: Scaled(v, float(log_offset)) for k, v in out.items()}


# synthesis ------------------------------------------------------------------------

FAMILIES = ("bump_poly", "bump_gauss", "matched", "away")


def _radial_bump(X, center, radius):
    """theta0(1.5 |x - c| / radius) and its gradient."""
    Y = X - center
    r = np.linalg.norm(Y, axis=-1)
    t = 1.5 * r / radius
    val = bump(t)
    dr = bump_deriv(t, 1) * 1.5 / radius
    rs = np.where(r > 0, r, 1.0)
    grad = (dr / rs)[..., None] * Y
    return val, grad


def synthesize(n=2, rho=0.5, h=1 / 64, family="bump_poly", h0_amp=0.0, h1_amp=0.0,
               pair=None, center=None, margin_cells=4, gap=None, width=None) -> GridField:
    """Test fields with prescribed jumps.

    ``bump_poly``: u = T(x') V(x_n) p(x_n) per side, T a radial bump of radius
    rho - |center| and V = theta0(1.5 x_n / rho), with the polynomial offsets
    chosen so that h0 = h0_amp T and h1 = h1_amp T exactly for the base
    matrices of ``pair`` (identity if absent). ``bump_gauss`` multiplies T and V
    by Gaussians of width rho/3. ``matched`` is bump_poly with zero jumps.
    ``away`` places vertical bumps at distance >= ``gap`` from the interface.
    """
    if family not in FAMILIES:
        raise InvalidParameterError(f"unknown family {family!r}; expected one of {FAMILIES}")
    if rho <= 0 or h <= 0:
        raise InvalidParameterError("rho and h must be positive")
    c = np.zeros(n - 1) if center is None else np.asarray(center, dtype=float).reshape(n - 1)
    rb = rho - float(np.linalg.norm(c))
    if rb <= 0:
        raise InvalidParameterError("bump center lies outside the support radius")
    spec = GridSpec(n, h, rho + margin_cells * h)
    X = spec.points()
    Xt, xn = X[..., :-1], X[..., -1]
    T, gT = _radial_bump(Xt, c, rb)
    meta = {"family": family, "center": c.tolist(), "h0_amp": h0_amp, "h1_amp": h1_amp}

    if family == "away":
        g = rho / 3 if gap is None else float(gap)
        if not 0 < g < rho:
            raise InvalidParameterError("gap must lie in (0, rho)")
        wd = (rho - g) / 3.0 if width is None else float(width)
        mid = 0.5 * (g + rho)
        up = T * bump((xn - mid) / wd)
        um = (0.7 + 0.2j) * T * bump((xn + mid) / wd)
        meta.update(gap=g, h0_amp=0.0, h1_amp=0.0)
        return GridField(spec, up, um, rho, meta)

    if family == "matched":
        h0_amp = h1_amp = 0.0
        meta.update(h0_amp=0.0, h1_amp=0.0)
    V = bump(1.5 * xn / rho)
    if family == "bump_gauss":
        s2 = (rho / 3.0) ** 2
        G = np.exp(-np.sum((Xt - c) ** 2, axis=-1) / (2 * s2))
        gT = gT * G[..., None] + T[..., None] * G[..., None] * (-(Xt - c) / s2)
        T = T * G
        V = V * np.exp(-xn ** 2 / (2 * s2))
    if pair is None:
        ap = am = np.eye(n, dtype=complex)
    else:
        ap, am = np.asarray(pair.plus.a), np.asarray(pair.minus.a)
    pm = (1.0, 0.5, -0.8)                      # p-(x_n) = 1 + 0.5 x_n - 0.8 x_n^2
    p0 = pm[0] + h0_amp
    s1 = (h1_amp + am[-1, -1] * pm[1]) / ap[-1, -1]
    pp = (p0, s1, 0.6)
    poly = lambda q: q[0] + q[1] * xn + q[2] * xn * xn
    q = -np.einsum("...j,j->...", gT, ap[-1, :-1] * pp[0] - am[-1, :-1] * pm[0]) / ap[-1, -1]
    up = T * V * poly(pp) + xn * q * V
    um = T * V * poly(pm)
    meta["tangential_profile"] = "radial_bump" + ("*gauss" if family == "bump_gauss" else "")
    return GridField(spec, up, um, rho, meta)


def tangential_profile(field: GridField):
    """T(x') on the interface layer for synthesized fields (h0 = h0_amp T)."""
    spec = field.spec
    c = np.asarray(field.meta.get("center", np.zeros(spec.n - 1)))
    Xt = spec.interface_points()[..., :-1]
    T, _ = _radial_bump(Xt, c, field.rho - float(np.linalg.norm(c)))
    if field.meta.get("family") == "bump_gauss":
        s2 = (field.rho / 3.0) ** 2
        T = T * np.exp(-np.sum((Xt - c) ** 2, axis=-1) / (2 * s2))
    return T
