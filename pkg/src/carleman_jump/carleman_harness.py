"""Empirical probe of the interface Carleman inequality on grid fields.

Four estimate paths are available:

* ``frozen``   weight psi_eps, coefficients A(0), jumps with A(0);
* ``vertical`` weight psi_eps, coefficients A(delta * (0, x_n)), jumps with A(0);
* ``full``     weight phi_delta, coefficients A(x), jumps with A(x', 0);
* ``interior`` weight psi_eps, non-divergence operator with A(delta * x), for
  fields vanishing near the interface (volume terms only).

Every term carries the factor exp(2 tau w); all terms of a row are computed
relative to the common factor exp(log_offset), log_offset = 2 tau max w on the
support, so ratios never overflow.
"""

import csv
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .coefficients import CoefficientPair
from .errors import ConstraintError, InvalidParameterError, OverflowBudgetError, SupportError
from .grid_fields import (GridField, _d1, _d2, derivative_energy, gradient,
                          h_half_seminorm, interface_weights, jump_data, side_weights, synthesize)
from .partition_of_unity import vertical_cutoff
from .tolerances import TOL
from .weights import WeightParameters, weight_function

log = logging.getLogger(__name__)

ESTIMATES = ("frozen", "vertical", "full", "interior")
LHS_KEYS = ("lhs_k0", "lhs_k1", "lhs_k2", "lhs_trace0", "lhs_trace1", "lhs_half_u", "lhs_half_Du")
RHS_KEYS = ("rhs_op", "rhs_half_h1", "rhs_half_Dh0", "rhs_l2_h0", "rhs_l2_h1")
CSV_COLUMNS = ("estimate_id", "tau", "lhs_total", "rhs_total", "ratio") + LHS_KEYS + RHS_KEYS \
    + ("log_offset",)
SIDES = ("plus", "minus")


def _check_estimate(estimate_id):
    if estimate_id not in ESTIMATES:
        raise InvalidParameterError(f"unknown estimate {estimate_id!r}; expected one of {ESTIMATES}")


def _kind(estimate_id):
    return "phi" if estimate_id == "full" else "psi"


def coefficient_arrays(pair: CoefficientPair, spec, mode, delta=1.0):
    """(A+, A-) for the operator: constant (n, n) matrices, or grid arrays
    (..., n, n) when the pair has a spatial field."""
    if mode == "frozen" or pair.spatial_field is None:
        return np.asarray(pair.plus.a), np.asarray(pair.minus.a)
    X = spec.points()
    if mode == "vertical":
        Y = np.zeros_like(X)
        Y[..., -1] = delta * X[..., -1]
    elif mode == "full":
        Y = X
    elif mode == "interior":
        Y = delta * X
    else:
        raise InvalidParameterError(f"unknown coefficient mode {mode!r}")
    return pair.matrices_at(Y)


def _second_derivs(u, h):
    n = u.ndim
    D = [[None] * n for _ in range(n)]
    for j in range(n):
        D[j][j] = _d2(u, j, h)
        first = _d1(u, j, h)
        for l in range(j + 1, n):
            D[j][l] = D[l][j] = _d1(first, l, h)
    return D


def _apply(a, u, h, divergence):
    n = u.ndim
    D = _second_derivs(u, h)
    out = np.zeros_like(u)
    for j in range(n):
        for l in range(n):
            out = out + a[..., j, l] * D[j][l]
    if divergence and a.ndim > 2:
        # (div A)_l = sum_j d_j a_jl
        for l in range(n):
            div_l = sum(_d1(a[..., j, l], j, h) for j in range(n))
            out = out + div_l * _d1(u, l, h)
    return out


def apply_operator(field: GridField, pair: CoefficientPair, mode="frozen", delta=1.0):
    """Per-side div(A grad u), expanded as A : D^2 u + (div A) . grad u.

    ``mode`` is one of frozen, vertical, full (divergence form) or interior
    (non-divergence form A(delta x) : D^2 u).
    """
    ap, am = coefficient_arrays(pair, field.spec, mode, delta)
    div = mode != "interior"
    return (_apply(np.asarray(ap), field.u_plus, field.h, div),
            _apply(np.asarray(am), field.u_minus, field.h, div))


def support_limit(estimate_id, weights: WeightParameters, r0):
    return weights.delta * r0 if estimate_id == "full" else r0


def check_support(field: GridField, limit):
    """Raise SupportError unless u vanishes outside B'_limit x [-limit, limit]."""
    X = field.spec.points()
    rt = np.linalg.norm(X[..., :-1], axis=-1)
    outside = (rt > limit * (1 + 1e-9)) | (np.abs(X[..., -1]) > limit * (1 + 1e-9))
    scale = max(float(np.max(np.abs(field.u_plus))), float(np.max(np.abs(field.u_minus))), 1e-300)
    bad = 0.0
    for u in (field.u_plus, field.u_minus):
        if np.any(outside):
            bad = max(bad, float(np.max(np.abs(u[outside]))))
    if field.rho > limit * (1 + 1e-9) or bad > 1e-14 * scale:
        nz = np.zeros(field.spec.shape, dtype=bool)
        for u in (field.u_plus, field.u_minus):
            nz |= np.abs(u) > 1e-14 * scale
        radius = float(max(np.max(rt[nz]), np.max(np.abs(X[..., -1][nz])))) if nz.any() else 0.0
        raise SupportError(f"field support radius {max(radius, field.rho):.4g} exceeds the "
                           f"admissible radius {limit:.4g}", max(radius, field.rho), limit)


@dataclass
class CarlemanRow:
    estimate_id: str
    tau: float
    terms: dict
    lhs_total: float
    rhs_total: float
    ratio: float
    log_offset: float
    empty: bool = False

    def csv_row(self):
        row = {"estimate_id": self.estimate_id, "tau": self.tau, "lhs_total": self.lhs_total,
               "rhs_total": self.rhs_total, "ratio": self.ratio, "log_offset": self.log_offset}
        row.update({k: self.terms.get(k, 0.0) for k in LHS_KEYS + RHS_KEYS})
        return row


class _Prepared:
    """tau-independent pieces of one (estimate, field, pair, weights) setup."""

    def __init__(self, estimate_id, field, pair, weights, r0):
        _check_estimate(estimate_id)
        self.estimate_id = estimate_id
        self.field = field
        self.weights = weights
        self.kind = _kind(estimate_id)
        spec = field.spec
        h = field.h
        mode = {"frozen": "frozen", "vertical": "vertical", "full": "full",
                "interior": "interior"}[estimate_id]
        Lp, Lm = apply_operator(field, pair, mode, weights.delta)
        X = spec.points()
        P = spec.interface_points()
        self.vol = {}
        for side, u, Lu in (("plus", field.u_plus, Lp), ("minus", field.u_minus, Lm)):
            w, _ = weight_function(weights, self.kind, side)
            q = side_weights(spec, side)
            self.vol[side] = dict(
                w=w(X), q=q, E=[derivative_energy(u, h, k) for k in range(3)], L=np.abs(Lu) ** 2)
        self.iface = None
        if estimate_id != "interior":
            i0 = spec.iface
            w, _ = weight_function(weights, self.kind, "plus")
            wi = w(P)
            sides = {}
            for side in SIDES:
                _, gw = weight_function(weights, self.kind, side)
                u = field.side(side)
                sides[side] = dict(u0=u[..., i0], Du=gradient(u, h)[..., i0, :], gw=gw(P))
            if estimate_id == "full":
                mats = pair.matrices_at
            else:
                mats = (pair.plus, pair.minus)
            jd = jump_data(field, mats)
            # tangential derivatives of h0 from the per-side grid derivatives
            dh0 = sides["plus"]["Du"][..., :-1] - sides["minus"]["Du"][..., :-1]
            _, gw = weight_function(weights, self.kind, "plus")
            self.iface = dict(w=wi, q=interface_weights(spec), sides=sides, h0=jd.h0, h1=jd.h1,
                              dh0=dh0, gwt=gw(P)[..., :-1])
        # support box extent of the weight, for offsets and the overflow budget
        limit = support_limit(estimate_id, weights, r0)
        rt = np.linalg.norm(X[..., :-1], axis=-1)
        box = (rt <= limit + 1e-12) & (np.abs(X[..., -1]) <= limit + 1e-12)
        wmax, wmin = -np.inf, np.inf
        for side, half in (("plus", X[..., -1] >= 0), ("minus", X[..., -1] <= 0)):
            vals = self.vol[side]["w"][box & half]
            wmax, wmin = max(wmax, float(vals.max())), min(wmin, float(vals.min()))
        self.w_max, self.w_min = wmax, wmin
        osc = max(wmax - wmin, 1e-300)
        self.tau_max = TOL.log_budget / (2.0 * osc)

    def row(self, tau):
        c = 2.0 * tau * self.w_max
        t = {k: 0.0 for k in LHS_KEYS + RHS_KEYS}
        for side in SIDES:
            v = self.vol[side]
            e = v["q"] * np.exp(2.0 * tau * v["w"] - c)
            for k in range(3):
                t[f"lhs_k{k}"] += tau ** (3 - 2 * k) * float(np.sum(e * v["E"][k]))
            t["rhs_op"] += float(np.sum(e * v["L"]))
        if self.iface is not None:
            f = self.iface
            half = np.exp(tau * f["w"] - 0.5 * c)
            q = f["q"]
            h = self.field.h
            for side in SIDES:
                s = f["sides"][side]
                t["lhs_trace0"] += tau ** 3 * float(np.sum(q * np.abs(s["u0"] * half) ** 2))
                t["lhs_trace1"] += tau * float(np.sum(q * np.sum(np.abs(s["Du"]) ** 2, axis=-1)
                                                      * half ** 2))
                t["lhs_half_u"] += tau ** 2 * h_half_seminorm(half * s["u0"], h)
                comp = half[..., None] * (s["Du"] + tau * s["u0"][..., None] * s["gw"])
                t["lhs_half_Du"] += sum(h_half_seminorm(comp[..., j], h)
                                        for j in range(comp.shape[-1]))
            h0, h1 = f["h0"], f["h1"]
            t["rhs_half_h1"] = h_half_seminorm(half * h1, h)
            comp = half[..., None] * (f["dh0"] + tau * h0[..., None] * f["gwt"])
            t["rhs_half_Dh0"] = sum(h_half_seminorm(comp[..., j], h) for j in range(comp.shape[-1]))
            t["rhs_l2_h0"] = tau ** 3 * float(np.sum(q * np.abs(h0 * half) ** 2))
            t["rhs_l2_h1"] = tau * float(np.sum(q * np.abs(h1 * half) ** 2))
        lhs = sum(t[k] for k in LHS_KEYS)
        rhs = sum(t[k] for k in RHS_KEYS)
        empty = lhs == 0.0 and rhs == 0.0
        ratio = 0.0 if empty else (lhs / rhs if rhs > 0 else float("inf"))
        return CarlemanRow(self.estimate_id, float(tau), t, lhs, rhs, ratio, c, empty)


def assemble(estimate_id, field: GridField, pair: CoefficientPair, weights: WeightParameters,
             tau, r0=0.5) -> CarlemanRow:
    """One row of the estimate at ``tau``."""
    _check_estimate(estimate_id)
    if tau <= 0:
        raise InvalidParameterError("tau must be positive")
    check_support(field, support_limit(estimate_id, weights, r0))
    return _Prepared(estimate_id, field, pair, weights, r0).row(tau)


@dataclass
class CarlemanReport:
    estimate_id: str
    rows: list
    max_ratio: float
    argmax_tau: float
    knee_tau: float
    tau0: float
    bounded: bool
    tau_max_budget: float
    grid: dict
    weights: dict
    r0: float
    field_meta: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    @property
    def taus(self):
        return np.array([r.tau for r in self.rows])

    @property
    def ratios(self):
        return np.array([r.ratio for r in self.rows])

    def to_dict(self):
        return {
            "estimate_id": self.estimate_id,
            "max_ratio": self.max_ratio,
            "argmax_tau": self.argmax_tau,
            "knee_tau": self.knee_tau,
            "tau0": self.tau0,
            "bounded": self.bounded,
            "tau_max_budget": self.tau_max_budget,
            "grid": dict(self.grid),
            "weights": dict(self.weights),
            "r0": self.r0,
            "field": dict(self.field_meta),
            "warnings": list(self.warnings),
            "rows": [asdict(r) for r in self.rows],
        }

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            wr = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
            wr.writeheader()
            for r in self.rows:
                wr.writerow(r.csv_row())


def thread_count():
    """Worker threads from CARLEMAN_THREADS (default 1)."""
    raw = os.environ.get("CARLEMAN_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _knee(taus, ratios):
    for i in range(len(ratios) - 1):
        if ratios[i + 1] <= ratios[i]:
            return float(taus[i])
    return float(taus[-1])


def _report(estimate_id, prep, rows, r0, field):
    taus = np.array([r.tau for r in rows])
    ratios = np.array([r.ratio for r in rows])
    live = [r for r in rows if not r.empty]
    finite = bool(np.all(np.isfinite(ratios)))
    i = int(np.argmax(ratios)) if len(rows) else 0
    knee = _knee(taus, ratios) if len(rows) else float("nan")
    return CarlemanReport(
        estimate_id=estimate_id, rows=rows,
        max_ratio=float(ratios.max()) if live else 0.0,
        argmax_tau=float(taus[i]) if len(rows) else float("nan"),
        knee_tau=knee, tau0=max(10.0, knee), bounded=finite,
        tau_max_budget=float(prep.tau_max), grid=field.spec.to_dict(),
        weights=prep.weights.to_dict(), r0=float(r0), field_meta=dict(field.meta))


def tau_sweep(estimate_id, field: GridField, pair: CoefficientPair, weights: WeightParameters,
              tau_range=(20.0, 200.0), points=10, r0=0.5, threads=None) -> CarlemanReport:
    """R(tau) = LHS / RHS on a logarithmic tau grid."""
    _check_estimate(estimate_id)
    lo, hi = float(tau_range[0]), float(tau_range[1])
    if not 0 < lo <= hi:
        raise InvalidParameterError("tau range must satisfy 0 < tau_min <= tau_max")
    check_support(field, support_limit(estimate_id, weights, r0))
    prep = _Prepared(estimate_id, field, pair, weights, r0)
    if hi > prep.tau_max:
        raise OverflowBudgetError(
            f"tau_max={hi:g} exceeds the overflow budget; admissible tau_max is "
            f"{prep.tau_max:.4g}", prep.tau_max)
    taus = np.geomspace(lo, hi, int(points)) if points > 1 else np.array([lo])
    nthreads = thread_count() if threads is None else max(1, int(threads))
    if nthreads > 1:
        with ThreadPoolExecutor(nthreads) as ex:
            rows = list(ex.map(prep.row, taus))
    else:
        rows = [prep.row(t) for t in taus]
    return _report(estimate_id, prep, rows, r0, field)


def interior_check(field: GridField, pair: CoefficientPair, weights: WeightParameters,
                   tau_range=(20.0, 200.0), points=10, r0=0.5, margin=None,
                   threads=None) -> CarlemanReport:
    """Interior estimate for fields vanishing on |x_n| < margin (default two
    grid cells): volume terms against the non-divergence operator."""
    m = 2 * field.h if margin is None else float(margin)
    xn = field.spec.axis()
    strip = np.abs(xn) < m
    scale = max(float(np.max(np.abs(field.u_plus))), float(np.max(np.abs(field.u_minus))))
    near = max(float(np.max(np.abs(field.u_plus[..., strip]))),
               float(np.max(np.abs(field.u_minus[..., strip]))))
    if near > 1e-14 * max(scale, 1e-300):
        raise ConstraintError(f"field does not vanish for |x_n| < {m:.4g} "
                              f"(max |u| there is {near:.3e})")
    return tau_sweep("interior", field, pair, weights, tau_range, points, r0, threads)


def lhs_groups(row: CarlemanRow):
    return {k: row.terms[k] for k in LHS_KEYS}


@dataclass
class SplitReport:
    mu: float
    tau: float
    reconstruction_error: float
    z_trace_max: float
    z_vanishes_in_strip: bool
    lhs_u: dict
    lhs_v: dict
    lhs_z: dict
    slack: dict
    holds: bool

    def to_dict(self):
        return asdict(self)


def split_fields(field: GridField, mu, r0=0.5):
    """(v, z) = (eta_mu u, (1 - eta_mu) u) with eta_mu(x_n) = theta0(mu x_n)."""
    eta, _ = vertical_cutoff(mu, r0)
    e = eta(field.spec.axis())
    v = field.with_values(field.u_plus * e, field.u_minus * e, split="v", mu=mu)
    z = field.with_values(field.u_plus - v.u_plus, field.u_minus - v.u_minus, split="z", mu=mu)
    return v, z


def split_check(field: GridField, mu, pair: CoefficientPair, weights: WeightParameters, tau,
                r0=0.5) -> SplitReport:
    """LHS(u) <= 2 (LHS(v) + LHS(z)) group by group for the vertical estimate."""
    v, z = split_fields(field, mu, r0)
    rec = max(float(np.max(np.abs(v.u_plus + z.u_plus - field.u_plus))),
              float(np.max(np.abs(v.u_minus + z.u_minus - field.u_minus))))
    xn = field.spec.axis()
    strip = np.abs(xn) <= 1.0 / mu
    z_strip = max(float(np.max(np.abs(z.u_plus[..., strip]))),
                  float(np.max(np.abs(z.u_minus[..., strip]))))
    prep = {name: _Prepared("vertical", f, pair, weights, r0) for name, f in
            (("u", field), ("v", v), ("z", z))}
    # share one offset so the three rows are directly comparable
    wmax = max(p.w_max for p in prep.values())
    for p in prep.values():
        p.w_max = wmax
    rows = {name: p.row(tau) for name, p in prep.items()}
    lu, lv, lz = (lhs_groups(rows[k]) for k in ("u", "v", "z"))
    slack = {k: 2.0 * (lv[k] + lz[k]) - lu[k] for k in LHS_KEYS}
    tot = 2.0 * (sum(lv.values()) + sum(lz.values())) - sum(lu.values())
    slack["total"] = tot
    ztr = max(lz[k] for k in ("lhs_trace0", "lhs_trace1", "lhs_half_u", "lhs_half_Du"))
    scale = max(sum(lu.values()), 1e-300)
    holds = all(s >= -1e-12 * scale for s in slack.values())
    return SplitReport(float(mu), float(tau), rec, ztr, z_strip == 0.0, lu, lv, lz, slack, holds)


def field_for_estimate(estimate_id, weights: WeightParameters, r0=0.5, h=1 / 64, rho=None,
                       **kw):
    """Synthesize a test field meeting the estimate's support constraint.

    For ``full`` the support radius is delta * r0 and the grid spacing
    delta * h, i.e. the same field resolved in the variable x / delta. A
    requested ``rho`` above the limit is shrunk with a warning.
    """
    _check_estimate(estimate_id)
    limit = support_limit(estimate_id, weights, r0)
    warnings = []
    if rho is None:
        rho = limit
    elif rho > limit:
        warnings.append(f"support radius {rho:g} shrunk to the admissible {limit:g}")
        log.warning(warnings[-1])
        rho = limit
    hh = weights.delta * h if estimate_id == "full" else h
    if estimate_id == "full" and rho < limit:
        hh = h * rho / r0
    return synthesize(rho=rho, h=hh, **kw), warnings
