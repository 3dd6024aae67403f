import csv

import numpy as np
import pytest

from carleman_jump.carleman_harness import (CSV_COLUMNS, LHS_KEYS, apply_operator, assemble,
                                            field_for_estimate, interior_check, split_check,
                                            split_fields, tau_sweep)
from carleman_jump.coefficients import CoefficientPair, perturbed_pair
from carleman_jump.errors import ConstraintError, OverflowBudgetError, SupportError
from carleman_jump.grid_fields import GridField, GridSpec, synthesize
from carleman_jump.partition_of_unity import bump
from carleman_jump.weights import WeightParameters

from conftest import iso


def _plateau_field(spec, g):
    """g(X) times cutoffs that are 1 on |x'| <= 0.2, |x_n| <= 0.2."""
    X = spec.points()
    cut = bump(np.linalg.norm(X[..., :-1], axis=-1) / 0.2) * bump(X[..., -1] / 0.2)
    u = g(X) * cut
    return GridField(spec, u, u, 0.5)


def _plateau_mask(spec, r=0.15):
    X = spec.points()
    return (np.linalg.norm(X[..., :-1], axis=-1) < r) & (np.abs(X[..., -1]) < r)


def test_laplacian_of_xn_squared(equal_pair):
    spec = GridSpec(2, 1 / 64, 0.6)
    f = _plateau_field(spec, lambda X: X[..., -1] ** 2)
    Lp, _ = apply_operator(f, equal_pair, "frozen")
    assert np.allclose(Lp[_plateau_mask(spec)], 2.0, atol=1e-10)


def test_harmonic_polynomial(equal_pair):
    spec = GridSpec(2, 1 / 64, 0.6)
    f = _plateau_field(spec, lambda X: X[..., 0] ** 2 - X[..., -1] ** 2)
    Lp, Lm = apply_operator(f, equal_pair, "frozen")
    m = _plateau_mask(spec)
    assert np.max(np.abs(Lp[m])) < 1e-9 and np.max(np.abs(Lm[m])) < 1e-9


def test_manufactured_variable_coefficient():
    def fld(X):
        a = np.zeros(X.shape[:-1] + (2, 2), dtype=complex)
        a[..., 0, 0] = 1 + 0.1 * X[..., -1]
        a[..., 1, 1] = 1.0
        return a, a
    pair = CoefficientPair(iso(1.0), iso(1.0), 0.5, 2.0, 0.1, fld)
    spec = GridSpec(2, 1 / 64, 0.6)
    f = _plateau_field(spec, lambda X: X[..., 0] ** 2)
    Lp, _ = apply_operator(f, pair, "full")
    X = spec.points()
    m = _plateau_mask(spec)
    assert np.allclose(Lp[m], 2 * (1 + 0.1 * X[..., -1][m]), atol=1e-10)


def test_zero_field_rows_are_empty(jump_pair, jump_weights):
    f = synthesize(rho=0.5, h=1 / 32)
    z = f.with_values(0 * f.u_plus, 0 * f.u_minus)
    row = assemble("frozen", z, jump_pair, jump_weights, 50.0)
    assert row.empty and row.ratio == 0.0
    rep = interior_check(z, jump_pair, jump_weights, (20, 200), 4)
    assert all(r.empty for r in rep.rows) and rep.max_ratio == 0.0


def test_matched_field_rhs_is_operator_term(jump_pair, jump_weights):
    f = synthesize(rho=0.5, h=1 / 64, family="matched", pair=jump_pair)
    row = assemble("frozen", f, jump_pair, jump_weights, 50.0)
    jumps = sum(row.terms[k] for k in ("rhs_half_h1", "rhs_half_Dh0", "rhs_l2_h0", "rhs_l2_h1"))
    assert jumps <= 1e-12 * row.terms["rhs_op"]
    assert all(v >= 0 for v in row.terms.values())


def test_refinement_changes_sides_little(jump_pair, jump_weights):
    # individual sides need tau * h small; tau = 20 is resolved at h = 1/64
    rows = []
    for h in (1 / 64, 1 / 128):
        f = synthesize(rho=0.5, h=h, h0_amp=0.3, h1_amp=0.2, pair=jump_pair)
        rows.append(assemble("frozen", f, jump_pair, jump_weights, 20.0))
    assert rows[0].log_offset == rows[1].log_offset
    assert abs(rows[1].lhs_total / rows[0].lhs_total - 1) < 0.1
    assert abs(rows[1].rhs_total / rows[0].rhs_total - 1) < 0.1


def test_support_violation(jump_pair, jump_weights):
    f = synthesize(rho=0.5, h=1 / 32)
    with pytest.raises(SupportError) as exc:
        assemble("full", f, jump_pair, jump_weights, 20.0)
    assert exc.value.limit == pytest.approx(0.25) and exc.value.radius >= 0.5
    with pytest.raises(SupportError):
        assemble("frozen", f, jump_pair, jump_weights, 20.0, r0=0.3)


def test_auto_shrink_warns(jump_weights):
    f, warns = field_for_estimate("full", jump_weights, 0.5, 1 / 64, rho=0.5)
    assert f.rho == pytest.approx(0.25) and f.h == pytest.approx(1 / 128) and warns


def test_overflow_budget(jump_pair, jump_weights):
    f = synthesize(rho=0.5, h=1 / 32)
    with pytest.raises(OverflowBudgetError) as exc:
        tau_sweep("frozen", f, jump_pair, jump_weights, (20, 5000), 3)
    assert 100 < exc.value.tau_max < 5000


def test_scaling_leaves_ratio_unchanged(jump_pair, jump_weights):
    f = synthesize(rho=0.5, h=1 / 32, h0_amp=0.3, h1_amp=0.2, pair=jump_pair)
    a = assemble("frozen", f, jump_pair, jump_weights, 40.0)
    b = assemble("frozen", f.scaled(3.0 - 2.0j), jump_pair, jump_weights, 40.0)
    assert b.ratio == pytest.approx(a.ratio, rel=1e-10)
    for k in a.terms:
        assert b.terms[k] == pytest.approx(13.0 * a.terms[k], rel=1e-10, abs=1e-300)


def test_frozen_and_full_agree_for_constant_field(jump_pair):
    w = WeightParameters(2.0, 1.0, 1.0, 1.0, 1.0)
    const = CoefficientPair(jump_pair.plus, jump_pair.minus, None, None, 0.0,
                            lambda X: jump_pair.matrices_at(X))
    f = synthesize(rho=0.5, h=1 / 64, h0_amp=0.3, h1_amp=0.2, pair=jump_pair)
    a = tau_sweep("frozen", f, jump_pair, w, (20, 100), 4)
    b = tau_sweep("full", f, const, w, (20, 100), 4)
    assert np.allclose(a.ratios, b.ratios, rtol=1e-12, atol=0)


def test_interior_path_matches_interface_path(jump_pair, jump_weights):
    f = synthesize(rho=0.5, h=1 / 64, family="away")
    a = interior_check(f, jump_pair, jump_weights, (20, 200), 8)
    b = tau_sweep("frozen", f, jump_pair, jump_weights, (20, 200), 8)
    assert np.allclose(a.ratios, b.ratios, rtol=0.05)
    assert all(r.terms[k] == 0.0 for r in b.rows for k in LHS_KEYS if "trace" in k or "half" in k)


def test_interior_precondition(jump_pair, jump_weights):
    f = synthesize(rho=0.5, h=1 / 32)
    with pytest.raises(ConstraintError):
        interior_check(f, jump_pair, jump_weights)


def test_interior_continuity_in_delta(jump_pair):
    p = perturbed_pair(jump_pair, 0.1)
    f = synthesize(rho=0.5, h=1 / 64, family="away")
    reps = [interior_check(f, p, WeightParameters(2.0, 1.0, 1.0, 0.5, d), (20, 200), 6)
            for d in (0.1, 0.05)]
    assert abs(reps[0].max_ratio / reps[1].max_ratio - 1) < 0.1


def test_alpha_doubling_keeps_ratio_bounded(jump_pair):
    f = synthesize(rho=0.5, h=1 / 64, h0_amp=0.3, h1_amp=0.2, pair=jump_pair)
    a = tau_sweep("frozen", f, jump_pair, WeightParameters(2.0, 1.0, 1.0, 0.5, 0.5), (20, 100), 6)
    b = tau_sweep("frozen", f, jump_pair, WeightParameters(4.0, 2.0, 1.0, 0.5, 0.5), (20, 100), 6)
    assert 0.5 < b.max_ratio / a.max_ratio < 2.0


def test_translation_of_bump_center(jump_pair, jump_weights):
    kw = dict(rho=0.5, h=1 / 64, h0_amp=0.3, h1_amp=0.2, pair=jump_pair)
    a = tau_sweep("frozen", synthesize(**kw), jump_pair, jump_weights, (20, 200), 6)
    b = tau_sweep("frozen", synthesize(center=[0.05], **kw), jump_pair, jump_weights, (20, 200), 6)
    assert np.all(np.abs(b.ratios / a.ratios - 1) < 0.05)


def test_sweep_report_contents(jump_pair, jump_weights, tmp_path):
    f = synthesize(rho=0.5, h=1 / 32, h0_amp=0.3, h1_amp=0.2, pair=jump_pair)
    rep = tau_sweep("vertical", f, jump_pair, jump_weights, (20, 200), 5)
    assert rep.bounded and np.all(np.isfinite(rep.ratios))
    assert rep.tau0 >= 10 and rep.argmax_tau in rep.taus
    assert np.allclose(rep.taus, np.geomspace(20, 200, 5))
    rep.write_csv(tmp_path / "s.csv")
    with open(tmp_path / "s.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert tuple(rows[0].keys()) == CSV_COLUMNS and len(rows) == 5
    d = rep.to_dict()
    assert d["grid"]["h"] == f.h and d["weights"]["epsilon"] == 0.5


def test_threads_give_identical_rows(jump_pair, jump_weights, monkeypatch):
    f = synthesize(rho=0.5, h=1 / 32, h0_amp=0.3, pair=jump_pair)
    a = tau_sweep("frozen", f, jump_pair, jump_weights, (20, 200), 6, threads=1)
    monkeypatch.setenv("CARLEMAN_THREADS", "4")
    b = tau_sweep("frozen", f, jump_pair, jump_weights, (20, 200), 6)
    assert [r.terms for r in a.rows] == [r.terms for r in b.rows]


def test_split_check(jump_pair, jump_weights):
    f = synthesize(rho=0.5, h=1 / 64, h0_amp=0.3, h1_amp=0.2, pair=jump_pair)
    tau = 200.0
    mu = np.sqrt(jump_weights.epsilon * tau)
    rep = split_check(f, mu, jump_pair, jump_weights, tau)
    assert rep.holds
    assert rep.z_trace_max == 0.0 and rep.z_vanishes_in_strip
    assert rep.reconstruction_error <= 1e-15
    v, _ = split_fields(f, mu)
    assert np.array_equal(v.trace("plus"), f.trace("plus"))
    with pytest.raises(ConstraintError):
        split_check(f, 3.0, jump_pair, jump_weights, tau)
