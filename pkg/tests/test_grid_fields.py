import numpy as np
import pytest

from carleman_jump.coefficients import CoefficientPair, random_pair
from carleman_jump.errors import InvalidInputError, UnsupportedOrderError
from carleman_jump.grid_fields import (GridField, GridSpec, Scaled, derivative, derivative_energy,
                                       double_integral_seminorm, grid_derivative, h_half_seminorm,
                                       jump_data, l2_via_fourier, side_weights, synthesize,
                                       tangential_profile, trace_terms, weighted_volume_term)
from carleman_jump.partition_of_unity import bump, bump_deriv
from carleman_jump.weights import WeightParameters

from conftest import iso

W = WeightParameters(2.0, 1.0, 1.0, 0.5, 0.5)


def _field(spec, fp, fm, rho=0.5):
    X = spec.points()
    return GridField(spec, fp(X), fm(X), rho)


def _tb(X, r=0.4):
    return bump(1.5 * np.linalg.norm(X[..., :-1], axis=-1) / r)


def test_grid_contains_interface_and_field_vanishes_at_boundary():
    f = synthesize(rho=0.5, h=1 / 32)
    spec = f.spec
    assert spec.axis()[spec.iface] == 0.0
    assert f.boundary_max(2) <= 1e-14


def test_normal_derivative_of_linear_profile():
    spec = GridSpec(2, 1 / 64, 0.6)
    fld = _field(spec, lambda X: X[..., -1] * _tb(X), lambda X: 0 * X[..., 0])
    dn = derivative(fld, "plus", (0, 1))[..., spec.iface]
    ref = _tb(spec.interface_points())
    assert np.max(np.abs(dn - ref)) < 1e-12 + 1e-3


def test_mixed_derivative_separable_product():
    h = 1 / 128
    spec = GridSpec(2, h, 0.8)
    X = spec.points()
    f1 = lambda t: bump(t / 0.3)
    f2 = lambda t: bump((t - 0.1) / 0.3)
    u = f1(X[..., 0]) * f2(X[..., 1])
    d = grid_derivative(u, h, (1, 1))
    ref = bump_deriv(X[..., 0] / 0.3, 1) / 0.3 * bump_deriv((X[..., 1] - 0.1) / 0.3, 1) / 0.3
    err_h = np.max(np.abs(d - ref))
    spec2 = GridSpec(2, h / 2, 0.8)
    X2 = spec2.points()
    d2 = grid_derivative(f1(X2[..., 0]) * f2(X2[..., 1]), h / 2, (1, 1))
    ref2 = bump_deriv(X2[..., 0] / 0.3, 1) / 0.3 * bump_deriv((X2[..., 1] - 0.1) / 0.3, 1) / 0.3
    err_h2 = np.max(np.abs(d2 - ref2))
    assert err_h2 < err_h / 3      # second order: ratio near 4


def test_constant_field_has_small_gradient_inside():
    spec = GridSpec(2, 1 / 32, 0.6)
    fld = _field(spec, lambda X: 3.0 * _tb(X, 0.45) * bump(X[..., -1] / 0.3),
                 lambda X: 0 * X[..., 0])
    g = derivative(fld, "plus", (1, 0))
    X = spec.points()
    inner = (np.linalg.norm(X[..., :-1], axis=-1) < 0.25) & (np.abs(X[..., -1]) < 0.25)
    assert np.max(np.abs(g[inner])) < 1e-12


def test_order_limit():
    with pytest.raises(UnsupportedOrderError):
        grid_derivative(np.zeros((5, 5)), 0.1, (2, 1))


def test_volume_term_zero_and_monotone():
    spec = GridSpec(2, 1 / 32, 0.6)
    zero = _field(spec, lambda X: 0 * X[..., 0], lambda X: 0 * X[..., 0])
    assert weighted_volume_term(zero, W, 10.0, 0).value == 0.0
    # field on the minus side only, where psi < 0 away from the origin's neighbourhood
    fld = _field(spec, lambda X: 0 * X[..., 0],
                 lambda X: _tb(X, 0.3) * bump((X[..., -1] + 0.3) / 0.1))
    vals = [weighted_volume_term(fld, W, t, 0, log_offset=0.0).value / t ** 3 for t in (5, 10, 20)]
    assert vals[0] > vals[1] > vals[2]


def test_volume_term_refinement_oracle():
    def build(h):
        spec = GridSpec(2, h, 0.6)
        g = lambda X: np.exp(-np.sum(X ** 2, axis=-1) / 0.02) * _tb(X, 0.45) * bump(X[..., -1] / 0.3)
        return _field(spec, g, g)
    coarse = weighted_volume_term(build(1 / 64), W, 5.0, 0, log_offset=0.0).value
    fine = weighted_volume_term(build(1 / 256), W, 5.0, 0, log_offset=0.0).value
    assert abs(coarse - fine) <= 1e-3 * fine


def test_scaled_values_consistent():
    f = synthesize(rho=0.5, h=1 / 32, h0_amp=0.3)
    a = weighted_volume_term(f, W, 30.0, 1)
    b = weighted_volume_term(f, W, 30.0, 1, log_offset=0.0)
    assert isinstance(a, Scaled)
    assert a.unscaled() == pytest.approx(b.value, rel=1e-12)


def test_trace_terms_vanish_away_from_interface():
    f = synthesize(rho=0.5, h=1 / 32, family="away")
    t = trace_terms(f, W, 20.0)
    assert all(v.value == 0.0 for v in t.values())


def test_matched_field_has_zero_jumps_but_nonzero_traces(equal_pair):
    f = synthesize(rho=0.5, h=1 / 64, family="matched", pair=equal_pair)
    jd = jump_data(f, equal_pair)
    assert np.max(np.abs(jd.h0)) == 0.0
    assert np.max(np.abs(jd.h1)) < 1e-12
    t = trace_terms(f, W, 5.0, log_offset=0.0)
    assert t["trace0"].value > 0 and t["half_u"].value > 0


def test_symmetric_traces_give_equal_side_contributions():
    spec = GridSpec(2, 1 / 32, 0.6)
    g = lambda X: _tb(X) * bump(X[..., -1] / 0.3)
    f = _field(spec, g, g)
    w = WeightParameters(1.0, 1.0, 1.0, 0.5, 0.5)
    both = trace_terms(f, w, 5.0, log_offset=0.0)["trace0"].value
    one = trace_terms(f.with_values(f.u_plus, 0 * f.u_minus), w, 5.0, log_offset=0.0)["trace0"].value
    assert one == pytest.approx(0.5 * both, rel=1e-12)


def test_jump_examples():
    spec = GridSpec(2, 1 / 64, 0.6)
    step = _field(spec, lambda X: _tb(X) * bump(X[..., -1] / 0.3), lambda X: 0 * X[..., 0])
    jd = jump_data(step, (np.eye(2), np.eye(2)))
    ref = _tb(spec.interface_points())
    assert np.max(np.abs(jd.h0 - ref)) == 0.0
    assert np.max(np.abs(jd.h1)) < 1e-12
    lin = _field(spec, lambda X: X[..., -1] * _tb(X), lambda X: 0 * X[..., 0])
    jd = jump_data(lin, (np.eye(2), np.eye(2)))
    assert np.max(np.abs(jd.h0)) == 0.0
    assert np.max(np.abs(jd.h1 - ref)) < 1e-12


def test_synthesized_jumps_match_amplitudes(rng):
    pair = CoefficientPair(iso(2.0, gamma=0.1), iso(1.0, gamma=0.1))
    f = synthesize(rho=0.5, h=1 / 64, h0_amp=0.3, h1_amp=0.2, pair=pair)
    T = tangential_profile(f)
    jd = jump_data(f, pair)
    assert np.max(np.abs(jd.h0 - 0.3 * T)) < 1e-14
    assert np.max(np.abs(jd.h1 - 0.2 * T)) < 1e-12
    # general pairs: the discrete flux converges at second order
    p = random_pair(rng, n=2, gamma=0.2)
    errs = []
    for h in (1 / 64, 1 / 128):
        f = synthesize(rho=0.5, h=h, h0_amp=0.3, h1_amp=0.2, pair=p)
        errs.append(np.max(np.abs(jump_data(f, p).h1 - 0.2 * tangential_profile(f))))
    assert errs[1] < errs[0] / 2.5


def test_half_seminorm_gaussian():
    x = np.linspace(-20, 20, 2048)
    h = x[1] - x[0]
    assert h_half_seminorm(np.exp(-x ** 2 / 2), h) == pytest.approx(2 * np.pi, rel=1e-2)
    assert h_half_seminorm(np.zeros(64), 0.1) == 0.0


def test_parseval():
    x = np.linspace(-10, 10, 1024)
    h = x[1] - x[0]
    f = np.exp(-x ** 2) * (1 + 0.3j * x)
    assert l2_via_fourier(f, h) == pytest.approx(np.sum(np.abs(f) ** 2) * h, rel=1e-6)


def test_dilation_invariance_in_one_dimension():
    x = np.linspace(-40, 40, 8192)
    h = x[1] - x[0]
    f = lambda t: np.exp(-t ** 2 / 2) * np.cos(t)
    assert h_half_seminorm(f(2 * x), h) == pytest.approx(h_half_seminorm(f(x), h), rel=1e-2)


def test_multiplier_and_double_integral_forms_are_equivalent():
    x = np.linspace(-8, 8, 256)
    h = x[1] - x[0]
    fam = [np.exp(-x ** 2 / 2), np.exp(-x ** 2) * x, bump(x / 2), bump(x / 3) * np.cos(2 * x),
           np.exp(-(x - 1) ** 2) + 0.5 * np.exp(-(x + 2) ** 2 / 0.5)]
    ratios = np.array([double_integral_seminorm(f, h) / h_half_seminorm(f, h) for f in fam])
    assert ratios.max() / ratios.min() < 1.2


def test_nan_rejected():
    with pytest.raises(InvalidInputError):
        h_half_seminorm(np.array([0.0, np.nan]), 0.1)
    spec = GridSpec(2, 0.25, 0.5)
    with pytest.raises(InvalidInputError):
        GridField(spec, np.full(spec.shape, np.nan), np.zeros(spec.shape), 0.5)


def test_quadrature_weights_split_interface_layer():
    spec = GridSpec(2, 0.1, 0.5)
    total = side_weights(spec, "plus") + side_weights(spec, "minus")
    assert np.allclose(total, spec.h ** 2)


def test_derivative_energy_counts_multi_indices():
    spec = GridSpec(2, 0.05, 0.5)
    X = spec.points()
    u = X[..., 0] * X[..., 1]
    e = derivative_energy(u, spec.h, 2)
    # only d1 d2 u = 1 is nonzero, counted once
    assert e[5:-5, 5:-5] == pytest.approx(1.0)
