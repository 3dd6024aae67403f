import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from carleman_jump.errors import InvalidInputError, InvalidParameterError
from carleman_jump.weights import (WeightParameters, grad_phi_delta, grad_psi, hess_psi, phi_delta,
                                   psi)

W = WeightParameters(2.0, 1.0, 1.0, 0.1, 0.5)


def test_psi_examples():
    assert psi(W, [1.0, 0.5], "plus") == pytest.approx(2 * 0.5 + 0.5 * 0.25 - 0.05)
    assert psi(W, [0.0, -1.0], "minus") == pytest.approx(-0.5)
    assert psi(W, [0.0, 0.0], "plus") == 0.0 and psi(W, [0.0, 0.0], "minus") == 0.0


def test_side_is_explicit_and_checked():
    with pytest.raises(InvalidInputError):
        psi(W, [0.0, -0.1], "plus")
    with pytest.raises(InvalidInputError):
        psi(W, [0.0, 0.1], "minus")
    with pytest.raises(InvalidInputError):
        psi(W, [0.0, 0.1], "up")
    assert psi(W, [0.0, -0.1], "plus", extend=True) == pytest.approx(-0.2 + 0.005)


def test_phi_delta_examples():
    w = WeightParameters(2.0, 1.0, 1.0, 0.1, 0.5)
    assert phi_delta(w, [0.25, 0.25]) == pytest.approx(1.0625)
    assert phi_delta(w, [0.0, 0.0]) == 0.0
    one = w.replace(delta=1.0, epsilon=1.0)
    X = np.random.default_rng(0).uniform(-1, 1, (200, 3))
    X[:, -1] = np.abs(X[:, -1])
    assert np.allclose(phi_delta(one, X, "plus"), psi(one, X, "plus"))


def test_invalid_parameters():
    with pytest.raises(InvalidParameterError):
        WeightParameters(1.0, 1.0, 1.0, 0.1, 0.0)
    with pytest.raises(InvalidParameterError):
        WeightParameters(-1.0, 1.0)
    with pytest.raises(InvalidParameterError):
        WeightParameters(1.0, 1.0, delta=1.5)


def test_gradient_and_hessian_at_origin():
    assert np.allclose(grad_psi(W, [0.0, 0.0, 0.0], "plus"), [0, 0, 2.0])
    H = hess_psi(W, 3)
    assert sorted(np.linalg.eigvalsh(H)) == pytest.approx([-0.1, -0.1, 1.0])


def test_interface_continuity_and_gradient_jump():
    x = np.random.default_rng(1).uniform(-1, 1, (100, 3))
    x[:, -1] = 0.0
    assert np.array_equal(psi(W, x, "plus"), psi(W, x, "minus"))
    jump = grad_psi(W, x, "plus") - grad_psi(W, x, "minus")
    assert np.array_equal(jump, np.tile([0.0, 0.0, 1.0], (100, 1)))


def _fd_grad(f, x, h):
    g = np.zeros_like(x)
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def _fd_hess(f, x, h):
    n = len(x)
    H = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            ei = np.zeros(n); ej = np.zeros(n)
            ei[i] = h; ej[j] = h
            H[i, j] = (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)) / (4 * h * h)
    return H


def test_finite_difference_oracle_at_fixed_point():
    x = np.array([0.3, -0.2])
    f = lambda y: float(psi(W, y, "minus", extend=True))
    assert np.allclose(_fd_grad(f, x, 1e-5), grad_psi(W, x, "minus"), rtol=1e-8, atol=1e-9)
    assert np.allclose(_fd_hess(f, x, 1e-3), hess_psi(W, 2), atol=1e-6)


@given(st.lists(st.floats(-1, 1), min_size=3, max_size=3), st.sampled_from(["plus", "minus"]))
@settings(max_examples=100, deadline=None)
def test_gradients_match_finite_differences(x, side):
    x = np.array(x)
    for f, g in ((lambda y: float(psi(W, y, side, extend=True)),
                  grad_psi(W, x, side, extend=True)),
                 (lambda y: float(phi_delta(W, y, side, extend=True)),
                  grad_phi_delta(W, x, side, extend=True))):
        fd = _fd_grad(f, x, 1e-5)
        assert np.linalg.norm(fd - g) <= 1e-6 * max(1.0, np.linalg.norm(g))


def test_serialization_keys():
    assert set(W.to_dict()) == {"alpha_plus", "alpha_minus", "beta", "epsilon", "delta"}
    assert W.ratio == 2.0 and W.localization_bound("minus") == 0.5
