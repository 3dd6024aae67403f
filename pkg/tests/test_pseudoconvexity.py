import numpy as np
import pytest

from carleman_jump.coefficients import (CoefficientPair, ComplexSymmetricMatrix, derived_constants,
                                        gamma_threshold, random_pair)
from carleman_jump.errors import PseudoconvexityError
from carleman_jump.pseudoconvexity import (calibrate_epsilon, calibrate_pair, certify, certify_pair,
                                           conjugated_abs, eval_Q, null_points)
from carleman_jump.symbol_analysis import principal_symbol
from carleman_jump.weights import WeightParameters, grad_psi, hess_psi

I2 = ComplexSymmetricMatrix(np.eye(2), np.eye(2), 0.0)
I3 = ComplexSymmetricMatrix(np.eye(3), np.eye(3), 0.0)


def test_isotropic_null_point_value():
    w = WeightParameters(1.0, 1.0, 1.0, 0.1)
    # -4 eps |xi'|^2 + 4 beta |xi_n + i tau alpha|^2 with xi_n = 0, tau alpha = 1
    assert eval_Q(I2, w, [0, 0], [1.0, 0.0], 1.0, "plus") == pytest.approx(3.6, abs=1e-12)
    assert eval_Q(I3, w, [0, 0, 0], [0.6, 0.8, 0.0], 1.0, "minus") == pytest.approx(3.6, abs=1e-12)


def test_degenerate_epsilon_gives_zero():
    w = WeightParameters(1.0, 1.0, 1.0, 1.0)
    assert eval_Q(I2, w, [0, 0], [1.0, 0.0], 1.0, "plus") == pytest.approx(0.0, abs=1e-14)


def test_Q_against_difference_quotients(rng):
    """Oracle built from principal_symbol alone: d_xi p by central differences."""
    p = random_pair(rng, n=3, gamma=0.4)
    w = WeightParameters(1.7, 0.8, 1.2, 0.2)
    for _ in range(10):
        x = rng.uniform(-0.2, 0.2, 3)
        xi = rng.standard_normal(3)
        tau = rng.uniform(0.1, 2)
        zeta = xi + 1j * tau * grad_psi(w, x, "plus", extend=True)
        h = 1e-6
        d = np.array([(principal_symbol(p.plus, zeta + h * e) - principal_symbol(p.plus, zeta - h * e))
                      / (2 * h) for e in np.eye(3)])
        ref = np.real(np.conj(d) @ hess_psi(w, 3) @ d)
        assert eval_Q(p.plus, w, x, xi, tau, "plus") == pytest.approx(ref, rel=1e-4, abs=1e-8)


def test_Q_homogeneous_of_degree_two(rng):
    p = random_pair(rng, n=3, gamma=0.3)
    w = WeightParameters(1.5, 1.0, 1.0, 0.2)
    x = rng.uniform(-0.1, 0.1, (20, 3))
    xi = rng.standard_normal((20, 3))
    tau = rng.uniform(0, 2, 20)
    q = eval_Q(p.minus, w, x, xi, tau, "minus")
    for c in (0.3, 2.5):
        assert np.allclose(eval_Q(p.minus, w, x, c * xi, c * tau, "minus"), c * c * q,
                           rtol=1e-12, atol=1e-14)


def test_isotropic_null_points():
    ns = null_points(I3, 1.0, 64)
    assert len(ns) == 64 and ns.discarded == 64
    assert np.allclose(ns.xi[:, -1], 0.0) and np.allclose(ns.tau, 1.0)
    # |tau grad psi(0)| = tau alpha = |xi| exactly in the isotropic case
    assert np.allclose(ns.tau * 1.0 / np.linalg.norm(ns.xi, axis=1), 1.0)
    nn = ns.normalize()
    assert np.allclose(np.sum(nn.xi ** 2, axis=1) + nn.tau ** 2, 1.0)


def test_null_points_are_zeros(rng):
    for _ in range(20):
        p = random_pair(rng, n=3, gamma=float(rng.uniform(0, 1)))
        alpha = rng.uniform(0.5, 3)
        ns = null_points(p.plus, alpha, 256)
        assert np.all(ns.tau > 0)
        w = WeightParameters(alpha, alpha)
        zeros = conjugated_abs(p.plus, w, np.zeros_like(ns.xi), ns.xi, ns.tau, "plus")
        assert np.all(zeros <= 1e-10 * (np.sum(ns.xi ** 2, axis=1) + ns.tau ** 2))


def test_certify_isotropic():
    w = WeightParameters(1.0, 1.0, 1.0, 0.1)
    pair = CoefficientPair(I2, I2)
    c = certify(I2, w, derived_constants(pair))
    assert c.min_Q_on_null_set == pytest.approx(3.6, abs=1e-9)
    assert c.lower_bound == pytest.approx(2.0)
    assert c.lower_bound_holds
    assert c.C2 > 0 and c.bound_constant > 0
    assert c.revalidation_margin >= -1e-8
    assert 0 < c.delta_prime < c.delta_prime_limit == pytest.approx(0.5)


def test_uncalibrated_epsilon_fails():
    with pytest.raises(PseudoconvexityError) as exc:
        certify(I2, WeightParameters(1.0, 1.0, 1.0, 1.0), derived_constants((1.0, 1.0), 2))
    assert exc.value.xi is not None


def test_calibrate_isotropic_and_below_beta(rng):
    assert calibrate_epsilon(I2, WeightParameters(1.0, 1.0)) == 0.5
    for _ in range(20):
        p = random_pair(rng, n=3)
        beta = rng.uniform(0.5, 2)
        eps = calibrate_epsilon(p.plus, WeightParameters(1.0, 1.0, beta), sphere_samples=256)
        assert 0 < eps < beta


@pytest.mark.parametrize("n", [2, 3])
def test_calibration_monotone_as_anisotropy_shrinks(n):
    w = WeightParameters(1.0, 1.0)
    eps = [calibrate_epsilon(ComplexSymmetricMatrix(np.diag([r] + [1.0] * (n - 1)), np.eye(n), 0.05),
                             w, sphere_samples=512) for r in (4, 3, 2, 1.5, 1.2, 1.0)]
    assert all(b >= a for a, b in zip(eps, eps[1:]))


@pytest.mark.slow
def test_random_pairs_certify(rng):
    fails = 0
    for _ in range(100):
        p = random_pair(rng, n=3, gamma=0.0)
        p = p.with_gamma(float(rng.uniform(0, 1)) * gamma_threshold(p.lambda0, p.Lambda0, 3))
        w = WeightParameters(2.0, 1.0, 1.0, calibrate_pair(p, WeightParameters(2.0, 1.0), 256))
        try:
            certs = certify_pair(p, w, samples=512, null_samples=256, seed=1)
        except PseudoconvexityError:
            fails += 1
            continue
        for c in certs.values():
            fails += int(not (c.lower_bound_holds and c.revalidation_margin >= -1e-8))
    assert fails == 0
