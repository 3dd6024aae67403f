import numpy as np
import pytest

from carleman_jump.analysis import analyze, auto_weights, per_side_gamma0, symbol_summary
from carleman_jump.coefficients import CoefficientPair, gamma_threshold, random_pair
from carleman_jump.errors import InvalidInputError

from conftest import iso


def test_auto_weights_isotropic_jump(jump_pair):
    w = auto_weights(jump_pair)
    assert (w.alpha_plus, w.alpha_minus, w.beta) == pytest.approx((2.0, 1.0, 1.0))
    assert w.epsilon == pytest.approx(0.5) and w.delta == w.epsilon


def test_overrides_win(jump_pair):
    w = auto_weights(jump_pair, overrides={"alpha_minus": 3.0, "epsilon": 0.2, "beta": None})
    assert w.alpha_minus == 3.0 and w.alpha_plus == pytest.approx(6.0)
    assert w.epsilon == 0.2 and w.delta == 0.2 and w.beta == 1.0
    with pytest.raises(InvalidInputError):
        auto_weights(jump_pair, overrides={"kappa": 1.0})


def test_per_side_threshold(jump_pair):
    assert per_side_gamma0(jump_pair) == pytest.approx(gamma_threshold(1, 1, 2))
    assert per_side_gamma0(jump_pair) > gamma_threshold(1, 2, 2)


def test_jump_pair_exceeds_shared_threshold(jump_pair):
    report, violations = analyze(jump_pair, sphere_samples=256, null_samples=256,
                                 certify_samples=512)
    assert not report["certified"]
    assert [v["kind"] for v in violations] == ["gamma-threshold"]
    assert report["derived"]["gamma0"] == pytest.approx(gamma_threshold(1, 2, 2))
    assert set(report["pseudoconvexity"]) == {"plus", "minus"}


def test_symbol_summary_margins(rng):
    p = random_pair(rng, n=3)
    s = symbol_summary(p, 512)
    for side in ("plus", "minus"):
        assert s[side]["min_lower_bound_margin"] >= -1e-10
        assert s[side]["min_cap_margin"] >= 0
        assert s[side]["min_A_minus_F"] > 0
        assert s[side]["max_schur_defect"] < 1e-10


def test_real_pair_certified():
    p = CoefficientPair(iso(1.5), iso(1.0))
    report, violations = analyze(p, sphere_samples=256, null_samples=256, certify_samples=512)
    assert report["certified"] and not violations
    assert report["transmission"]["certified"]
