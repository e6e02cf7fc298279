import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ecs_teleport import analytics as an
from ecs_teleport import cat_algebra as ca


def test_x_of():
    assert an.x_of(0) == 1
    assert an.x_of(1) == pytest.approx(0.367879, abs=1e-6)
    assert an.x_of(2.5) == pytest.approx(0.082085, abs=1e-6)


class TestNormalization:
    def test_limits(self):
        assert an.normalization(0, +1) == pytest.approx(0.5)
        assert an.normalization(40, +1) == pytest.approx(1 / math.sqrt(2))
        # 30-digit mpmath evaluation of [2(1 + e^-4)]^-1/2
        assert an.normalization(1, +1) == pytest.approx(0.70071884163261531, abs=1e-15)

    def test_odd_at_zero_rejected(self):
        with pytest.raises(ValueError):
            an.normalization(0, -1)

    @pytest.mark.parametrize("alpha_sq", [0.1, 0.5, 1, 2, 3.5])
    @pytest.mark.parametrize("sign", [1, -1])
    def test_against_gram_norm(self, alpha_sq, sign):
        a = math.sqrt(alpha_sq)
        n = an.normalization(alpha_sq, sign)
        s = ca.HybridState.from_terms([(n, [a, a], []), (sign * n, [-a, -a], [])])
        assert ca.gram_norm(s) == pytest.approx(1.0, abs=1e-12)


class TestProbabilities:
    # expected values from a 30-digit mpmath evaluation
    @pytest.mark.parametrize("alpha_sq,expected", [(0, 0.0), (1, 0.73419777116592031), (2.5, 0.98652471777869544)])
    def test_p_success(self, alpha_sq, expected):
        assert an.p_success(alpha_sq) == pytest.approx(expected, abs=1e-14)

    def test_p_fail(self):
        assert an.p_fail(0) == 1
        assert an.p_fail(1) == pytest.approx(0.26580222883407969, abs=1e-14)

    @given(st.floats(0, 20))
    def test_complement(self, alpha_sq):
        assert an.p_success(alpha_sq) + an.p_fail(alpha_sq) == pytest.approx(1.0, abs=1e-12)

    def test_n_attempts(self):
        assert an.p_success_n(1, 1) == pytest.approx(an.p_success(1), abs=1e-15)
        assert an.p_success_n(1, 2) == pytest.approx(0.92934917514683553, abs=1e-14)
        assert an.p_success_n(1, 3) == pytest.approx(0.98122085328506269, abs=1e-14)
        assert an.p_success_n(2.5, 1) == pytest.approx(0.98652471777869544, abs=1e-14)
        with pytest.raises(ValueError):
            an.p_success_n(1, 0)

    def test_strictly_increasing(self):
        grid = np.linspace(0.01, 6, 300)
        ps = [an.p_success(a) for a in grid]
        assert np.all(np.diff(ps) > 0)
        for a in (0.3, 1, 2):
            vals = [an.p_success_n(a, n) for n in range(1, 8)]
            assert np.all(np.diff(vals) > 0)


class TestSweep:
    def test_single_point(self):
        assert an.sweep([0], [1]) == [an.SweepPoint(0.0, 1, 0.0)]

    def test_alpha_one(self):
        pts = an.sweep([1], [1, 2, 3])
        assert [round(p.p_success_n, 4) for p in pts] == [0.7342, 0.9293, 0.9812]

    def test_crossing(self):
        grid = an.default_grid(0, 4, 0.1)
        pts = an.sweep(grid, [1])
        crossing = next(p.alpha_sq for p in pts if p.p_success_n >= 0.98)
        assert crossing == pytest.approx(2.4, abs=0.1)

    def test_empty(self):
        with pytest.raises(ValueError):
            an.sweep([], [1])

    def test_default_grid(self):
        g = an.default_grid()
        assert len(g) == 81 and g[0] == 0 and g[-1] == 4.0


class TestFidelity:
    def test_same(self):
        m = np.array([0.6, 0.8j])
        assert an.fidelity(m, m) == pytest.approx(1.0)

    def test_z_on_equator(self):
        m = np.array([1, 1]) / math.sqrt(2)
        assert an.fidelity(np.diag([1, -1]) @ m, m) == pytest.approx(0.0, abs=1e-15)

    def test_x_on_pole(self):
        m = np.array([1.0, 0.0])
        assert an.fidelity(np.array([[0, 1], [1, 0]]) @ m, m) == 0.0

    def test_density_matrix(self):
        m = np.array([0.6, 0.8])
        assert an.fidelity(np.outer(m, m), m) == pytest.approx(1.0)
        assert an.fidelity(np.eye(2) / 2, m) == pytest.approx(0.5)
