import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from ecs_teleport import cat_algebra as ca
from ecs_teleport.cat_algebra import HybridState

X1 = math.exp(-1.0)  # vacuum factor at |alpha|^2 = 1


def fock_series_overlap(b1, b2, nmax=80):
    """Oracle: <b1|b2> summed term by term over photon number."""
    total = 0j
    for n in range(nmax):
        total += (np.conj(b1) ** n) * (b2**n) / math.factorial(n)
    return math.exp(-abs(b1) ** 2 / 2 - abs(b2) ** 2 / 2) * total


class TestCoherentOverlap:
    def test_identical(self):
        assert ca.coherent_overlap(0.7 - 0.2j, 0.7 - 0.2j) == pytest.approx(1.0)

    def test_opposite(self):
        assert ca.coherent_overlap(1.0, -1.0) == pytest.approx(X1**2)

    def test_sqrt2_vacuum(self):
        got = ca.coherent_overlap(math.sqrt(2), 0)
        assert got == pytest.approx(0.36787944117144233, abs=1e-15)
        assert got == pytest.approx(fock_series_overlap(math.sqrt(2), 0), abs=1e-14)

    @pytest.mark.parametrize("b1,b2", [(0.3 + 1j, -0.5j), (2.0, 1.5 - 0.5j), (-1.2, 0.4 + 0.4j)])
    def test_against_series(self, b1, b2):
        assert_allclose(ca.coherent_overlap(b1, b2), fock_series_overlap(b1, b2), atol=1e-13)

    def test_bounded(self):
        rng = np.random.default_rng(1)
        b = rng.normal(size=(50, 2)) + 1j * rng.normal(size=(50, 2))
        assert np.all(np.abs(ca.coherent_overlap(b[:, 0], b[:, 1])) <= 1 + 1e-15)


class TestGramNorm:
    def test_single_term(self):
        s = HybridState.from_terms([(1.0, [1.3 - 0.2j, 0.0], ["g"])])
        assert ca.gram_norm(s) == pytest.approx(1.0)

    def test_even_cat_normalized(self):
        beta = math.sqrt(2)
        n_plus = (2 * (1 + X1**4)) ** -0.5
        s = HybridState.from_terms([(n_plus, [beta], []), (n_plus, [-beta], [])])
        assert ca.gram_norm(s) == pytest.approx(1.0, abs=1e-12)

    def test_unnormalized_cat(self):
        s = HybridState.from_terms([(1 / math.sqrt(2), [1.0], []), (1 / math.sqrt(2), [-1.0], [])])
        # 2x2 Gram matrix by hand: 0.5 * (1 + 1 + 2 x^2)
        assert ca.gram_norm(s) == pytest.approx(math.sqrt(1 + X1**2), abs=1e-12)
        assert ca.gram_norm(s) == pytest.approx(1.065521, abs=1e-6)

    def test_orthogonal_atoms_do_not_interfere(self):
        s = HybridState.from_terms([(0.6, [1.0], ["g"]), (0.8, [1.0], ["f"])])
        assert ca.gram_norm(s) == pytest.approx(1.0)

    def test_zero_state(self):
        assert ca.gram_norm(HybridState.zero(2, 1)) == 0.0


class TestBeamSplitter:
    def test_ecs_generation(self):
        a = 0.9
        out = ca.beam_splitter(HybridState.from_terms([(1, [math.sqrt(2) * a, 0], [])]), 0, 1)
        assert_allclose(out.modes, [[a, a]], atol=1e-15)

    def test_vacuum_fixed(self):
        out = ca.beam_splitter(HybridState.from_terms([(1, [0, 0], [])]), 0, 1)
        assert_allclose(out.modes, [[0, 0]])

    @pytest.mark.parametrize("u,expected", [(1.0, (math.sqrt(2), 0.0)), (-1.0, (0.0, -math.sqrt(2)))])
    def test_ancilla_mixing_patterns(self, u, expected):
        out = ca.beam_splitter(HybridState.from_terms([(1, [u, 1.0], [])]), 0, 1)
        assert_allclose(out.modes[0], expected, atol=1e-15)

    def test_rejects_bad_indices(self):
        s = HybridState.from_terms([(1, [0, 0], [])])
        with pytest.raises(IndexError):
            ca.beam_splitter(s, 0, 2)
        with pytest.raises(ValueError):
            ca.beam_splitter(s, 1, 1)


class TestCavityReflect:
    def test_branches(self):
        a = 0.8
        s = HybridState.from_terms([(1, [a], ["g"]), (1, [a], ["f"])])
        out = ca.cavity_reflect(s, 0, 0)
        assert_allclose(out.modes[:, 0], [-a, a])
        assert ca.gram_norm(out) == pytest.approx(ca.gram_norm(s))

    def test_f_branch_identity(self):
        s = HybridState.from_terms([(1, [-0.8], ["f"])])
        assert_allclose(ca.cavity_reflect(s, 0, 0).modes, s.modes)

    def test_vacuum(self):
        s = HybridState.from_terms([(1, [0.0], ["g"])])
        assert ca.cavity_reflect(s, 0, 0).modes[0, 0] == 0


class TestProjectThreshold:
    def test_vacuum_off(self):
        out, p = ca.project_threshold(HybridState.from_terms([(1, [0.0], [])]), 0, "OFF")
        assert p == pytest.approx(1.0)
        assert ca.overlap(out, HybridState.from_terms([(1, [0.0], [])])) == pytest.approx(1.0)

    def test_vacuum_weight(self):
        s = HybridState.from_terms([(1, [math.sqrt(2)], [])])
        _, p_off = ca.project_threshold(s, 0, "OFF")
        _, p_on = ca.project_threshold(s, 0, "ON")
        assert p_off == pytest.approx(math.exp(-2), abs=1e-15)
        assert p_on + p_off == pytest.approx(1.0, abs=1e-12)

    def test_off_output_single_vacuum_term(self):
        s = HybridState.from_terms([(1, [math.sqrt(2)], [])])
        raw = ca.simplify(HybridState(s.coeffs * ca.coherent_overlap(0, s.modes[:, 0]), np.zeros((1, 1)), s.atoms))
        assert raw.n_terms == 1
        assert raw.coeffs[0] == pytest.approx(X1)

    def test_impossible_outcome_not_renormalized(self):
        out, p = ca.project_threshold(HybridState.from_terms([(1, [0.0], [])]), 0, "ON")
        assert p < 1e-14
        assert out.is_zero()

    def test_rejects_bad_outcome(self):
        with pytest.raises(ValueError):
            ca.project_threshold(HybridState.from_terms([(1, [0.0], [])]), 0, "MAYBE")


class TestProjectAtom:
    def test_ground_half(self):
        _, p = ca.project_atom(ca.atom(1, 0), 0, "+")
        assert p == pytest.approx(0.5)

    def test_plus_certain(self):
        r = 1 / math.sqrt(2)
        _, p = ca.project_atom(ca.atom(r, r), 0, "+")
        assert p == pytest.approx(1.0)
        _, p = ca.project_atom(ca.atom(r, r), 0, "-")
        assert p < 1e-14

    def test_minus_post_state(self):
        out, p = ca.project_atom(ca.atom(0.6, 0.8), 0, "-")
        r = 1 / math.sqrt(2)
        assert p == pytest.approx(0.5 * (0.6 - 0.8) ** 2)
        assert abs(ca.overlap(ca.atom(r, -r), out)) == pytest.approx(1.0)


class TestApplyPauli:
    a, b = 0.6, 0.8j

    def _vec(self, s):
        return ca.atom_density(s, [0])

    def test_z(self):
        out = ca.apply_pauli(ca.atom(self.a, self.b), 0, "Z")
        assert abs(ca.overlap(ca.atom(self.a, -self.b), out)) == pytest.approx(1.0)

    def test_x(self):
        out = ca.apply_pauli(ca.atom(self.a, self.b), 0, "X")
        assert ca.overlap(ca.atom(self.b, self.a), out) == pytest.approx(1.0)

    def test_iy_undoes_minus_iy(self):
        m = ca.atom(self.a, self.b)
        # -iY M = (-b, a)
        minus_iy = ca.atom(-self.b, self.a)
        assert ca.overlap(m, ca.apply_pauli(minus_iy, 0, "iY")) == pytest.approx(1.0)

    def test_unknown(self):
        with pytest.raises(ValueError):
            ca.apply_pauli(ca.atom(1, 0), 0, "H")


class TestSimplify:
    def test_merge(self):
        s = ca.simplify(HybridState.from_terms([(1, [0.5], []), (1, [0.5], [])]))
        assert s.n_terms == 1 and s.coeffs[0] == 2

    def test_cancel(self):
        s = ca.simplify(HybridState.from_terms([(1, [0.5], []), (-1, [0.5], [])]))
        assert s.is_zero()

    def test_distinct_atoms_kept(self):
        s = ca.simplify(HybridState.from_terms([(1, [0.5], ["g"]), (1, [0.5], ["f"])]))
        assert s.n_terms == 2


def test_ecs_overlap_bookkeeping():
    """<psi+|phi+> = 4 x^2 N+^2 for the two even entangled coherent states."""
    for alpha_sq in (0.25, 1.0, 2.0):
        a = math.sqrt(alpha_sq)
        x = math.exp(-alpha_sq)
        n = (2 * (1 + x**4)) ** -0.5
        psi = HybridState.from_terms([(n, [a, a], []), (n, [-a, -a], [])])
        phi = HybridState.from_terms([(n, [a, -a], []), (n, [-a, a], [])])
        assert ca.overlap(psi, phi) == pytest.approx(4 * x**2 * n**2, abs=1e-14)


def test_render():
    text = ca.render(HybridState.from_terms([(0.5, [1.0, 0.0], ["g"])]))
    assert text == "0.5 x |1, 0, g>"


# ---------------------------------------------------------------- properties

labels = st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False)


@st.composite
def hybrid_states(draw):
    n_modes = draw(st.integers(2, 6))
    n_atoms = draw(st.integers(1, 2))
    n_terms = draw(st.integers(1, 5))
    terms = []
    for _ in range(n_terms):
        coeff = draw(st.complex_numbers(min_magnitude=0.1, max_magnitude=2, allow_nan=False, allow_infinity=False))
        modes = [draw(labels) for _ in range(n_modes)]
        atoms = [draw(st.sampled_from("gf")) for _ in range(n_atoms)]
        terms.append((coeff, modes, atoms))
    s = ca.simplify(HybridState.from_terms(terms))
    if s.is_zero() or ca.gram_norm(s) < 1e-6:
        s = HybridState.from_terms([terms[0]])
    return ca.normalize(s)


@settings(max_examples=150, deadline=None)
@given(hybrid_states(), st.data())
def test_unitaries_preserve_norm(s, data):
    i = data.draw(st.integers(0, s.n_modes - 1))
    j = data.draw(st.integers(0, s.n_modes - 1).filter(lambda k: k != i))
    atom = data.draw(st.integers(0, s.n_atoms - 1))
    op = data.draw(st.sampled_from(["I", "Z", "X", "iY"]))
    assert ca.gram_norm(ca.beam_splitter(s, i, j)) == pytest.approx(1.0, abs=1e-12)
    assert ca.gram_norm(ca.cavity_reflect(s, i, atom)) == pytest.approx(1.0, abs=1e-12)
    assert ca.gram_norm(ca.apply_pauli(s, atom, op)) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=150, deadline=None)
@given(hybrid_states(), st.data())
def test_measurement_completeness(s, data):
    mode = data.draw(st.integers(0, s.n_modes - 1))
    atom = data.draw(st.integers(0, s.n_atoms - 1))
    p_on = ca.project_threshold(s, mode, "ON")[1]
    p_off = ca.project_threshold(s, mode, "OFF")[1]
    assert p_on + p_off == pytest.approx(1.0, abs=1e-10)
    p_plus = ca.project_atom(s, atom, "+")[1]
    p_minus = ca.project_atom(s, atom, "-")[1]
    assert p_plus + p_minus == pytest.approx(1.0, abs=1e-10)


@settings(max_examples=100, deadline=None)
@given(hybrid_states(), st.data())
def test_beam_splitter_involution(s, data):
    i = data.draw(st.integers(0, s.n_modes - 1))
    j = data.draw(st.integers(0, s.n_modes - 1).filter(lambda k: k != i))
    twice = ca.beam_splitter(ca.beam_splitter(s, i, j), i, j)
    assert_allclose(twice.modes, s.modes, atol=1e-12)
    assert abs(ca.overlap(s, twice)) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(hybrid_states())
def test_simplify_keeps_norm(s):
    doubled = HybridState(np.concatenate([s.coeffs, s.coeffs]) / 2, np.vstack([s.modes, s.modes]),
                          np.vstack([s.atoms, s.atoms]))
    assert abs(ca.gram_norm(ca.simplify(doubled)) - ca.gram_norm(doubled)) < 1e-10
