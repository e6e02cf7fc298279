"""Exact representation of hybrid light-atom states.

A state is a finite superposition of product terms, each term being a
multimode coherent state tensored with a computational basis state of the
atoms (``g`` or ``f`` per atom). Coherent states are not orthogonal, so all
norms and inner products are computed with the analytic coherent-state
overlap rather than by summing squared coefficients.

Storage is columnar (one row per term) so Gram matrices can be evaluated
with numpy broadcasting.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, NamedTuple, Sequence

import numpy as np

__all__ = [
    "G",
    "F",
    "HybridTerm",
    "HybridState",
    "ImpossibleOutcome",
    "coherent_overlap",
    "overlap",
    "gram_norm",
    "normalize",
    "simplify",
    "tensor",
    "beam_splitter",
    "cavity_reflect",
    "project_threshold",
    "project_atom",
    "apply_pauli",
    "atom_density",
    "coherent",
    "cat",
    "atom",
    "render",
]

G, F = 0, 1
ATOM_NAMES = ("g", "f")

LABEL_TOL = 1e-12
COEFF_TOL = 1e-14
IMPOSSIBLE_P = 1e-14


class ImpossibleOutcome(ValueError):
    """Raised when a measurement outcome has (numerically) zero probability."""


class HybridTerm(NamedTuple):
    coeff: complex
    mode_labels: tuple
    atom_labels: tuple


@dataclass(frozen=True, eq=False)
class HybridState:
    """Superposition ``sum_k coeffs[k] |modes[k]> (x) |atoms[k]>``.

    ``modes`` is a complex array of shape (n_terms, n_modes) holding coherent
    amplitudes, ``atoms`` an int array of shape (n_terms, n_atoms) with
    entries ``G`` or ``F``.
    """

    coeffs: np.ndarray
    modes: np.ndarray
    atoms: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=complex).reshape(-1)
        modes = np.asarray(self.modes, dtype=complex)
        atoms = np.asarray(self.atoms, dtype=np.int8)
        if modes.ndim != 2 or atoms.ndim != 2:
            raise ValueError("modes and atoms must be 2-d (terms x subsystems)")
        if not (len(coeffs) == modes.shape[0] == atoms.shape[0]):
            raise ValueError("term count mismatch between coeffs, modes and atoms")
        if np.any((atoms != G) & (atoms != F)):
            raise ValueError("atom labels must be G or F")
        for name, arr in (("coeffs", coeffs), ("modes", modes), ("atoms", atoms)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_terms(cls, terms: Sequence, n_modes=None, n_atoms=None) -> "HybridState":
        """Build from ``(coeff, mode_labels, atom_labels)`` triples.

        Atom labels may be given as ``"g"``/``"f"`` or ``G``/``F``.
        """
        terms = list(terms)
        if not terms:
            if n_modes is None or n_atoms is None:
                raise ValueError("empty term list needs explicit n_modes and n_atoms")
            return cls.zero(n_modes, n_atoms)
        coeffs = [t[0] for t in terms]
        modes = [list(t[1]) for t in terms]
        atoms = [[_atom_code(a) for a in t[2]] for t in terms]
        n_m = len(modes[0]) if n_modes is None else n_modes
        n_a = len(atoms[0]) if n_atoms is None else n_atoms
        if any(len(m) != n_m for m in modes) or any(len(a) != n_a for a in atoms):
            raise ValueError("every term needs one label per mode and per atom")
        return cls(
            np.array(coeffs, dtype=complex),
            np.array(modes, dtype=complex).reshape(len(terms), n_m),
            np.array(atoms, dtype=np.int8).reshape(len(terms), n_a),
        )

    @classmethod
    def zero(cls, n_modes: int, n_atoms: int) -> "HybridState":
        return cls(
            np.zeros(0, dtype=complex),
            np.zeros((0, n_modes), dtype=complex),
            np.zeros((0, n_atoms), dtype=np.int8),
        )

    @property
    def n_modes(self) -> int:
        return self.modes.shape[1]

    @property
    def n_atoms(self) -> int:
        return self.atoms.shape[1]

    @property
    def n_terms(self) -> int:
        return len(self.coeffs)

    @property
    def terms(self) -> Iterator[HybridTerm]:
        for c, m, a in zip(self.coeffs, self.modes, self.atoms):
            yield HybridTerm(complex(c), tuple(complex(v) for v in m), tuple(ATOM_NAMES[i] for i in a))

    def is_zero(self) -> bool:
        return self.n_terms == 0

    def __repr__(self):
        return f"HybridState(n_terms={self.n_terms}, n_modes={self.n_modes}, n_atoms={self.n_atoms})"

    def __str__(self):
        return render(self)

    # Method aliases shared with the Fock backend so the protocol driver can
    # run on either representation.
    def norm(self) -> float:
        return gram_norm(self)

    def overlap(self, other: "HybridState") -> complex:
        return overlap(self, other)

    def beam_splitter(self, i: int, j: int) -> "HybridState":
        return beam_splitter(self, i, j)

    def reflect(self, mode: int, atom: int) -> "HybridState":
        return cavity_reflect(self, mode, atom)

    def append_coherent(self, beta: complex) -> "HybridState":
        return tensor(self, coherent(beta))

    def measure_threshold(self, mode: int, outcome: str):
        return project_threshold(self, mode, outcome)

    def measure_atom(self, atom: int, outcome: str):
        return project_atom(self, atom, outcome)

    def apply_pauli(self, atom: int, op: str) -> "HybridState":
        return apply_pauli(self, atom, op)

    def atom_density(self, atoms: Sequence[int]) -> np.ndarray:
        return atom_density(self, atoms)


def _atom_code(a) -> int:
    if a in ("g", G):
        return G
    if a in ("f", F):
        return F
    raise ValueError(f"unknown atom label {a!r}")


def coherent_overlap(b1, b2):
    """Inner product <b1|b2> of two coherent states (broadcasts over arrays)."""
    b1 = np.asarray(b1, dtype=complex)
    b2 = np.asarray(b2, dtype=complex)
    out = np.exp(-0.5 * np.abs(b1) ** 2 - 0.5 * np.abs(b2) ** 2 + np.conj(b1) * b2)
    return complex(out) if out.ndim == 0 else out


def _term_overlaps(s1: HybridState, s2: HybridState) -> np.ndarray:
    """Matrix of <term_i of s1 | term_j of s2>, without coefficients."""
    if s1.n_modes != s2.n_modes or s1.n_atoms != s2.n_atoms:
        raise ValueError("states live on different registers")
    if s1.n_modes:
        opt = coherent_overlap(s1.modes[:, None, :], s2.modes[None, :, :]).prod(axis=2)
    else:
        opt = np.ones((s1.n_terms, s2.n_terms), dtype=complex)
    same_atoms = np.all(s1.atoms[:, None, :] == s2.atoms[None, :, :], axis=2)
    return opt * same_atoms


def overlap(s1: HybridState, s2: HybridState) -> complex:
    """<s1|s2>."""
    if s1.is_zero() or s2.is_zero():
        return 0j
    return complex(np.conj(s1.coeffs) @ _term_overlaps(s1, s2) @ s2.coeffs)


def gram_norm(s: HybridState) -> float:
    if s.is_zero():
        return 0.0
    sq = overlap(s, s).real
    if sq < -1e-10:
        raise ArithmeticError(f"negative squared norm {sq:.3e}; Gram matrix is inconsistent")
    return float(np.sqrt(max(sq, 0.0)))


def normalize(s: HybridState) -> HybridState:
    n = gram_norm(s)
    if n == 0.0:
        raise ImpossibleOutcome("cannot normalize the zero state")
    return HybridState(s.coeffs / n, s.modes, s.atoms)


def simplify(s: HybridState) -> HybridState:
    """Merge terms with equal labels and drop negligible coefficients."""
    coeffs: list[complex] = []
    keep: list[int] = []
    for k in range(s.n_terms):
        for slot, r in enumerate(keep):
            if np.array_equal(s.atoms[k], s.atoms[r]) and np.all(np.abs(s.modes[k] - s.modes[r]) <= LABEL_TOL):
                coeffs[slot] += s.coeffs[k]
                break
        else:
            keep.append(k)
            coeffs.append(complex(s.coeffs[k]))
    c = np.array(coeffs, dtype=complex)
    mask = np.abs(c) >= COEFF_TOL
    idx = np.array(keep, dtype=int)[mask]
    return HybridState(c[mask], s.modes[idx], s.atoms[idx])


def tensor(s1: HybridState, s2: HybridState) -> HybridState:
    """s1 (x) s2; modes of s1 come first, then s2, likewise for atoms."""
    n1, n2 = s1.n_terms, s2.n_terms
    i = np.repeat(np.arange(n1), n2)
    j = np.tile(np.arange(n2), n1)
    return HybridState(
        s1.coeffs[i] * s2.coeffs[j],
        np.hstack([s1.modes[i], s2.modes[j]]).reshape(n1 * n2, s1.n_modes + s2.n_modes),
        np.hstack([s1.atoms[i], s2.atoms[j]]).reshape(n1 * n2, s1.n_atoms + s2.n_atoms),
    )


def _check_index(idx: int, size: int, what: str):
    if not 0 <= idx < size:
        raise IndexError(f"{what} index {idx} out of range for register of {size}")


def beam_splitter(s: HybridState, i: int, j: int) -> HybridState:
    """50:50 beam splitter, labels (u, v) -> ((u+v)/sqrt2, (u-v)/sqrt2).

    This convention is its own inverse.
    """
    _check_index(i, s.n_modes, "mode")
    _check_index(j, s.n_modes, "mode")
    if i == j:
        raise ValueError("beam splitter needs two distinct modes")
    modes = s.modes.copy()
    u, v = s.modes[:, i], s.modes[:, j]
    modes[:, i] = (u + v) / np.sqrt(2)
    modes[:, j] = (u - v) / np.sqrt(2)
    return HybridState(s.coeffs, modes, s.atoms)


def cavity_reflect(s: HybridState, mode: int, atom: int) -> HybridState:
    """Reflect ``mode`` off the cavity holding ``atom``: pi phase iff the atom is in g."""
    _check_index(mode, s.n_modes, "mode")
    _check_index(atom, s.n_atoms, "atom")
    modes = s.modes.copy()
    flip = s.atoms[:, atom] == G
    modes[flip, mode] = -modes[flip, mode]
    return HybridState(s.coeffs, modes, s.atoms)


def _finish_projection(projected: HybridState):
    p = gram_norm(projected) ** 2
    if p < IMPOSSIBLE_P:
        return projected, p
    return normalize(projected), p


def project_threshold(s: HybridState, mode: int, outcome: str):
    """Project ``mode`` onto vacuum (``"OFF"``) or its complement (``"ON"``).

    Returns ``(post_state, probability)``. For an impossible outcome
    (probability below 1e-14) the unnormalized projection is returned and
    the caller must not renormalize it.
    """
    _check_index(mode, s.n_modes, "mode")
    outcome = str(outcome).upper()
    if outcome not in ("ON", "OFF"):
        raise ValueError(f"threshold outcome must be ON or OFF, got {outcome!r}")
    vac_modes = s.modes.copy()
    vac_modes[:, mode] = 0.0
    vac_coeffs = s.coeffs * coherent_overlap(0.0, s.modes[:, mode])
    off = HybridState(vac_coeffs, vac_modes, s.atoms)
    if outcome == "OFF":
        projected = simplify(off)
    else:
        projected = simplify(
            HybridState(
                np.concatenate([s.coeffs, -vac_coeffs]),
                np.vstack([s.modes, vac_modes]),
                np.vstack([s.atoms, s.atoms]),
            )
        )
    return _finish_projection(projected)


def project_atom(s: HybridState, atom: int, outcome: str):
    """Project ``atom`` onto |+> or |-> = (|g> +- |f>)/sqrt2.

    The result stays in the g/f basis, so each term splits in two.
    """
    _check_index(atom, s.n_atoms, "atom")
    if outcome not in ("+", "-"):
        raise ValueError(f"atomic outcome must be '+' or '-', got {outcome!r}")
    sign = 1.0 if outcome == "+" else -1.0
    # <+-|g> = 1/sqrt2, <+-|f> = +-1/sqrt2
    amp = np.where(s.atoms[:, atom] == G, 1.0, sign) / np.sqrt(2)
    c = s.coeffs * amp
    atoms_g = s.atoms.copy()
    atoms_g[:, atom] = G
    atoms_f = s.atoms.copy()
    atoms_f[:, atom] = F
    projected = simplify(
        HybridState(
            np.concatenate([c / np.sqrt(2), sign * c / np.sqrt(2)]),
            np.vstack([s.modes, s.modes]),
            np.vstack([atoms_g, atoms_f]),
        )
    )
    return _finish_projection(projected)


# Columns: image of |g>, image of |f>, as (label, factor).
_PAULI = {
    "I": ((G, 1.0), (F, 1.0)),
    "Z": ((G, 1.0), (F, -1.0)),
    "X": ((F, 1.0), (G, 1.0)),
    "iY": ((F, -1.0), (G, 1.0)),
}


def apply_pauli(s: HybridState, atom: int, op: str) -> HybridState:
    """Apply I, Z, X or iY (= [[0, 1], [-1, 0]] in the g/f basis) to ``atom``."""
    _check_index(atom, s.n_atoms, "atom")
    try:
        (g_to, g_fac), (f_to, f_fac) = _PAULI[op]
    except KeyError:
        raise ValueError(f"unknown Pauli operation {op!r}") from None
    is_g = s.atoms[:, atom] == G
    atoms = s.atoms.copy()
    atoms[:, atom] = np.where(is_g, g_to, f_to)
    coeffs = s.coeffs * np.where(is_g, g_fac, f_fac)
    return HybridState(coeffs, s.modes, atoms)


def atom_density(s: HybridState, atoms: Sequence[int]) -> np.ndarray:
    """Reduced density matrix of the listed atoms, trace-normalized.

    Basis order is row-major over the listed atoms with g=0, f=1.
    """
    atoms = list(atoms)
    for a in atoms:
        _check_index(a, s.n_atoms, "atom")
    rest = [k for k in range(s.n_atoms) if k not in atoms]
    if s.n_modes:
        env = coherent_overlap(s.modes[:, None, :], s.modes[None, :, :]).prod(axis=2)
    else:
        env = np.ones((s.n_terms, s.n_terms), dtype=complex)
    if rest:
        env = env * np.all(s.atoms[:, None, rest] == s.atoms[None, :, rest], axis=2)
    # index of each term's kept-atom configuration
    weights = 2 ** np.arange(len(atoms) - 1, -1, -1)
    idx = s.atoms[:, atoms].astype(int) @ weights
    dim = 2 ** len(atoms)
    onehot = np.zeros((s.n_terms, dim), dtype=complex)
    onehot[np.arange(s.n_terms), idx] = 1.0
    # rho = sum_kl c_k c_l^* <env_l|env_k> |a_k><a_l|
    w = np.outer(s.coeffs, np.conj(s.coeffs)) * env.T
    rho = onehot.T @ w @ onehot
    tr = np.trace(rho).real
    if tr <= 0:
        raise ImpossibleOutcome("zero state has no reduced density matrix")
    return rho / tr


def coherent(beta: complex) -> HybridState:
    """Single-mode coherent state |beta> with no atoms."""
    return HybridState(np.ones(1), np.array([[beta]], dtype=complex), np.zeros((1, 0), dtype=np.int8))


def cat(beta: complex, sign: int = 1) -> HybridState:
    """Normalized |beta> + sign |-beta> (even cat for sign=+1)."""
    s = HybridState(
        np.array([1.0, sign], dtype=complex),
        np.array([[beta], [-beta]], dtype=complex),
        np.zeros((2, 0), dtype=np.int8),
    )
    return normalize(simplify(s))


def atom(a: complex, b: complex) -> HybridState:
    """Single atom a|g> + b|f> (not renormalized)."""
    s = HybridState(
        np.array([a, b], dtype=complex),
        np.zeros((2, 0), dtype=complex),
        np.array([[G], [F]], dtype=np.int8),
    )
    return simplify(s)


def _fmt_complex(z: complex) -> str:
    z = complex(z)
    if abs(z.imag) < 1e-12:
        return f"{z.real:.6g}"
    if abs(z.real) < 1e-12:
        return f"{z.imag:.6g}j"
    return f"({z.real:.6g}{z.imag:+.6g}j)"


def render(s: HybridState) -> str:
    """One line per term, ``coeff x |labels>``."""
    if s.is_zero():
        return "0"
    lines = []
    for t in s.terms:
        labels = ", ".join([_fmt_complex(m) for m in t.mode_labels] + list(t.atom_labels))
        lines.append(f"{_fmt_complex(t.coeff)} x |{labels}>")
    return "\n".join(lines)
