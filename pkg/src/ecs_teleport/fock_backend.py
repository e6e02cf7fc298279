"""Dense state vectors over truncated photon-number spaces and two-level atoms.

Amplitudes are kept as a tensor of shape ``(cutoff+1,)*n_modes + (2,)*n_atoms``;
the flat ``amps`` view is row-major, modes first and then atoms, with atom
basis index 0 = g and 1 = f.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
import scipy.linalg
from scipy.special import gammaln
from scipy.stats import poisson

from . import cat_algebra
from .cat_algebra import ImpossibleOutcome

__all__ = [
    "FockVector",
    "LEAKAGE_TOL",
    "coherent_vector",
    "cutoff_for",
    "default_cutoff",
    "leakage",
    "vacuum",
    "from_hybrid",
    "bs_matrix",
    "bs_apply",
    "conditional_parity",
    "measure_threshold",
    "measure_atom",
    "apply_pauli",
    "atom_density",
    "flat_index",
    "unflat_index",
]

LEAKAGE_TOL = 1e-8
IMPOSSIBLE_P = 1e-12


def leakage(beta_sq: float, cutoff: int) -> float:
    """Probability mass of a coherent state with mean photon number ``beta_sq`` above ``cutoff``."""
    return float(poisson.sf(cutoff, beta_sq)) if beta_sq > 0 else 0.0


def _min_cutoff(beta_sq: float) -> int:
    return math.ceil(beta_sq + 6 * math.sqrt(max(beta_sq, 1.0)))


def cutoff_for(beta_sq: float) -> int:
    """Smallest cutoff meeting both the 6-sigma rule and the leakage bound for mean ``beta_sq``."""
    c = _min_cutoff(beta_sq)
    while leakage(beta_sq, c) >= LEAKAGE_TOL:
        c += 1
    return c


def default_cutoff(alpha_sq: float) -> int:
    """Cutoff for the protocol at |alpha|^2 = alpha_sq (largest label is sqrt2 alpha)."""
    return cutoff_for(2.0 * alpha_sq)


def coherent_vector(beta: complex, cutoff: int) -> np.ndarray:
    """Truncated, renormalized Fock amplitudes of |beta>."""
    beta = complex(beta)
    bsq = abs(beta) ** 2
    lost = leakage(bsq, cutoff)
    if cutoff < _min_cutoff(bsq) or lost >= LEAKAGE_TOL:
        raise ValueError(
            f"cutoff {cutoff} too small for |beta|^2={bsq:g}: "
            f"estimated leakage {lost:.2e} (need cutoff >= {cutoff_for(bsq)})"
        )
    n = np.arange(cutoff + 1)
    if beta == 0:
        v = np.zeros(cutoff + 1, dtype=complex)
        v[0] = 1.0
        return v
    # log-space to keep beta^n / sqrt(n!) finite
    mag = np.exp(-bsq / 2 + n * math.log(abs(beta)) - 0.5 * gammaln(n + 1))
    v = mag * np.exp(1j * n * np.angle(beta))
    return v / np.linalg.norm(v)


@dataclass(frozen=True, eq=False)
class FockVector:
    tensor: np.ndarray
    cutoff: int
    n_modes: int
    n_atoms: int

    def __post_init__(self):
        shape = (self.cutoff + 1,) * self.n_modes + (2,) * self.n_atoms
        t = np.asarray(self.tensor, dtype=complex).reshape(shape)
        t.setflags(write=False)
        object.__setattr__(self, "tensor", t)

    @classmethod
    def product(cls, mode_vectors: Sequence[np.ndarray], atom_vectors: Sequence[np.ndarray] = ()) -> "FockVector":
        """Tensor product of single-mode and single-atom amplitude vectors."""
        if not mode_vectors:
            raise ValueError("need at least one optical mode")
        cutoff = len(mode_vectors[0]) - 1
        if any(len(v) != cutoff + 1 for v in mode_vectors):
            raise ValueError("all modes must share one cutoff")
        t = np.ones((), dtype=complex)
        for v in list(mode_vectors) + [np.asarray(a, dtype=complex) for a in atom_vectors]:
            t = np.multiply.outer(t, v)
        return cls(t, cutoff, len(mode_vectors), len(atom_vectors))

    @property
    def amps(self) -> np.ndarray:
        return self.tensor.reshape(-1)

    @property
    def n_terms(self) -> int:
        return int(np.count_nonzero(np.abs(self.amps) > 1e-12))

    def is_zero(self) -> bool:
        return not np.any(self.amps)

    def __repr__(self):
        return f"FockVector(cutoff={self.cutoff}, n_modes={self.n_modes}, n_atoms={self.n_atoms})"

    def _with(self, t: np.ndarray) -> "FockVector":
        return FockVector(t, self.cutoff, self.n_modes, self.n_atoms)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def normalized(self) -> "FockVector":
        n = self.norm()
        if n == 0:
            raise ImpossibleOutcome("cannot normalize the zero vector")
        return self._with(self.tensor / n)

    def overlap(self, other: "FockVector") -> complex:
        if self.tensor.shape != other.tensor.shape:
            raise ValueError("vectors live on different registers")
        return complex(np.vdot(self.amps, other.amps))

    def append_coherent(self, beta: complex) -> "FockVector":
        """Add a new optical mode in |beta>, placed after the existing modes."""
        v = coherent_vector(beta, self.cutoff)
        t = np.multiply.outer(self.tensor, v)
        # move the new mode axis in front of the atom axes
        t = np.moveaxis(t, -1, self.n_modes)
        return FockVector(t, self.cutoff, self.n_modes + 1, self.n_atoms)

    def beam_splitter(self, i: int, j: int) -> "FockVector":
        return bs_apply(self, i, j)

    def reflect(self, mode: int, atom: int) -> "FockVector":
        return conditional_parity(self, mode, atom)

    def measure_threshold(self, mode: int, outcome: str):
        return measure_threshold(self, mode, outcome)

    def measure_atom(self, atom: int, outcome: str):
        return measure_atom(self, atom, outcome)

    def apply_pauli(self, atom: int, op: str) -> "FockVector":
        return apply_pauli(self, atom, op)

    def atom_density(self, atoms: Sequence[int]) -> np.ndarray:
        return atom_density(self, atoms)


def vacuum(n_modes: int, n_atoms: int, cutoff: int) -> FockVector:
    t = np.zeros((cutoff + 1,) * n_modes + (2,) * n_atoms, dtype=complex)
    t[(0,) * (n_modes + n_atoms)] = 1.0
    return FockVector(t, cutoff, n_modes, n_atoms)


def flat_index(v: FockVector, photons: Sequence[int], atoms: Sequence[int]) -> int:
    """Position of basis state |photons> (x) |atoms> in ``v.amps``."""
    return int(np.ravel_multi_index(tuple(photons) + tuple(atoms), v.tensor.shape))


def unflat_index(v: FockVector, k: int):
    idx = np.unravel_index(k, v.tensor.shape)
    return tuple(int(i) for i in idx[: v.n_modes]), tuple(int(i) for i in idx[v.n_modes :])


def from_hybrid(s: cat_algebra.HybridState, cutoff: int) -> FockVector:
    """Expand an exact hybrid state into truncated Fock amplitudes."""
    if s.n_modes == 0:
        raise ValueError("need at least one optical mode")
    shape = (cutoff + 1,) * s.n_modes + (2,) * s.n_atoms
    out = np.zeros(shape, dtype=complex)
    cache: dict[complex, np.ndarray] = {}
    for c, labels, atoms in zip(s.coeffs, s.modes, s.atoms):
        vecs = []
        for b in labels:
            key = complex(b)
            if key not in cache:
                cache[key] = coherent_vector(key, cutoff)
            vecs.append(cache[key])
        t = np.ones((), dtype=complex) * c
        for vec in vecs:
            t = np.multiply.outer(t, vec)
        out[(Ellipsis,) + tuple(int(a) for a in atoms)] += t
    return FockVector(out, cutoff, s.n_modes, s.n_atoms)


def _check_mode(v: FockVector, k: int):
    if not 0 <= k < v.n_modes:
        raise IndexError(f"mode index {k} out of range for {v.n_modes} modes")


def _check_atom(v: FockVector, k: int):
    if not 0 <= k < v.n_atoms:
        raise IndexError(f"atom index {k} out of range for {v.n_atoms} atoms")


@lru_cache(maxsize=16)
def bs_matrix(cutoff: int) -> np.ndarray:
    """Two-mode 50:50 beam splitter on the truncated space, shape ((c+1)^2, (c+1)^2).

    exp(pi/4 (a^dag b - a b^dag)) sends coherent (u, v) to ((u+v)/sqrt2, (v-u)/sqrt2);
    a parity on the second port then flips the sign of that output.
    """
    d = cutoff + 1
    a = np.diag(np.sqrt(np.arange(1, d)), 1)
    eye = np.eye(d)
    A = np.kron(a, eye)
    B = np.kron(eye, a)
    gen = A.T @ B - A @ B.T
    u = scipy.linalg.expm(np.pi / 4 * gen)
    parity_b = np.kron(eye, np.diag((-1.0) ** np.arange(d)))
    m = parity_b @ u
    m.setflags(write=False)
    return m


def bs_apply(v: FockVector, i: int, j: int) -> FockVector:
    _check_mode(v, i)
    _check_mode(v, j)
    if i == j:
        raise ValueError("beam splitter needs two distinct modes")
    d = v.cutoff + 1
    u = bs_matrix(v.cutoff).reshape(d, d, d, d)
    t = np.tensordot(u, v.tensor, axes=([2, 3], [i, j]))
    # tensordot puts the output (i, j) axes first
    t = np.moveaxis(t, [0, 1], [i, j])
    return v._with(t)


def conditional_parity(v: FockVector, mode: int, atom: int) -> FockVector:
    """Apply (-1)^n on ``mode`` to the components where ``atom`` is in g."""
    _check_mode(v, mode)
    _check_atom(v, atom)
    t = v.tensor.copy()
    sl = [slice(None)] * t.ndim
    sl[v.n_modes + atom] = cat_algebra.G
    # the atom axis is sliced away, mode axes keep their positions
    shape = [1] * (t.ndim - 1)
    shape[mode] = v.cutoff + 1
    t[tuple(sl)] *= ((-1.0) ** np.arange(v.cutoff + 1)).reshape(shape)
    return v._with(t)


def _finish(v: FockVector, t: np.ndarray):
    p = float(np.vdot(t, t).real)
    if p < IMPOSSIBLE_P:
        return v._with(t), p
    return v._with(t / math.sqrt(p)), p


def measure_threshold(v: FockVector, mode: int, outcome: str):
    _check_mode(v, mode)
    outcome = str(outcome).upper()
    if outcome not in ("ON", "OFF"):
        raise ValueError(f"threshold outcome must be ON or OFF, got {outcome!r}")
    t = v.tensor.copy()
    sl = [slice(None)] * t.ndim
    if outcome == "OFF":
        sl[mode] = slice(1, None)
    else:
        sl[mode] = 0
    t[tuple(sl)] = 0
    return _finish(v, t)


def measure_atom(v: FockVector, atom: int, outcome: str):
    _check_atom(v, atom)
    if outcome not in ("+", "-"):
        raise ValueError(f"atomic outcome must be '+' or '-', got {outcome!r}")
    sign = 1.0 if outcome == "+" else -1.0
    proj = 0.5 * np.array([[1.0, sign], [sign, 1.0]])
    return _finish(v, _apply_atom_op(v, atom, proj))


_PAULI = {
    "I": np.eye(2),
    "Z": np.diag([1.0, -1.0]),
    "X": np.array([[0.0, 1.0], [1.0, 0.0]]),
    "iY": np.array([[0.0, 1.0], [-1.0, 0.0]]),
}


def _apply_atom_op(v: FockVector, atom: int, op: np.ndarray) -> np.ndarray:
    ax = v.n_modes + atom
    t = np.tensordot(op, v.tensor, axes=([1], [ax]))
    return np.moveaxis(t, 0, ax)


def apply_pauli(v: FockVector, atom: int, op: str) -> FockVector:
    _check_atom(v, atom)
    try:
        m = _PAULI[op]
    except KeyError:
        raise ValueError(f"unknown Pauli operation {op!r}") from None
    return v._with(_apply_atom_op(v, atom, m))


def atom_density(v: FockVector, atoms: Sequence[int]) -> np.ndarray:
    atoms = list(atoms)
    for a in atoms:
        _check_atom(v, a)
    keep = [v.n_modes + a for a in atoms]
    m = np.moveaxis(v.tensor, keep, list(range(len(keep)))).reshape(2 ** len(atoms), -1)
    rho = m @ m.conj().T
    tr = np.trace(rho).real
    if tr <= 0:
        raise ImpossibleOutcome("zero vector has no reduced density matrix")
    return rho / tr
