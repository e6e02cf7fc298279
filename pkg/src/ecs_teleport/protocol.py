"""Teleportation of an atomic qubit between two cavities over an entangled coherent channel.

Register layout used by both backends once the ancillas are attached::

    optical slot 0  mode 1 -> (reflect off C1) 3 -> (BS2 sum port)  7
    optical slot 1  mode 2 -> (reflect off C2) 4 -> (BS3 sum port)  9
    optical slot 2  ancilla 5                    -> (BS2 diff port) 8
    optical slot 3  ancilla 6                    -> (BS3 diff port) 10
    atom 0          C1 (Alice, holds the message)
    atom 1          C2 (Bob, target)

Detectors D7, D8, D9, D10 therefore read slots 0, 2, 1, 3.
"""

from __future__ import annotations

import enum
import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from . import cat_algebra as ca
from . import fock_backend as fb
from .analytics import fidelity

log = logging.getLogger(__name__)

C1, C2 = 0, 1
DETECTORS = ("D7", "D8", "D9", "D10")
DETECTOR_SLOTS = (0, 2, 1, 3)
ON, OFF = "ON", "OFF"
INVALID_TOL = 1e-9
MAX_ALPHA_SQ = 16.0

State = Union[ca.HybridState, fb.FockVector]
Pattern = tuple  # four of ON / OFF in detector order D7..D10


class ModelViolation(RuntimeError):
    """The simulation produced something the ideal model forbids."""


class Group(enum.Enum):
    I = "GroupI"
    II = "GroupII"
    INVALID = "Invalid"


class Kind(enum.Enum):
    SUCCESS = "Success"
    FAILURE = "Failure"
    INVALID = "Invalid"


@dataclass(frozen=True)
class MessageState:
    a: complex
    b: complex

    def __post_init__(self):
        object.__setattr__(self, "a", complex(self.a))
        object.__setattr__(self, "b", complex(self.b))
        n = abs(self.a) ** 2 + abs(self.b) ** 2
        if abs(n - 1.0) > 1e-12:
            raise ValueError(f"message amplitudes must satisfy |a|^2+|b|^2=1, got {n!r}")

    @classmethod
    def from_bloch(cls, theta: float, phi: float) -> "MessageState":
        return cls(math.cos(theta / 2), complex(math.cos(phi), math.sin(phi)) * math.sin(theta / 2))

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.a, self.b])


PLUS = MessageState(1 / math.sqrt(2), 1 / math.sqrt(2))


@dataclass(frozen=True)
class DetectionRecord:
    d7: str
    d8: str
    d9: str
    d10: str
    atomic: Optional[str] = None  # "+", "-", or None when not measured

    @property
    def pattern(self) -> Pattern:
        return (self.d7, self.d8, self.d9, self.d10)

    def __str__(self):
        opt = ",".join(self.pattern)
        return f"({opt}) atomic={self.atomic or 'not-measured'}"


@dataclass(frozen=True)
class AttemptResult:
    kind: Kind
    record: DetectionRecord
    probability: float
    post_fidelity: float
    correction: Optional[str] = None
    failure_mode: Optional[str] = None  # "all-OFF" or "single-ON:D<k>" for Group II

    @property
    def success(self) -> bool:
        return self.kind is Kind.SUCCESS


@dataclass(frozen=True)
class ProtocolConfig:
    alpha_sq: float = 1.0
    max_attempts: int = 1
    backend: str = "exact"
    cutoff: Optional[int] = None
    seed: int = 0
    message: MessageState = field(default_factory=lambda: MessageState(1.0, 0.0))

    def __post_init__(self):
        if not 0 <= self.alpha_sq <= MAX_ALPHA_SQ:
            raise ValueError(f"alpha_sq must lie in [0, {MAX_ALPHA_SQ}], got {self.alpha_sq}")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        if self.backend not in ("exact", "fock"):
            raise ValueError(f"backend must be 'exact' or 'fock', got {self.backend!r}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def resolved_cutoff(self) -> int:
        return self.cutoff if self.cutoff is not None else fb.default_cutoff(self.alpha_sq)


@dataclass
class ProtocolRunReport:
    config: ProtocolConfig
    attempts: list
    trial: int = 0

    @property
    def success(self) -> bool:
        return bool(self.attempts) and self.attempts[-1].success

    @property
    def n_attempts(self) -> int:
        return len(self.attempts)


def classify(pattern: Pattern) -> Group:
    """Sort a D7..D10 pattern into success, failure or forbidden."""
    pattern = tuple(pattern)
    n_on = sum(p == ON for p in pattern)
    if n_on <= 1:
        return Group.II
    if pattern in CORRECTIONS_BY_PATTERN:
        return Group.I
    return Group.INVALID


# Derived from the branch algebra of the mixed output state; see
# derive_correction_table, which recomputes it from simulation.
CORRECTIONS_BY_PATTERN = {
    (ON, OFF, ON, OFF): {"+": "I", "-": "Z"},
    (OFF, ON, OFF, ON): {"+": "I", "-": "Z"},
    (ON, OFF, OFF, ON): {"+": "X", "-": "iY"},
    (OFF, ON, ON, OFF): {"+": "X", "-": "iY"},
}

# As printed in the source table (row order D7, D8, atomic, D9, D10 flattened);
# the seventh row disagrees with the branch algebra.
PRINTED_TABLE = [
    ((ON, OFF, ON, OFF), "+", "I"),
    ((ON, OFF, ON, OFF), "-", "Z"),
    ((OFF, ON, OFF, ON), "+", "I"),
    ((OFF, ON, OFF, ON), "-", "Z"),
    ((ON, OFF, OFF, ON), "+", "X"),
    ((ON, OFF, OFF, ON), "-", "iY"),
    ((OFF, ON, ON, OFF), "+", "Z"),
    ((OFF, ON, ON, OFF), "-", "iY"),
]


def correction_for(pattern: Pattern, atomic: str) -> str:
    pattern = tuple(pattern)
    if classify(pattern) is not Group.I:
        raise ValueError(f"pattern {pattern} is not a success pattern")
    if atomic not in ("+", "-"):
        raise ValueError(f"atomic outcome must be '+' or '-', got {atomic!r}")
    return CORRECTIONS_BY_PATTERN[pattern][atomic]


def _failure_mode(pattern: Pattern) -> str:
    on = [d for d, p in zip(DETECTORS, pattern) if p == ON]
    return "all-OFF" if not on else f"single-ON:{on[0]}"


def prepare_joint(alpha_sq: float, message: MessageState, backend: str = "exact", cutoff: Optional[int] = None) -> State:
    """Even cat through BS1 into modes 1, 2, then message atom C1 and target atom C2 in |+>.

    Returns a state on two optical modes and two atoms.
    """
    if alpha_sq < 0:
        raise ValueError("alpha_sq must be >= 0")
    beta = math.sqrt(2 * alpha_sq)
    if backend == "exact":
        src = ca.tensor(ca.cat(beta), ca.coherent(0.0))
        ecs = ca.simplify(ca.beam_splitter(src, 0, 1))
        atoms = ca.tensor(ca.atom(message.a, message.b), ca.atom(PLUS.a, PLUS.b))
        return ca.normalize(ca.simplify(ca.tensor(ecs, atoms)))
    if backend == "fock":
        c = fb.default_cutoff(alpha_sq) if cutoff is None else cutoff
        even = fb.coherent_vector(beta, c) + fb.coherent_vector(-beta, c)
        even /= np.linalg.norm(even)
        src = fb.FockVector.product([even, fb.coherent_vector(0.0, c)], [message.vector, PLUS.vector])
        return fb.bs_apply(src, 0, 1)
    raise ValueError(f"unknown backend {backend!r}")


def mix_circuit(state: State, alpha: float) -> State:
    """Both cavity reflections, ancilla injection and the two mixing beam splitters."""
    s = state.reflect(1, C2)
    s = s.reflect(0, C1)
    s = s.append_coherent(alpha).append_coherent(alpha)
    s = s.beam_splitter(0, 2)
    return s.beam_splitter(1, 3)


TraceFn = Callable[[str], None]


def _trace_line(trace: Optional[TraceFn], step: str, s: State, outcome=None, p=None):
    if trace is None:
        return
    line = f"{step:<22} terms={s.n_terms:<6d} norm={s.norm():.12f}"
    if outcome is not None:
        line += f" outcome={outcome} p={p:.12f}"
    trace(line)


class AttemptCircuit:
    """One prepared attempt, with measurement branches memoized by outcome prefix.

    Every attempt starts from an identical fresh channel and the same message, so
    the post-measurement state of a given outcome prefix never changes; caching
    it makes repeated sampling cheap without changing the sampled distribution.
    """

    def __init__(self, state: State, alpha_sq: float, message: MessageState, tol: float = 1e-9):
        self.prepared = state
        self.alpha_sq = alpha_sq
        self.message = message
        self.tol = tol
        self._mixed: Optional[State] = None
        self._branches: dict = {}
        self._leaves: dict = {}

    @classmethod
    def from_config(cls, config: ProtocolConfig) -> "AttemptCircuit":
        cutoff = config.resolved_cutoff() if config.backend == "fock" else None
        state = prepare_joint(config.alpha_sq, config.message, config.backend, cutoff)
        return cls(state, config.alpha_sq, config.message, 1e-9 if config.backend == "exact" else 1e-6)

    @property
    def mixed(self) -> State:
        if self._mixed is None:
            self._mixed = mix_circuit(self.prepared, math.sqrt(self.alpha_sq))
        return self._mixed

    def branch(self, prefix: tuple):
        """Post-measurement state and conditional probability of the last outcome in ``prefix``.

        Prefix entries are detector outcomes in D7..D10 order, optionally
        followed by the atomic outcome.
        """
        if prefix in self._branches:
            return self._branches[prefix]
        if not prefix:
            return self.mixed, 1.0
        parent, _ = self.branch(prefix[:-1])
        k = len(prefix) - 1
        if k < 4:
            out = parent.measure_threshold(DETECTOR_SLOTS[k], prefix[-1])
        else:
            out = parent.measure_atom(C1, prefix[-1])
        self._branches[prefix] = out
        return out

    def joint_probability(self, prefix: tuple) -> float:
        p = 1.0
        for k in range(1, len(prefix) + 1):
            p *= self.branch(prefix[:k])[1]
        return p

    def leaf(self, pattern: Pattern, atomic: Optional[str]) -> AttemptResult:
        """Classify, correct and score one complete measurement record."""
        key = (tuple(pattern), atomic)
        if key in self._leaves:
            return self._leaves[key]
        record = DetectionRecord(*pattern, atomic=atomic)
        group = classify(pattern)
        prefix = tuple(pattern) + ((atomic,) if atomic is not None else ())
        prob = self.joint_probability(prefix)
        if group is Group.INVALID or prob < ca.IMPOSSIBLE_P:
            if group is Group.INVALID and prob > INVALID_TOL:
                raise ModelViolation(f"forbidden record {record} has probability {prob:.3e}")
            kind = Kind.INVALID if group is Group.INVALID else (Kind.SUCCESS if group is Group.I else Kind.FAILURE)
            result = AttemptResult(kind, record, prob, float("nan"),
                                   correction=correction_for(pattern, atomic) if group is Group.I and atomic else None,
                                   failure_mode=_failure_mode(pattern) if group is Group.II else None)
        elif group is Group.I:
            if atomic is None:
                raise ValueError("success patterns need an atomic outcome")
            state, _ = self.branch(prefix)
            op = correction_for(pattern, atomic)
            fixed = state.apply_pauli(C2, op)
            f = fidelity(fixed.atom_density([C2]), self.message)
            result = AttemptResult(Kind.SUCCESS, record, prob, f, correction=op)
        else:
            state, _ = self.branch(prefix)
            target = np.kron(self.message.vector, PLUS.vector)
            f = fidelity(state.atom_density([C1, C2]), target)
            result = AttemptResult(Kind.FAILURE, record, prob, f, failure_mode=_failure_mode(pattern))
        self._leaves[key] = result
        return result

    def enumerate(self) -> list:
        """Every record with its joint probability, no sampling."""
        results = []
        for pattern in itertools.product((ON, OFF), repeat=4):
            if classify(pattern) is Group.I:
                results.extend(self.leaf(pattern, a) for a in ("+", "-"))
            else:
                results.append(self.leaf(pattern, None))
        return results


def _draw(rng: np.random.Generator, p_first: float, first, second):
    return first if rng.random() < p_first else second


def run_attempt(state: State, rng: np.random.Generator, *, alpha_sq: float, message: MessageState,
                circuit: Optional[AttemptCircuit] = None, trace: Optional[TraceFn] = None) -> AttemptResult:
    """Run one attempt from a freshly prepared joint state, sampling every measurement.

    Detectors are sampled one after another (chain rule), each outcome drawn
    from its conditional probability and the state projected before the next.
    """
    if circuit is None:
        circuit = AttemptCircuit(state, alpha_sq, message)
    if trace is not None:
        _trace_line(trace, "prepare", circuit.prepared)
        s = circuit.prepared.reflect(1, C2)
        _trace_line(trace, "reflect mode2 @ C2", s)
        s = s.reflect(0, C1)
        _trace_line(trace, "reflect mode1 @ C1", s)
        s = s.append_coherent(math.sqrt(alpha_sq)).append_coherent(math.sqrt(alpha_sq))
        _trace_line(trace, "ancillas 5,6", s)
        s = s.beam_splitter(0, 2)
        _trace_line(trace, "BS2 (3,5)->(7,8)", s)
        s = s.beam_splitter(1, 3)
        _trace_line(trace, "BS3 (4,6)->(9,10)", s)

    prefix: tuple = ()
    for det in DETECTORS:
        _, p_off = circuit.branch(prefix + (OFF,))
        prefix += (_draw(rng, p_off, OFF, ON),)
        s, p = circuit.branch(prefix)
        _trace_line(trace, f"detect {det}", s, prefix[-1], p)

    pattern = prefix
    if classify(pattern) is Group.I:
        _, p_plus = circuit.branch(prefix + ("+",))
        atomic = _draw(rng, p_plus, "+", "-")
        s, p = circuit.branch(prefix + (atomic,))
        _trace_line(trace, "measure C1 +/-", s, atomic, p)
    else:
        atomic = None
    result = circuit.leaf(pattern, atomic)
    if trace is not None:
        extra = f" correction={result.correction}" if result.correction else ""
        if result.failure_mode:
            extra += f" mode={result.failure_mode}"
        trace(f"result {result.kind.value:<14} record={result.record} p={result.probability:.12f} "
              f"fidelity={result.post_fidelity:.12f}{extra}")
    return result


def attempt_rng(seed: int, attempt: int, trial: int = 0) -> np.random.Generator:
    """Independent stream for one (trial, attempt) pair, stable under any scheduling."""
    return np.random.default_rng(np.random.SeedSequence([seed, attempt, trial]))


def run_protocol(config: ProtocolConfig, *, trial: int = 0, circuit: Optional[AttemptCircuit] = None,
                 trace: Optional[TraceFn] = None) -> ProtocolRunReport:
    """Repeat attempts with a fresh channel until success or ``max_attempts``.

    A failed attempt leaves the atoms in message (x) |+>; this is checked
    before the next attempt starts from a fresh channel and the same atoms.
    """
    if circuit is None:
        circuit = AttemptCircuit.from_config(config)
    attempts = []
    for k in range(config.max_attempts):
        if trace is not None:
            trace(f"attempt {k + 1}")
        res = run_attempt(circuit.prepared, attempt_rng(config.seed, k, trial), alpha_sq=config.alpha_sq,
                          message=config.message, circuit=circuit, trace=trace)
        attempts.append(res)
        if res.kind is Kind.SUCCESS:
            break
        if res.kind is Kind.FAILURE and not res.post_fidelity >= 1 - circuit.tol:
            raise ModelViolation(f"failure branch {res.record} did not preserve the message "
                                 f"(fidelity {res.post_fidelity!r})")
        log.debug("attempt %d failed: %s", k + 1, res.record)
    return ProtocolRunReport(config, attempts, trial)


def run_trials(config: ProtocolConfig, trials: int) -> list:
    """Independent seeded trials sharing one memoized circuit."""
    circuit = AttemptCircuit.from_config(config)
    return [run_protocol(config, trial=t, circuit=circuit) for t in range(trials)]


def derive_correction_table(alpha_sq: float = 2.0, messages=None) -> dict:
    """Recover the pattern/atomic -> Pauli map by simulation.

    For each success record, the Pauli that restores every probe message on C2
    is selected; raises if none or several fit.
    """
    if messages is None:
        messages = [MessageState.from_bloch(t, p) for t, p in ((0.7, 0.3), (2.1, -1.2), (1.3, 2.5))]
    ops = ("I", "Z", "X", "iY")
    table: dict = {}
    circuits = [AttemptCircuit(prepare_joint(alpha_sq, m), alpha_sq, m) for m in messages]
    for pattern in CORRECTIONS_BY_PATTERN:
        for atomic in ("+", "-"):
            fits = []
            for op in ops:
                ok = True
                for circ, m in zip(circuits, messages):
                    state, _ = circ.branch(tuple(pattern) + (atomic,))
                    if fidelity(state.apply_pauli(C2, op).atom_density([C2]), m) < 1 - 1e-9:
                        ok = False
                        break
                if ok:
                    fits.append(op)
            if len(fits) != 1:
                raise ModelViolation(f"no unique correction for {pattern} {atomic}: {fits}")
            table[(pattern, atomic)] = fits[0]
    return table
