"""Cross-checks run by ``ecs-teleport verify`` and the acceptance suite."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import analytics as an
from . import fock_backend as fb
from .protocol import (
    CORRECTIONS_BY_PATTERN,
    DETECTOR_SLOTS,
    DETECTORS,
    PRINTED_TABLE,
    AttemptCircuit,
    Kind,
    MessageState,
    derive_correction_table,
    mix_circuit,
    prepare_joint,
)


@dataclass
class Check:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)

    def line(self) -> str:
        body = " ".join(f"{k}={_fmt(v)}" for k, v in self.detail.items())
        return f"{'PASS' if self.passed else 'FAIL'} {self.name} {body}".rstrip()


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.3e}" if v != 0 and (abs(v) < 1e-3 or abs(v) >= 1e4) else f"{v:.9f}"
    return str(v)


def random_messages(count: int, seed: int = 0) -> list:
    """Messages uniform on the Bloch sphere."""
    rng = np.random.default_rng(seed)
    theta = np.arccos(1 - 2 * rng.random(count))
    phi = 2 * np.pi * rng.random(count)
    return [MessageState.from_bloch(t, p) for t, p in zip(theta, phi)]


def audit(alpha_sq: float, message: MessageState) -> dict:
    """Exhaustive group totals and worst-case fidelities at one message."""
    results = AttemptCircuit(prepare_joint(alpha_sq, message), alpha_sq, message).enumerate()
    totals = {k: 0.0 for k in Kind}
    worst = {Kind.SUCCESS: 1.0, Kind.FAILURE: 1.0}
    for r in results:
        totals[r.kind] += r.probability
        if r.kind in worst and r.probability > 1e-14:
            worst[r.kind] = min(worst[r.kind], r.post_fidelity)
    return {
        "group_i": totals[Kind.SUCCESS],
        "group_ii": totals[Kind.FAILURE],
        "invalid": totals[Kind.INVALID],
        "success_fidelity_min": worst[Kind.SUCCESS],
        "failure_fidelity_min": worst[Kind.FAILURE],
        "results": results,
    }


def check_probability_audit(alpha_sq: float, message: MessageState, tol: float = 1e-9) -> Check:
    a = audit(alpha_sq, message)
    ps, pf = an.p_success(alpha_sq), an.p_fail(alpha_sq)
    total = a["group_i"] + a["group_ii"] + a["invalid"]
    detail = {
        "alpha_sq": alpha_sq,
        "group_i": a["group_i"],
        "p_success": ps,
        "group_ii": a["group_ii"],
        "p_fail": pf,
        "invalid": a["invalid"],
        "total": total,
    }
    ok = (abs(a["group_i"] - ps) <= tol and abs(a["group_ii"] - pf) <= tol
          and abs(total - 1) <= tol and a["invalid"] < tol)
    return Check("probability-audit", ok, detail)


def backend_states(alpha_sq: float, message: MessageState, cutoff=None):
    """Mixed (pre-detection) states from both backends, exact one expanded to Fock."""
    c = fb.default_cutoff(alpha_sq) if cutoff is None else cutoff
    alpha = math.sqrt(alpha_sq)
    exact = mix_circuit(prepare_joint(alpha_sq, message), alpha)
    fock = mix_circuit(prepare_joint(alpha_sq, message, "fock", c), alpha)
    return exact, fock, c


def check_backend_equivalence(alpha_sq: float, message: MessageState, cutoff=None,
                              overlap_tol: float = 1e-6, prob_tol: float = 1e-7) -> Check:
    try:
        exact, fock, c = backend_states(alpha_sq, message, cutoff)
    except ValueError as exc:
        return Check("backend-equivalence", False, {"alpha_sq": alpha_sq, "cutoff": cutoff, "error": str(exc)})
    ov = abs(fb.from_hybrid(exact, c).overlap(fock))
    diffs = {}
    for det, slot in zip(DETECTORS, DETECTOR_SLOTS):
        diffs[det] = abs(exact.measure_threshold(slot, "OFF")[1] - fock.measure_threshold(slot, "OFF")[1])
    detail = {"alpha_sq": alpha_sq, "cutoff": c, "overlap": ov, "max_off_prob_diff": max(diffs.values())}
    ok = ov >= 1 - overlap_tol and max(diffs.values()) <= prob_tol
    return Check("backend-equivalence", ok, detail)


def check_correction_table(alpha_sq: float = 2.0) -> tuple:
    """Regenerate the correction map; returns the check and the printed-table discrepancies."""
    derived = derive_correction_table(alpha_sq if alpha_sq > 0 else 2.0)
    expected = {(p, a): op for p, row in CORRECTIONS_BY_PATTERN.items() for a, op in row.items()}
    discrepancies = []
    for row, (pattern, atomic, printed) in enumerate(PRINTED_TABLE, start=1):
        got = derived[(pattern, atomic)]
        if got != printed:
            discrepancies.append({"row": row, "pattern": ",".join(pattern), "atomic": atomic,
                                  "derived": got, "printed": printed})
    ok = derived == expected
    return Check("correction-table", ok, {"rows": len(derived), "printed_mismatches": len(discrepancies)}), discrepancies


def check_message_independence(alpha_sq: float, messages, tol: float = 1e-9) -> Check:
    ps = an.p_success(alpha_sq)
    spread = 0.0
    fid_s = fid_f = 1.0
    for m in messages:
        a = audit(alpha_sq, m)
        spread = max(spread, abs(a["group_i"] - ps))
        fid_s = min(fid_s, a["success_fidelity_min"])
        fid_f = min(fid_f, a["failure_fidelity_min"])
    detail = {"alpha_sq": alpha_sq, "messages": len(messages), "max_group_i_dev": spread,
              "min_success_fidelity": fid_s, "min_failure_fidelity": fid_f}
    ok = spread <= tol and fid_s >= 1 - tol and fid_f >= 1 - tol
    return Check("message-independence", ok, detail)


def run_all(alpha_sq_list, cutoff=None, seed: int = 0, n_messages: int = 50) -> dict:
    messages = random_messages(n_messages, seed)
    probe = messages[0]
    checks = []
    for a in alpha_sq_list:
        checks.append(check_backend_equivalence(a, probe, cutoff))
        checks.append(check_probability_audit(a, probe))
        checks.append(check_message_independence(a, messages))
    table_alpha = max([a for a in alpha_sq_list if a > 0], default=2.0)
    table_check, discrepancies = check_correction_table(table_alpha)
    checks.append(table_check)
    return {"checks": checks, "table_discrepancies": discrepancies,
            "passed": all(c.passed for c in checks)}
