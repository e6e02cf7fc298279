"""Atomic-qubit teleportation over entangled coherent states with cavity reflections."""

from .analytics import fidelity, p_fail, p_success, p_success_n, sweep
from .protocol import (
    AttemptCircuit,
    MessageState,
    ProtocolConfig,
    classify,
    correction_for,
    prepare_joint,
    run_attempt,
    run_protocol,
)

__version__ = "0.1.0"
