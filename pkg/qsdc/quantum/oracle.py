"""
Brute-force state-vector oracle for the symbolic Bell algebra.

Builds the explicit 4x4 operators from the single-qubit matrices of U0..U3 and
compares vectors up to global phase. Used by the selftest sub-command and by the
test suite; the simulator itself never touches vectors.
"""

import itertools
from typing import Dict, Tuple

import numpy as np

from qsdc.quantum.bell import BellLabel, EncodeOp, Side

_SQRT_HALF = 1 / np.sqrt(2)

KET = {0: np.array([1, 0], dtype=complex), 1: np.array([0, 1], dtype=complex)}

# Qubit order is (home, travel).
BELL_VECTORS: Dict[BellLabel, np.ndarray] = {
    BellLabel.PHI_PLUS: _SQRT_HALF * np.array([1, 0, 0, 1], dtype=complex),
    BellLabel.PHI_MINUS: _SQRT_HALF * np.array([1, 0, 0, -1], dtype=complex),
    BellLabel.PSI_PLUS: _SQRT_HALF * np.array([0, 1, 1, 0], dtype=complex),
    BellLabel.PSI_MINUS: _SQRT_HALF * np.array([0, 1, -1, 0], dtype=complex),
}


def _outer(a: int, b: int) -> np.ndarray:
    return np.outer(KET[a], KET[b].conj())


OPERATOR_MATRICES: Dict[EncodeOp, np.ndarray] = {
    EncodeOp.U0: _outer(0, 0) + _outer(1, 1),
    EncodeOp.U1: _outer(0, 0) - _outer(1, 1),
    EncodeOp.U2: _outer(0, 1) + _outer(1, 0),
    EncodeOp.U3: _outer(0, 1) - _outer(1, 0),
}


def lift(op: EncodeOp, side: Side) -> np.ndarray:
    """4x4 operator acting on one qubit of the pair."""
    identity = np.eye(2, dtype=complex)
    matrix = OPERATOR_MATRICES[op]
    if side is Side.HOME:
        return np.kron(matrix, identity)
    return np.kron(identity, matrix)


def match_label(vector: np.ndarray, atol: float = 1e-12) -> BellLabel:
    """Bell label equal to ``vector`` up to a global phase."""
    for label, bell in BELL_VECTORS.items():
        if abs(abs(np.vdot(bell, vector)) - 1.0) < atol:
            return label
    raise ValueError(f"vector {vector} is not a Bell state up to phase")


def oracle_apply(state: BellLabel, op: EncodeOp, side: Side) -> BellLabel:
    return match_label(lift(op, side) @ BELL_VECTORS[state])


def oracle_table() -> Dict[Tuple[BellLabel, EncodeOp, Side], BellLabel]:
    """The full 4 x 4 x 2 table of ``oracle_apply``."""
    return {
        (state, op, side): oracle_apply(state, op, side)
        for state, op, side in itertools.product(BellLabel, EncodeOp, Side)
    }


def product_bell_probabilities(home_bit: int, travel_bit: int) -> Dict[BellLabel, float]:
    """Bell-measurement distribution of the product state |home travel>."""
    product = np.kron(KET[home_bit], KET[travel_bit])
    return {
        label: float(abs(np.vdot(bell, product)) ** 2)
        for label, bell in BELL_VECTORS.items()
    }


def travel_projection(state: BellLabel, travel_bit: int) -> Tuple[float, int]:
    """
    Project the travel qubit of a Bell state onto |travel_bit>.

    Returns:
        (probability of that outcome, the home bit the pair collapses to)
    """
    projector = np.kron(np.eye(2), _outer(travel_bit, travel_bit))
    projected = projector @ BELL_VECTORS[state]
    probability = float(np.vdot(projected, projected).real)
    home_amplitudes = projected.reshape(2, 2)[:, travel_bit]
    home_bit = int(np.argmax(np.abs(home_amplitudes)))
    return probability, home_bit
