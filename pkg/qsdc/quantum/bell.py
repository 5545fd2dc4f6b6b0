"""
Symbolic two-qubit algebra for EPR pairs.

A Bell state is tracked as the Pauli frame (x, z) applied to the travel qubit of
|Phi+>, so every label is exact and global phase never appears:

    PhiPlus  = (0, 0)    PhiMinus = (0, 1)
    PsiPlus  = (1, 0)    PsiMinus = (1, 1)

The four encoding operations are the Paulis I, Z, X and ZX (= -XZ), so applying
one is an XOR on the frame. A Pauli on the home qubit acts like its transpose on
the travel qubit, which only differs by a phase, so the side does not change the
resulting label.
"""

import re
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Tuple, Union

import numpy as np

from qsdc.errors import ConfigurationError


class BellLabel(Enum):
    PHI_PLUS = (0, 0)
    PHI_MINUS = (0, 1)
    PSI_PLUS = (1, 0)
    PSI_MINUS = (1, 1)

    @property
    def x(self) -> int:
        return self.value[0]

    @property
    def z(self) -> int:
        return self.value[1]

    @classmethod
    def from_frame(cls, x: int, z: int) -> "BellLabel":
        return _FRAME_TO_LABEL[(x & 1, z & 1)]

    @property
    def short_name(self) -> str:
        return _SHORT_NAMES[self]


class EncodeOp(Enum):
    U0 = (0, 0)  # |0><0| + |1><1|
    U1 = (0, 1)  # |0><0| - |1><1|
    U2 = (1, 0)  # |0><1| + |1><0|
    U3 = (1, 1)  # |0><1| - |1><0|

    @property
    def x(self) -> int:
        return self.value[0]

    @property
    def z(self) -> int:
        return self.value[1]

    @classmethod
    def from_frame(cls, x: int, z: int) -> "EncodeOp":
        return _FRAME_TO_OP[(x & 1, z & 1)]


class Side(Enum):
    HOME = "home"
    TRAVEL = "travel"


_FRAME_TO_LABEL = {label.value: label for label in BellLabel}
_FRAME_TO_OP = {op.value: op for op in EncodeOp}
_SHORT_NAMES = {
    BellLabel.PHI_PLUS: "PhiPlus",
    BellLabel.PHI_MINUS: "PhiMinus",
    BellLabel.PSI_PLUS: "PsiPlus",
    BellLabel.PSI_MINUS: "PsiMinus",
}

INITIAL_STATE = BellLabel.PSI_MINUS


@dataclass(frozen=True)
class Pure:
    label: BellLabel


@dataclass(frozen=True)
class ZCollapsed:
    home_bit: int
    travel_bit: int


PairState = Union[Pure, ZCollapsed]


class BitMapping:
    """
    Bijection between the four encoding operations and two classical bits.

    The default assignment is U0->00, U1->11, U2->10, U3->01.
    """

    DEFAULT_TEXT = "U0:00,U1:11,U2:10,U3:01"

    def __init__(self, op_to_bits: Mapping[EncodeOp, Tuple[int, int]]):
        if set(op_to_bits) != set(EncodeOp):
            raise ConfigurationError(
                "bit_mapping must assign every operation U0..U3", key="bit_mapping"
            )
        values = set(op_to_bits.values())
        if values != {(0, 0), (0, 1), (1, 0), (1, 1)}:
            raise ConfigurationError(
                f"bit_mapping must be a bijection onto 00,01,10,11, got {sorted(values)}",
                key="bit_mapping",
            )
        self._op_to_bits = dict(op_to_bits)
        self._bits_to_op = {bits: op for op, bits in op_to_bits.items()}

    @classmethod
    def parse(cls, text: str) -> "BitMapping":
        """Parse ``U0:00,U1:11,...`` into a mapping."""
        op_to_bits = {}
        for item in [part.strip() for part in text.split(",") if part.strip()]:
            name, _, bits = item.partition(":")
            name, bits = name.strip().upper(), bits.strip()
            if name not in EncodeOp.__members__ or not re.fullmatch(r"[01]{2}", bits):
                raise ConfigurationError(
                    f"bit_mapping entry {item!r} is not of the form U<i>:<two bits>",
                    key="bit_mapping",
                )
            op_to_bits[EncodeOp[name]] = (int(bits[0]), int(bits[1]))
        return cls(op_to_bits)

    @classmethod
    def default(cls) -> "BitMapping":
        return cls.parse(cls.DEFAULT_TEXT)

    def bits(self, op: EncodeOp) -> Tuple[int, int]:
        return self._op_to_bits[op]

    def op(self, bits: Tuple[int, int]) -> EncodeOp:
        return self._bits_to_op[(int(bits[0]), int(bits[1]))]

    def encode(self, message_bits) -> list:
        """Group bits in pairs and map each pair to its operation."""
        if len(message_bits) % 2:
            raise ConfigurationError(
                f"message must have an even number of bits, got {len(message_bits)}"
            )
        return [
            self.op((message_bits[i], message_bits[i + 1]))
            for i in range(0, len(message_bits), 2)
        ]

    def decode(self, ops) -> list:
        bits = []
        for op in ops:
            bits.extend(self._op_to_bits[op])
        return bits

    def to_text(self) -> str:
        return ",".join(
            f"{op.name}:{b0}{b1}" for op, (b0, b1) in self._op_to_bits_sorted()
        )

    def _op_to_bits_sorted(self):
        return sorted(self._op_to_bits.items(), key=lambda item: item[0].name)

    def __eq__(self, other):
        return isinstance(other, BitMapping) and self._op_to_bits == other._op_to_bits

    def __hash__(self):
        return hash(tuple((op.name, bits) for op, bits in self._op_to_bits_sorted()))

    def __repr__(self):
        return f"BitMapping({self.to_text()!r})"


def bell_apply(state: BellLabel, op: EncodeOp, side: Side = Side.TRAVEL) -> BellLabel:
    """Label of the pair after ``op`` acts on one of its qubits, phase discarded."""
    return BellLabel.from_frame(state.x ^ op.x, state.z ^ op.z)


def apply_op(state: PairState, op: EncodeOp, side: Side = Side.TRAVEL) -> PairState:
    """
    Apply an encoding operation to either kind of pair state.

    On a Z-collapsed pair the X component flips the acted-on bit and the Z
    component is only a phase.
    """
    if isinstance(state, Pure):
        return Pure(bell_apply(state.label, op, side))
    if not op.x:
        return state
    if side is Side.TRAVEL:
        return ZCollapsed(state.home_bit, state.travel_bit ^ 1)
    return ZCollapsed(state.home_bit ^ 1, state.travel_bit)


def bell_measure(state: PairState, rng: np.random.Generator) -> BellLabel:
    """
    Bell-basis measurement.

    A pure label measures to itself. A product |h t> has amplitude 1/sqrt(2) on
    the two Bell states of its parity class, so the outcome is a fair coin
    between them.
    """
    if isinstance(state, Pure):
        return state.label
    x = state.home_bit ^ state.travel_bit
    return BellLabel.from_frame(x, int(rng.integers(2)))


def decode_op(initial: BellLabel, measured: BellLabel) -> EncodeOp:
    return EncodeOp.from_frame(initial.x ^ measured.x, initial.z ^ measured.z)


def z_measure_travel(
    state: PairState, rng: np.random.Generator
) -> Tuple[int, PairState]:
    """
    Computational-basis measurement of the travel qubit.

    Every Bell state has a maximally mixed marginal, so the outcome is uniform;
    the home qubit collapses anti-correlated for Psi labels and correlated for
    Phi labels. Measuring a collapsed pair again returns the stored bit.
    """
    if isinstance(state, ZCollapsed):
        return state.travel_bit, state
    travel_bit = int(rng.integers(2))
    home_bit = travel_bit ^ state.label.x
    return travel_bit, ZCollapsed(home_bit, travel_bit)
