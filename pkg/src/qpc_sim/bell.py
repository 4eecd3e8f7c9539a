"""Bell states under local two-bit Pauli encodings.

A Bell state is tracked as two bits: the bit-flip component ``x`` and the
phase-flip component ``z``::

    (0, 0) = |phi+>    (0, 1) = |phi->    (1, 0) = |psi+>    (1, 1) = |psi->

A Pauli code ``(x, z)`` applied to either half of a pair XORs its bits into
the state, global phase dropped. The dense 4-amplitude routines at the
bottom of the module exist to cross-check that symbolic rule.
"""
from __future__ import annotations

import enum
from typing import Iterable, Sequence

import numpy as np

from .errors import ConsistencyError, InputError

ORACLE_TOL = 1e-12
_MATCH_TOL = 1e-9


class BellIndex(enum.IntEnum):
    """One of the four Bell states; the integer value is ``2*x + z``."""

    PHI_PLUS = 0
    PHI_MINUS = 1
    PSI_PLUS = 2
    PSI_MINUS = 3

    @classmethod
    def from_bits(cls, x_bit: int, z_bit: int) -> "BellIndex":
        return cls(((x_bit & 1) << 1) | (z_bit & 1))

    @classmethod
    def parse(cls, label: str) -> "BellIndex":
        try:
            return _BELL_BY_LABEL[label.strip().lower()]
        except KeyError:
            raise InputError(f"unknown Bell state label {label!r}") from None

    @property
    def x_bit(self) -> int:
        return self.value >> 1

    @property
    def z_bit(self) -> int:
        return self.value & 1

    @property
    def label(self) -> str:
        return _BELL_LABELS[self.value]

    def __str__(self) -> str:
        return self.label


_BELL_LABELS = ("phi+", "phi-", "psi+", "psi-")
_BELL_BY_LABEL = {name: BellIndex(i) for i, name in enumerate(_BELL_LABELS)}


class PauliCode(enum.IntEnum):
    """Two-bit encoding operation; the integer value is ``2*x + z``.

    ``I`` encodes "00", ``Z`` (sigma_z) "01", ``X`` (sigma_x) "10" and
    ``Y`` (i*sigma_y) "11".
    """

    I = 0
    Z = 1
    X = 2
    Y = 3

    @classmethod
    def from_bits(cls, x: int, z: int) -> "PauliCode":
        return cls(((x & 1) << 1) | (z & 1))

    @property
    def x(self) -> int:
        return self.value >> 1

    @property
    def z(self) -> int:
        return self.value & 1

    @property
    def bits(self) -> str:
        return f"{self.x}{self.z}"

    def __str__(self) -> str:
        return self.bits


class Side(str, enum.Enum):
    """Which half of an EPR pair an operation touches."""

    B = "B"
    C = "C"


def encode_bits(block: str) -> PauliCode:
    """Map a two-character bit string ``"c1c2"`` to ``PauliCode(x=c1, z=c2)``."""
    if not isinstance(block, str) or len(block) != 2 or set(block) - {"0", "1"}:
        raise InputError(f"encoding block must be two bits, got {block!r}")
    return PauliCode.from_bits(int(block[0]), int(block[1]))


def split_blocks(digest: str) -> list[PauliCode]:
    """Split an even-length bit string into consecutive two-bit codes."""
    if len(digest) % 2:
        raise InputError(f"digest length {len(digest)} is odd")
    return [encode_bits(digest[i:i + 2]) for i in range(0, len(digest), 2)]


def pauli_action(code: PauliCode, side: Side, state: BellIndex) -> BellIndex:
    # side is accepted for symmetry with the physical picture; up to global
    # phase the result is the same for either half
    Side(side)
    return BellIndex(int(state) ^ int(code))


def combined_action(code_b: PauliCode, code_c: PauliCode, state: BellIndex) -> BellIndex:
    return BellIndex(int(state) ^ int(code_b) ^ int(code_c))


def recover_xor(initial: BellIndex, measured: BellIndex) -> PauliCode:
    """Component-wise XOR of two Bell states, read back as a Pauli code."""
    return PauliCode(int(initial) ^ int(measured))


def xor_codes(a: PauliCode, b: PauliCode) -> PauliCode:
    return PauliCode(int(a) ^ int(b))


def count_states(states: Iterable[BellIndex]) -> tuple[int, int, int, int]:
    counts = [0, 0, 0, 0]
    for s in states:
        counts[int(s)] += 1
    return tuple(counts)  # type: ignore[return-value]


# -- dense verification oracle ------------------------------------------------

_S = 1.0 / np.sqrt(2.0)

# computational basis order |00>, |01>, |10>, |11>; qubit B is the left factor
_BELL_VECTORS = np.array(
    [
        [_S, 0, 0, _S],
        [_S, 0, 0, -_S],
        [0, _S, _S, 0],
        [0, _S, -_S, 0],
    ],
    dtype=complex,
)

_PAULI_MATRICES = {
    PauliCode.I: np.array([[1, 0], [0, 1]], dtype=complex),
    PauliCode.Z: np.array([[1, 0], [0, -1]], dtype=complex),
    PauliCode.X: np.array([[0, 1], [1, 0]], dtype=complex),
    # i * sigma_y
    PauliCode.Y: np.array([[0, 1], [-1, 0]], dtype=complex),
}


def bell_vector(state: BellIndex) -> np.ndarray:
    return _BELL_VECTORS[int(state)].copy()


def pauli_matrix(code: PauliCode) -> np.ndarray:
    return _PAULI_MATRICES[PauliCode(code)].copy()


def bell_distribution(amplitudes: np.ndarray) -> np.ndarray:
    """Bell-basis measurement probabilities of a normalised 4-amplitude state."""
    overlaps = _BELL_VECTORS.conj() @ amplitudes
    return np.abs(overlaps) ** 2


def dense_oracle_apply(
    code_b: PauliCode, code_c: PauliCode, state: BellIndex
) -> tuple[BellIndex, float]:
    """Apply ``code_b (x) code_c`` to the dense vector of ``state``.

    Returns the Bell state whose vector has unit overlap magnitude with the
    result, together with that magnitude.

    Raises
    ------
    ConsistencyError
        If no Bell vector overlaps the result with magnitude >= 1 - 1e-9, or
        the result has drifted from unit norm by more than 1e-12.
    """
    op = np.kron(_PAULI_MATRICES[PauliCode(code_b)], _PAULI_MATRICES[PauliCode(code_c)])
    out = op @ _BELL_VECTORS[int(state)]
    if abs(np.linalg.norm(out) - 1.0) > ORACLE_TOL:
        raise ConsistencyError("dense oracle lost normalisation")
    magnitudes = np.abs(_BELL_VECTORS.conj() @ out)
    best = int(np.argmax(magnitudes))
    if magnitudes[best] < 1.0 - _MATCH_TOL:
        raise ConsistencyError(f"no Bell state matches result {out!r}")
    return BellIndex(best), float(magnitudes[best])


def format_states(states: Sequence[BellIndex]) -> str:
    return ",".join(BellIndex(s).label for s in states)


def parse_states(text: str) -> list[BellIndex]:
    return [BellIndex.parse(tok) for tok in text.split(",") if tok.strip()]
