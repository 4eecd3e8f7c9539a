"""Per-pair bookkeeping and the players' shared secret."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .bell import BellIndex, PauliCode, Side, pauli_action
from .errors import InputError

_PERMUTATION_STREAM = 0
_MASK_STREAM = 1


class Role(str, enum.Enum):
    ENCODED = "encoded"
    SAMPLING = "sampling"


@dataclass
class PairLedger:
    """Lifecycle of one EPR pair.

    ``current`` is the simulator's ground truth for the pair's joint state;
    it is never handed to a party directly.
    """

    original_index: int
    initial: BellIndex
    role: Role
    current: BellIndex
    code_b: Optional[PauliCode] = None
    code_c: Optional[PauliCode] = None
    mask: Optional[PauliCode] = None
    permuted_position: Optional[int] = None
    measured: Optional[BellIndex] = None

    def to_dict(self) -> dict:
        def opt(v):
            return None if v is None else str(v)

        return {
            "original_index": self.original_index,
            "initial": str(self.initial),
            "role": self.role.value,
            "code_b": opt(self.code_b),
            "code_c": opt(self.code_c),
            "mask": opt(self.mask),
            "permuted_position": self.permuted_position,
            "measured": opt(self.measured),
        }


@dataclass(frozen=True)
class SharedSecret:
    """Seed material held by Bob and Charlie only.

    Stands in for the QKD-established value that fixes the insertion
    permutation and, in hardened runs, the sampling masks.
    """

    seed: int

    def _rng(self, stream: int) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(stream,)))

    def permutation(self, n: int) -> list[int]:
        """``result[i]`` is the position in the returned sequence of pair ``i``."""
        return [int(p) for p in self._rng(_PERMUTATION_STREAM).permutation(n)]

    def mask_codes(self, k: int) -> list[PauliCode]:
        return [PauliCode(int(c)) for c in self._rng(_MASK_STREAM).integers(0, 4, size=k)]


def invert_permutation(positions: Sequence[int]) -> list[int]:
    inverse = [-1] * len(positions)
    for original, pos in enumerate(positions):
        inverse[pos] = original
    if -1 in inverse:
        raise InputError("permutation is not a bijection")
    return inverse


def tp_inconsistency_rate(
    published: Sequence[BellIndex],
    announcement: Sequence[tuple[int, BellIndex]],
    positions: Sequence[int],
    masks: Optional[Sequence[PauliCode]] = None,
) -> float:
    """Fraction of sampling pairs whose published outcome disagrees with
    what the players expect from the TP's earlier announcement.

    ``published`` is in returned-sequence order, ``positions`` maps original
    index to that order, and ``masks`` (aligned with ``announcement``) shifts
    the expectation for hardened runs.
    """
    if not announcement:
        return 0.0
    if masks is not None and len(masks) != len(announcement):
        raise InputError("one mask is needed per announced sampling pair")
    bad = 0
    for j, (index, announced) in enumerate(announcement):
        expected = announced if masks is None else pauli_action(masks[j], Side.B, announced)
        if published[positions[index]] != expected:
            bad += 1
    return bad / len(announcement)
