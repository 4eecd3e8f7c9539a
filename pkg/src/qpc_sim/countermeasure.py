"""Masking of sampling pairs, and the verification rule masking requires.

Bob applies a secret Pauli code to his half of each sampling pair (Charlie
applies identity; if both applied the same code the masks would cancel).
The TP's Bell-state counts then move even when the players' inputs are
equal, so a count change no longer proves the inputs differ.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .bell import BellIndex, PauliCode, Side, pauli_action
from .errors import InputError
from .ledger import PairLedger, Role, SharedSecret, tp_inconsistency_rate


@dataclass(frozen=True)
class MaskSchedule:
    codes: tuple[PauliCode, ...]

    def __len__(self) -> int:
        return len(self.codes)

    def __getitem__(self, j: int) -> PauliCode:
        return self.codes[j]


def derive_masks(secret: SharedSecret, k: int) -> MaskSchedule:
    if k < 0:
        raise InputError("number of sampling pairs must be non-negative")
    return MaskSchedule(tuple(secret.mask_codes(k)))


def apply_masks(ledger: list[PairLedger], schedule: MaskSchedule) -> list[PairLedger]:
    """Mask sampling pairs in original order; mutates and returns ``ledger``."""
    sampling = [entry for entry in ledger if entry.role == Role.SAMPLING]
    if len(sampling) != len(schedule):
        raise InputError(
            f"mask schedule has {len(schedule)} codes for {len(sampling)} sampling pairs"
        )
    for entry, code in zip(sampling, schedule.codes):
        entry.mask = code
        entry.current = pauli_action(code, Side.B, entry.current)
    return ledger


def adjusted_verify_tp(
    published: Sequence[BellIndex],
    announcement: Sequence[tuple[int, BellIndex]],
    schedule: MaskSchedule,
    positions: Sequence[int],
) -> float:
    """Inconsistency rate against mask-shifted expectations."""
    return tp_inconsistency_rate(published, announcement, positions, schedule.codes)
