"""Decoy photons, interleaving, intercept-resend eavesdropping and checking.

Both channel crossings (TP to players, players back to TP) use this module
unchanged. A channel carries a list of slots, each either a
:class:`DecoyPhoton` or a :class:`PairHalf` referring to one half of an EPR
pair whose joint state lives in the protocol ledger.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .bell import BellIndex, PauliCode, Side, bell_distribution, bell_vector
from .errors import InputError

DEFAULT_DECOY_THRESHOLD = 0.05


class Basis(str, enum.Enum):
    Z = "Z"
    X = "X"


@dataclass(frozen=True)
class DecoyPhoton:
    """A single qubit in ``|0>, |1>`` (basis Z) or ``|+>, |->`` (basis X)."""

    basis: Basis
    bit: int

    def __str__(self) -> str:
        return f"{self.basis.value}{self.bit}"


@dataclass(frozen=True)
class PairHalf:
    pair: int
    side: Side


Slot = Union[DecoyPhoton, PairHalf]


@dataclass(frozen=True)
class TransmissionReport:
    decoy_count: int
    error_count: int
    error_rate: float
    aborted: bool

    def to_dict(self) -> dict:
        return {
            "decoy_count": self.decoy_count,
            "error_count": self.error_count,
            "error_rate": self.error_rate,
            "aborted": self.aborted,
        }


@dataclass(frozen=True)
class EveModel:
    """Channel eavesdropper.

    ``channels`` names the player links tapped ("B", "C") and ``trips`` the
    crossings ("forward", "return"). On a tapped link every slot is
    intercepted, since decoy positions are hidden from Eve.
    """

    kind: str = "none"
    channels: frozenset = frozenset({"B", "C"})
    trips: frozenset = frozenset({"forward", "return"})

    def __post_init__(self) -> None:
        if self.kind not in ("none", "intercept-resend"):
            raise InputError(f"unknown eavesdropper kind {self.kind!r}")
        object.__setattr__(self, "channels", frozenset(self.channels))
        object.__setattr__(self, "trips", frozenset(self.trips))
        if not self.channels <= {"B", "C"}:
            raise InputError(f"unknown channels {sorted(self.channels)}")
        if not self.trips <= {"forward", "return"}:
            raise InputError(f"unknown trips {sorted(self.trips)}")

    def taps(self, channel: str, trip: str) -> bool:
        return self.kind != "none" and channel in self.channels and trip in self.trips


NO_EVE = EveModel()


def prepare_decoys(count: int, rng: np.random.Generator) -> list[DecoyPhoton]:
    if count < 0:
        raise InputError("decoy count must be non-negative")
    raw = rng.integers(0, 2, size=(count, 2))
    return [DecoyPhoton(Basis.Z if b == 0 else Basis.X, int(v)) for b, v in raw]


def interleave_decoys(
    payload_length: int, decoys: Sequence[DecoyPhoton], rng: np.random.Generator
) -> tuple[list[int], int]:
    """Choose where decoys go in the combined sequence.

    Returns the sorted decoy positions and the combined length.
    """
    total = payload_length + len(decoys)
    positions = rng.choice(total, size=len(decoys), replace=False) if decoys else []
    return sorted(int(p) for p in positions), total


def build_sequence(
    payload: Sequence[Slot], decoys: Sequence[DecoyPhoton], positions: Sequence[int]
) -> list[Slot]:
    total = len(payload) + len(decoys)
    if len(positions) != len(decoys):
        raise InputError("one position is needed per decoy")
    slots: list[Optional[Slot]] = [None] * total
    for pos, photon in zip(positions, decoys):
        slots[pos] = photon
    it = iter(payload)
    for i in range(total):
        if slots[i] is None:
            slots[i] = next(it)
    return slots  # type: ignore[return-value]


def strip_decoys(sequence: Sequence[Slot], positions: Sequence[int]) -> tuple[list[Slot], list[Slot]]:
    """Split a combined sequence into (payload in order, decoy slots in order)."""
    marked = set(positions)
    payload = [s for i, s in enumerate(sequence) if i not in marked]
    decoys = [sequence[i] for i in sorted(marked)]
    return payload, decoys


def measure_decoy(photon: DecoyPhoton, basis: Basis, rng: Optional[np.random.Generator]) -> int:
    if photon.basis == basis:
        return photon.bit
    if rng is None:
        raise InputError("a generator is required to measure in a conjugate basis")
    return int(rng.integers(0, 2))


def eve_intercept_resend(
    sequence: Sequence[Slot],
    rng: np.random.Generator,
    bases: Optional[Sequence[Basis]] = None,
) -> tuple[list[Slot], dict[int, PauliCode]]:
    """Measure-and-resend every slot in a uniformly random basis.

    Decoys are replaced by Eve's resent eigenstate. For a pair half, a Z
    measurement randomises the pair's phase bit and an X measurement its
    flip bit; the returned mapping holds the accumulated disturbance per
    pair, to be XORed into the pair state.
    """
    if bases is not None and len(bases) != len(sequence):
        raise InputError("one Eve basis is needed per slot")
    draws = rng.integers(0, 2, size=(len(sequence), 2))
    out: list[Slot] = []
    disturbance: dict[int, PauliCode] = {}
    for i, slot in enumerate(sequence):
        basis = bases[i] if bases is not None else (Basis.Z if draws[i, 0] == 0 else Basis.X)
        coin = int(draws[i, 1])
        if isinstance(slot, DecoyPhoton):
            result = slot.bit if slot.basis == basis else coin
            out.append(DecoyPhoton(basis, result))
        else:
            flip = PauliCode.from_bits(0, coin) if basis == Basis.Z else PauliCode.from_bits(coin, 0)
            prev = disturbance.get(slot.pair, PauliCode.I)
            disturbance[slot.pair] = PauliCode(int(prev) ^ int(flip))
            out.append(slot)
    return out, disturbance


def verify_decoys(
    received: Sequence[DecoyPhoton],
    prepared: Sequence[DecoyPhoton],
    threshold: float = DEFAULT_DECOY_THRESHOLD,
    rng: Optional[np.random.Generator] = None,
) -> TransmissionReport:
    """Measure each received decoy in its preparation basis and tally errors.

    ``rng`` resolves measurements of photons Eve resent in the other basis.
    An empty check reports an error rate of 0 and never aborts.
    """
    if len(received) != len(prepared):
        raise InputError(f"received {len(received)} decoys but prepared {len(prepared)}")
    errors = sum(
        measure_decoy(r, p.basis, rng) != p.bit for r, p in zip(received, prepared)
    )
    rate = errors / len(prepared) if prepared else 0.0
    return TransmissionReport(len(prepared), errors, rate, rate > threshold)


def payload_disturbance_distribution(state: BellIndex, basis: Basis) -> np.ndarray:
    """Bell-measurement distribution after Eve measures qubit B of ``state``.

    Dense route: project onto each eigenvector of ``basis``, resend it, and
    decompose the collapsed two-qubit state in the Bell basis.
    """
    vec = bell_vector(state).reshape(2, 2)
    if basis == Basis.Z:
        eig = np.eye(2, dtype=complex)
    else:
        eig = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0)
    probs = np.zeros(4)
    for e in eig:
        # amplitude of qubit C conditioned on qubit B found in state e
        cond = e.conj() @ vec
        weight = float(np.vdot(cond, cond).real)
        if weight == 0.0:
            continue
        post = np.kron(e, cond / np.sqrt(weight))
        probs += weight * bell_distribution(post)
    return probs


def symbolic_disturbance_distribution(state: BellIndex, basis: Basis) -> np.ndarray:
    flip = PauliCode.Z if basis == Basis.Z else PauliCode.X
    probs = np.zeros(4)
    probs[int(state)] += 0.5
    probs[int(state) ^ int(flip)] += 0.5
    return probs
