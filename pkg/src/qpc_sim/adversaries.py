"""Third-party adversaries.

The counting TP follows the protocol to the letter but tallies how often
each Bell state occurs among the pairs it prepared and among the outcomes it
measured. Equal player inputs cancel on every encoded pair and unmasked
sampling pairs never change, so any difference between the two tallies
proves the inputs differ.

The lying TP publishes false outcomes and exists to exercise the players'
cheating check.
"""
from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np

from .bell import BellIndex, count_states, split_blocks
from .errors import InputError

UNEQUAL_CERTAIN = "UnequalCertain"
INCONCLUSIVE = "Inconclusive"

EXHAUSTIVE_MAX_M = 3
EXHAUSTIVE_MAX_CASES = 10**6

Delta = tuple[int, int, int, int]
DigestPolicy = Union[str, tuple[str, str]]


class CountsVector(NamedTuple):
    """Occurrences of |phi+>, |phi->, |psi+>, |psi-> (n1..n4)."""

    n1: int
    n2: int
    n3: int
    n4: int

    @classmethod
    def of(cls, states: Sequence[BellIndex]) -> "CountsVector":
        return cls(*count_states(states))

    @property
    def total(self) -> int:
        return self.n1 + self.n2 + self.n3 + self.n4

    def __sub__(self, other: "CountsVector") -> "CountsVector":  # type: ignore[override]
        return CountsVector(*(a - b for a, b in zip(self, other)))


@dataclass(frozen=True)
class AttackVerdict:
    kind: str
    witness: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if (self.kind == UNEQUAL_CERTAIN) != bool(self.witness):
            raise InputError("UnequalCertain requires a non-empty witness and vice versa")


def counting_observe(
    initial: Sequence[BellIndex], measured: Sequence[BellIndex]
) -> tuple[CountsVector, CountsVector]:
    if len(initial) != len(measured):
        raise InputError(f"{len(initial)} initial states but {len(measured)} outcomes")
    return CountsVector.of(initial), CountsVector.of(measured)


def counting_verdict(initial: CountsVector, measured: CountsVector) -> AttackVerdict:
    """Witness indices are 1-based, matching n1..n4."""
    if sum(initial) != sum(measured):
        raise InputError(f"count totals differ: {sum(initial)} vs {sum(measured)}")
    witness = tuple(i + 1 for i, (a, b) in enumerate(zip(initial, measured)) if a != b)
    return AttackVerdict(UNEQUAL_CERTAIN if witness else INCONCLUSIVE, witness)


def lying_publish(
    outcomes: Sequence[BellIndex], q: float, rng: np.random.Generator
) -> list[BellIndex]:
    """Replace each outcome, with probability ``q``, by a uniformly chosen
    different Bell state."""
    if not 0.0 <= q <= 1.0:
        raise InputError(f"tamper fraction must lie in [0, 1], got {q}")
    coins = rng.random(len(outcomes))
    shifts = rng.integers(1, 4, size=len(outcomes))
    return [
        BellIndex((int(s) + int(shift)) % 4) if coin < q else BellIndex(s)
        for s, coin, shift in zip(outcomes, coins, shifts)
    ]


# -- per-run TP agent -------------------------------------------------------

@dataclass(frozen=True)
class TpStrategy:
    """How the third party behaves.

    ``kind`` is "honest", "counting" or "lying". ``q`` is the lying TP's
    tamper fraction. ``restricted`` makes the counting TP compare only the
    encoded pairs, subtracting the sampling states it announced from the
    measured tally.
    """

    kind: str = "honest"
    q: float = 1.0
    restricted: bool = False

    def __post_init__(self) -> None:
        if self.kind not in ("honest", "counting", "lying"):
            raise InputError(f"unknown TP strategy {self.kind!r}")
        if not 0.0 <= self.q <= 1.0:
            raise InputError(f"tamper fraction must lie in [0, 1], got {self.q}")

    @property
    def label(self) -> str:
        if self.kind == "lying":
            return f"lying(q={self.q!r})"
        if self.kind == "counting" and self.restricted:
            return "counting(restricted)"
        return self.kind


HONEST_TP = TpStrategy()


@dataclass
class AdversaryReport:
    strategy: str
    counts_initial: Optional[CountsVector] = None
    counts_measured: Optional[CountsVector] = None
    verdict: Optional[str] = None
    witness: tuple[int, ...] = ()

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "counts_initial": None if self.counts_initial is None else list(self.counts_initial),
            "counts_measured": None if self.counts_measured is None else list(self.counts_measured),
            "verdict": self.verdict,
            "witness": list(self.witness),
        }


@dataclass
class TpAgent:
    """Hooks the protocol engine calls at the TP's decision points."""

    strategy: TpStrategy
    rng: np.random.Generator
    _initial: list[BellIndex] = field(default_factory=list)
    _sampling: list[int] = field(default_factory=list)
    _measured: list[BellIndex] = field(default_factory=list)

    def on_prepare(self, initial: Sequence[BellIndex], sampling_indices: Sequence[int]) -> None:
        self._initial = list(initial)
        self._sampling = list(sampling_indices)

    def on_measure(self, outcomes: Sequence[BellIndex]) -> None:
        self._measured = list(outcomes)

    def publish(self, outcomes: Sequence[BellIndex]) -> list[BellIndex]:
        if self.strategy.kind == "lying":
            return lying_publish(outcomes, self.strategy.q, self.rng)
        return list(outcomes)

    def finish(self) -> AdversaryReport:
        report = AdversaryReport(self.strategy.label)
        if self.strategy.kind != "counting" or not self._measured:
            return report
        init_counts, meas_counts = counting_observe(self._initial, self._measured)
        if self.strategy.restricted:
            sampled = CountsVector.of([self._initial[i] for i in self._sampling])
            init_counts, meas_counts = init_counts - sampled, meas_counts - sampled
        verdict = counting_verdict(init_counts, meas_counts)
        report.counts_initial = init_counts
        report.counts_measured = meas_counts
        report.verdict = verdict.kind
        report.witness = verdict.witness
        return report


# -- attack power -------------------------------------------------------------

_UNIT = [tuple(int(i == j) for j in range(4)) for i in range(4)]


def _delta(a: int, b: int) -> Delta:
    return tuple(x - y for x, y in zip(_UNIT[a], _UNIT[b]))  # type: ignore[return-value]


def _add(u: Delta, v: Delta) -> Delta:
    return tuple(x + y for x, y in zip(u, v))  # type: ignore[return-value]


def _convolve(p: dict, q: dict) -> dict:
    out: dict = {}
    for du, pu in p.items():
        for dv, pv in q.items():
            key = _add(du, dv)
            out[key] = out.get(key, 0) + pu * pv
    return out


def _sampling_delta_distribution(k: int, hardened: bool) -> dict[Delta, Fraction]:
    """Exact distribution of (initial - measured) counts over k sampling pairs.

    Stratified by counts: a multinomial over the per-pair (initial,
    measured) types rather than an enumeration of orderings.
    """
    if hardened:
        types = [(s, s ^ mask) for s in range(4) for mask in range(4)]
    else:
        types = [(s, s) for s in range(4)]
    p_type = Fraction(1, len(types))
    dist: dict[Delta, Fraction] = {}
    for combo in _compositions(k, len(types)):
        weight = Fraction(factorial(k))
        total: Delta = (0, 0, 0, 0)
        for (a, b), c in zip(types, combo):
            weight = weight / factorial(c) * p_type**c
            if c:
                total = _add(total, tuple(c * x for x in _delta(a, b)))  # type: ignore[arg-type]
        dist[total] = dist.get(total, Fraction(0)) + weight
    return dist


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _digest_xors(m: int, policy: DigestPolicy) -> Counter:
    """Multiplicity of each per-block XOR pattern under a digest policy."""
    if isinstance(policy, tuple):
        a, b = (split_blocks(d) for d in policy)
        if len(a) != m or len(b) != m:
            raise InputError(f"digests must be {2 * m} bits long")
        return Counter({tuple(int(x) ^ int(y) for x, y in zip(a, b)): 1})
    if policy == "equal":
        return Counter({(0,) * m: 4**m})
    if policy == "unequal":
        if m == 0:
            raise InputError("no unequal digests exist for m = 0")
        return Counter({d: 4**m for d in itertools.product(range(4), repeat=m) if any(d)})
    raise InputError(f"unknown digest policy {policy!r}")


def enumerate_attack_power(
    m: int, k: int, digests: DigestPolicy = "unequal", hardened: bool = False
) -> Fraction:
    """Exact probability that the counting TP reports UnequalCertain.

    Digest pairs are drawn uniformly from ``digests`` ("unequal", "equal" or
    an explicit pair of bit strings), every pair's initial state uniformly,
    and in hardened runs every mask uniformly. Encoded pairs are enumerated
    state by state; sampling pairs are folded in by count stratification.
    """
    if m < 0 or k < 0:
        raise InputError("m and k must be non-negative")
    if m > EXHAUSTIVE_MAX_M:
        raise InputError(f"exhaustive mode supports m <= {EXHAUSTIVE_MAX_M}")
    xors = _digest_xors(m, digests)
    if len(xors) * 4**m > EXHAUSTIVE_MAX_CASES:
        raise InputError("exhaustive enumeration exceeds the case bound")
    sampling = _sampling_delta_distribution(k, hardened)
    total_weight = sum(xors.values())
    p_inconclusive = Fraction(0)
    for d, mult in xors.items():
        hits = Fraction(0)
        for encoded in itertools.product(range(4), repeat=m):
            delta: Delta = (0, 0, 0, 0)
            for e, di in zip(encoded, d):
                delta = _add(delta, _delta(e, e ^ di))
            # counts match iff the sampling delta exactly cancels this one
            hits += sampling.get(tuple(-x for x in delta), Fraction(0))  # type: ignore[arg-type]
        p_inconclusive += Fraction(mult, total_weight) * hits / 4**m
    return 1 - p_inconclusive


def montecarlo_attack_power(
    m: int,
    k: int,
    trials: int,
    rng: np.random.Generator,
    digests: DigestPolicy = "unequal",
    hardened: bool = False,
) -> float:
    if trials < 1:
        raise InputError("trials must be positive")
    n = m + k
    if isinstance(digests, tuple):
        xa, xb = (np.array([int(c) for c in split_blocks(d)], dtype=np.int64) for d in digests)
        if len(xa) != m or len(xb) != m:
            raise InputError(f"digests must be {2 * m} bits long")
        xor = np.broadcast_to(xa ^ xb, (trials, m))
    elif digests == "equal":
        xor = np.zeros((trials, m), dtype=np.int64)
    elif digests == "unequal":
        if m == 0:
            raise InputError("no unequal digests exist for m = 0")
        a = rng.integers(0, 4, size=(trials, m))
        b = rng.integers(0, 4, size=(trials, m))
        same = (a == b).all(axis=1)
        while same.any():
            b[same] = rng.integers(0, 4, size=(int(same.sum()), m))
            same = (a == b).all(axis=1)
        xor = a ^ b
    else:
        raise InputError(f"unknown digest policy {digests!r}")
    initial = rng.integers(0, 4, size=(trials, n))
    measured = initial.copy()
    measured[:, :m] ^= xor
    if hardened:
        measured[:, m:] ^= rng.integers(0, 4, size=(trials, k))
    differs = np.zeros(trials, dtype=bool)
    for v in range(4):
        differs |= (initial == v).sum(axis=1) != (measured == v).sum(axis=1)
    return float(differs.mean())


def attack_power(
    m: int,
    k: int,
    mode: str = "exhaustive",
    trials: int = 100_000,
    rng: Optional[np.random.Generator] = None,
    digests: DigestPolicy = "unequal",
    hardened: bool = False,
) -> float:
    """Fraction of runs on which the counting TP declares the inputs unequal.

    With the default ``digests="unequal"`` this is the attack's detection
    rate; with ``"equal"`` it is its false-positive rate.
    """
    if mode == "exhaustive":
        return float(enumerate_attack_power(m, k, digests, hardened))
    if mode == "montecarlo":
        if rng is None:
            raise InputError("Monte Carlo mode needs a seeded generator")
        return montecarlo_attack_power(m, k, trials, rng, digests, hardened)
    raise InputError(f"unknown mode {mode!r}")


# -- residual leakage under masking -------------------------------------------

@dataclass(frozen=True)
class LeakageSummary:
    """How well the TP-observable count delta separates equal from unequal
    inputs.

    ``total_variation`` is the distance between the two delta distributions;
    ``certain_unequal`` is the probability, given unequal inputs, of a delta
    that never occurs with equal inputs (a remaining certain inference).
    """

    total_variation: Fraction
    certain_unequal: Fraction


def count_delta_distribution(
    m: int, k: int, digests: str, hardened: bool
) -> dict[Delta, Fraction]:
    if m > 4:
        raise InputError("delta distributions are enumerated for m <= 4 only")
    xors = _digest_xors(m, digests)
    total_weight = sum(xors.values())
    sampling = _sampling_delta_distribution(k, hardened)
    out: dict[Delta, Fraction] = {}
    for d, mult in xors.items():
        dist: dict = {(0, 0, 0, 0): Fraction(1)}
        for di in d:
            block = {}
            for e in range(4):
                key = _delta(e, e ^ di)
                block[key] = block.get(key, Fraction(0)) + Fraction(1, 4)
            dist = _convolve(dist, block)
        for key, p in _convolve(dist, sampling).items():
            out[key] = out.get(key, Fraction(0)) + p * Fraction(mult, total_weight)
    return out


def residual_leakage(m: int, k: int, hardened: bool = True) -> LeakageSummary:
    equal = count_delta_distribution(m, k, "equal", hardened)
    unequal = count_delta_distribution(m, k, "unequal", hardened)
    keys = set(equal) | set(unequal)
    tv = sum(abs(equal.get(x, 0) - unequal.get(x, 0)) for x in keys) / 2
    certain = sum(p for x, p in unequal.items() if equal.get(x, 0) == 0)
    return LeakageSummary(Fraction(tv), Fraction(certain))
