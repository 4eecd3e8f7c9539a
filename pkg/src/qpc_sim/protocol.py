"""The two-party private comparison protocol with a third party (TP).

One :class:`ProtocolRun` executes the five steps in order:

1. agree on the Pauli encoding table;
2. TP prepares ``n`` EPR pairs and sends one half of each to Bob and
   Charlie, wrapped in decoy photons;
3. decoy check on the forward channels;
4. players encode their digests on the first ``m`` pairs, the TP announces
   the initial states of the ``k`` sampling pairs, and the players return
   all halves under a secret permutation, again wrapped in decoys;
5. decoy check on the return channels, TP Bell-measures and publishes,
   players check the sampling pairs and read off the comparison.

Channels are noiseless, so error correction and privacy amplification are
the identity. Every party-to-party message is logged to a
:class:`Transcript`.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np

from .adversaries import HONEST_TP, AdversaryReport, TpAgent, TpStrategy
from .bell import (
    BellIndex,
    PauliCode,
    Side,
    encode_bits,
    pauli_action,
    recover_xor,
    split_blocks,
)
from .countermeasure import MaskSchedule, adjusted_verify_tp, apply_masks, derive_masks
from .decoy import (
    DEFAULT_DECOY_THRESHOLD,
    NO_EVE,
    DecoyPhoton,
    EveModel,
    PairHalf,
    Slot,
    TransmissionReport,
    build_sequence,
    eve_intercept_resend,
    interleave_decoys,
    measure_decoy,
    prepare_decoys,
    strip_decoys,
    verify_decoys,
)
from .errors import ConsistencyError, InputError
from .ledger import PairLedger, Role, SharedSecret, invert_permutation, tp_inconsistency_rate

HASH_SCHEMES = ("identity", "toy-digest")

EQUAL = "Equal"
UNEQUAL = "Unequal"
ABORTED = "Aborted"

ABORT_DECOY_FORWARD = "decoy-forward"
ABORT_DECOY_RETURN = "decoy-return"
ABORT_TP_CHEATING = "tp-cheating"

TP, BOB, CHARLIE = "TP", "Bob", "Charlie"
PLAYERS = "Bob+Charlie"
ALL = "ALL"

# independent generator streams spawned from the run seed
_STREAM_TP, _STREAM_BOB, _STREAM_CHARLIE, _STREAM_EVE, _STREAM_SECRET, _STREAM_AGENT = range(6)

_MAX_SEED = 2**64 - 1


@dataclass(frozen=True)
class ProtocolConfig:
    """Run parameters. ``m`` pairs carry the digests, ``k`` are sampling pairs."""

    m: int = 4
    k: int = 4
    decoys_per_transmission: int = 8
    decoy_threshold: float = DEFAULT_DECOY_THRESHOLD
    tp_inconsistency_threshold: float = 0.0
    hash_scheme: str = "identity"
    hardened: bool = False
    seed: int = 0

    def __post_init__(self) -> None:
        if self.m < 1:
            raise InputError("at least one encoded pair is required (m >= 1)")
        if self.k < 1:
            raise InputError("at least one sampling pair is required (k >= 1)")
        if self.decoys_per_transmission < 0:
            raise InputError("decoys_per_transmission must be non-negative")
        for name in ("decoy_threshold", "tp_inconsistency_threshold"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InputError(f"{name} must lie in [0, 1], got {value}")
        if self.hash_scheme not in HASH_SCHEMES:
            raise InputError(f"unknown hash scheme {self.hash_scheme!r}")
        if not 0 <= self.seed <= _MAX_SEED:
            raise InputError("seed must be a 64-bit unsigned value")

    @property
    def n(self) -> int:
        return self.m + self.k

    @property
    def digest_bits(self) -> int:
        return 2 * self.m

    @classmethod
    def from_sizes(
        cls, n: Optional[int] = None, m: Optional[int] = None, k: Optional[int] = None, **kwargs
    ) -> "ProtocolConfig":
        """Build from any two (or all three, if consistent) of n, m, k."""
        if m is None:
            m = n - k if n is not None and k is not None else cls.m
        if k is None:
            k = n - m if n is not None else cls.k
        if n is not None and n != m + k:
            raise InputError(f"n={n} does not equal m+k={m + k}")
        return cls(m=m, k=k, **kwargs)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "k": self.k,
            "decoys_per_transmission": self.decoys_per_transmission,
            "decoy_threshold": self.decoy_threshold,
            "tp_inconsistency_threshold": self.tp_inconsistency_threshold,
            "hash_scheme": self.hash_scheme,
            "hardened": self.hardened,
            "seed": self.seed,
        }


def _check_bits(raw: str) -> None:
    if not isinstance(raw, str) or set(raw) - {"0", "1"}:
        raise InputError(f"input must be a binary string, got {raw!r}")


def _rotate_left(bits: str, r: int) -> str:
    r %= len(bits)
    return bits[r:] + bits[:r]


def hash_input(raw: str, scheme: str, m: int) -> str:
    """Digest a player's binary input to exactly ``2m`` bits.

    ``identity`` passes a ``2m``-bit input through. ``toy-digest`` prefixes
    the input with its length as 32 bits, zero-pads to a multiple of ``2m``,
    XOR-folds the chunks together, and rotates the result left by the input
    length. It is deterministic but has no cryptographic strength.
    """
    _check_bits(raw)
    width = 2 * m
    if scheme == "identity":
        if len(raw) != width:
            raise InputError(f"identity hash needs a {width}-bit input, got {len(raw)} bits")
        return raw
    if scheme == "toy-digest":
        stream = format(len(raw), "032b") + raw
        stream += "0" * (-len(stream) % width)
        acc = 0
        for i in range(0, len(stream), width):
            acc ^= int(stream[i:i + width], 2)
        return _rotate_left(format(acc, f"0{width}b"), len(raw))
    raise InputError(f"unknown hash scheme {scheme!r}")


@dataclass(frozen=True)
class PlayerInput:
    raw: str
    digest: str

    @classmethod
    def from_raw(cls, raw: str, config: ProtocolConfig) -> "PlayerInput":
        return cls(raw, hash_input(raw, config.hash_scheme, config.m))


# -- transcript ---------------------------------------------------------------

def payload_digest(payload: Any) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class TranscriptEntry:
    step: str
    sender: str
    receiver: str
    kind: str
    digest: str

    @property
    def tp_visible(self) -> bool:
        return TP in (self.sender, self.receiver) or self.receiver == ALL

    def line(self) -> str:
        return f"{self.step}|{self.sender}|{self.receiver}|{self.kind}|{self.digest}"


@dataclass
class Transcript:
    entries: list[TranscriptEntry] = field(default_factory=list)

    def log(self, step: str, sender: str, receiver: str, kind: str, payload: Any) -> None:
        self.entries.append(TranscriptEntry(step, sender, receiver, kind, payload_digest(payload)))

    def tp_view(self) -> list[TranscriptEntry]:
        return [e for e in self.entries if e.tp_visible]

    def to_text(self) -> str:
        return "".join(e.line() + "\n" for e in self.entries)

    @classmethod
    def from_text(cls, text: str) -> "Transcript":
        entries = []
        for line in text.splitlines():
            if line:
                entries.append(TranscriptEntry(*line.split("|")))
        return cls(entries)

    def __len__(self) -> int:
        return len(self.entries)


# -- outcome -----------------------------------------------------------------

@dataclass(frozen=True)
class ComparisonOutcome:
    status: str
    reason: Optional[str] = None
    per_block_xor: tuple[PauliCode, ...] = ()

    def __post_init__(self) -> None:
        if self.status == ABORTED:
            if self.reason is None or self.per_block_xor:
                raise InputError("aborted outcomes carry a reason and no blocks")
        elif (self.status == EQUAL) != all(c == PauliCode.I for c in self.per_block_xor):
            raise InputError("status disagrees with the per-block XOR")

    @classmethod
    def aborted(cls, reason: str) -> "ComparisonOutcome":
        return cls(ABORTED, reason)

    @property
    def label(self) -> str:
        return f"{ABORTED}({self.reason})" if self.status == ABORTED else self.status

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "reason": self.reason,
            "per_block_xor": [str(c) for c in self.per_block_xor],
        }


def _slot_label(slot: Slot) -> str:
    if isinstance(slot, DecoyPhoton):
        return str(slot)
    return f"{slot.side.value}:{slot.pair}"


@dataclass
class _Envelope:
    """A quantum sequence in flight plus the sender's private decoy record."""

    channel: str
    slots: list[Slot]
    positions: list[int]
    decoys: list[DecoyPhoton]


class _Abort(Exception):
    def __init__(self, reason: str) -> None:
        super().__init__(reason)
        self.reason = reason


class ProtocolRun:
    """State for a single execution.

    TP-private data lives in ``tp_*`` attributes, player-private data in
    ``players_*``; the ledger is the simulator's omniscient record and is
    only read by parties through the narrow accessors each step uses.
    """

    def __init__(
        self,
        config: ProtocolConfig,
        tp_strategy: TpStrategy = HONEST_TP,
        eve: EveModel = NO_EVE,
        shared_secret: Optional[SharedSecret] = None,
    ) -> None:
        self.config = config
        self.eve = eve
        seq = lambda stream: np.random.SeedSequence(config.seed, spawn_key=(stream,))  # noqa: E731
        self.tp_rng = np.random.default_rng(seq(_STREAM_TP))
        self.bob_rng = np.random.default_rng(seq(_STREAM_BOB))
        self.charlie_rng = np.random.default_rng(seq(_STREAM_CHARLIE))
        self.eve_rng = np.random.default_rng(seq(_STREAM_EVE))
        if shared_secret is None:
            shared_secret = SharedSecret(int(seq(_STREAM_SECRET).generate_state(1, np.uint64)[0]))
        self.players_secret = shared_secret
        self.agent = TpAgent(tp_strategy, np.random.default_rng(seq(_STREAM_AGENT)))
        self.transcript = Transcript()
        self.ledger: list[PairLedger] = []
        self.forward_reports: dict[str, TransmissionReport] = {}
        self.return_reports: dict[str, TransmissionReport] = {}
        self.tp_inconsistency_rate: Optional[float] = None
        self.players_masks: Optional[MaskSchedule] = None
        self.players_positions: list[int] = []
        self.players_codes: dict[str, list[PauliCode]] = {}
        self.tp_initial: list[BellIndex] = []
        self.tp_outcomes: list[BellIndex] = []
        self.published: list[BellIndex] = []
        self.published_initial: list[BellIndex] = []
        self.announcement: list[tuple[int, BellIndex]] = []
        self._forward: dict[str, _Envelope] = {}
        self._return: dict[str, _Envelope] = {}

    # step (1)
    def step1_agree(self) -> dict[str, str]:
        table = {bits: PauliCode(encode_bits(bits)).name for bits in ("00", "01", "10", "11")}
        self.transcript.log("1", TP, PLAYERS, "encoding-table", table)
        return table

    # step (2)
    def step2_prepare(self, initial_states: Optional[Sequence[BellIndex]] = None) -> list[PairLedger]:
        cfg = self.config
        if initial_states is None:
            initial = [BellIndex(int(v)) for v in self.tp_rng.integers(0, 4, size=cfg.n)]
        else:
            if len(initial_states) != cfg.n:
                raise InputError(f"expected {cfg.n} initial states, got {len(initial_states)}")
            initial = [BellIndex(s) for s in initial_states]
        self.tp_initial = initial
        self.ledger = [
            PairLedger(i, s, Role.ENCODED if i < cfg.m else Role.SAMPLING, s)
            for i, s in enumerate(initial)
        ]
        self.agent.on_prepare(initial, list(range(cfg.m, cfg.n)))
        for channel, side, receiver in (("B", Side.B, BOB), ("C", Side.C, CHARLIE)):
            payload = [PairHalf(i, side) for i in range(cfg.n)]
            env = self._wrap(channel, payload, self.tp_rng)
            self.transcript.log("2", TP, receiver, f"quantum:T_{channel}", [_slot_label(s) for s in env.slots])
            self._forward[channel] = self._transmit(env, "forward")
        return self.ledger

    # step (3)
    def step3_check_forward(self) -> dict[str, TransmissionReport]:
        for channel, player, rng in (("B", BOB, self.bob_rng), ("C", CHARLIE, self.charlie_rng)):
            env = self._forward[channel]
            self.forward_reports[channel] = self._decoy_check(
                "3", env, announcer=TP, measurer=player, measurer_rng=rng
            )
        self._log_verdict("3", TP, self.forward_reports)
        if any(r.aborted for r in self.forward_reports.values()):
            raise _Abort(ABORT_DECOY_FORWARD)
        return self.forward_reports

    # step (4)
    def step4_encode_insert(self, digest_x: str, digest_y: str) -> list[tuple[int, BellIndex]]:
        cfg = self.config
        codes_b, codes_c = split_blocks(digest_x), split_blocks(digest_y)
        for codes in (codes_b, codes_c):
            if len(codes) != cfg.m:
                raise InputError(f"digests must be {cfg.digest_bits} bits long")
        self.players_codes = {"B": codes_b, "C": codes_c}
        for i in range(cfg.m):
            entry = self.ledger[i]
            entry.code_b, entry.code_c = codes_b[i], codes_c[i]
            entry.current = pauli_action(codes_b[i], Side.B, entry.current)
            entry.current = pauli_action(codes_c[i], Side.C, entry.current)
        if cfg.hardened:
            self.players_masks = derive_masks(self.players_secret, cfg.k)
            apply_masks(self.ledger, self.players_masks)

        self.announcement = [(i, self.tp_initial[i]) for i in range(cfg.m, cfg.n)]
        self.transcript.log(
            "4", TP, PLAYERS, "sampling-announce", [[i, str(s)] for i, s in self.announcement]
        )

        positions = self.players_secret.permutation(cfg.n)
        self.players_positions = positions
        for entry in self.ledger:
            entry.permuted_position = positions[entry.original_index]
        order = invert_permutation(positions)
        for channel, side, sender, rng in (
            ("B", Side.B, BOB, self.bob_rng),
            ("C", Side.C, CHARLIE, self.charlie_rng),
        ):
            payload = [PairHalf(order[p], side) for p in range(cfg.n)]
            env = self._wrap(channel, payload, rng)
            self.transcript.log("4", sender, TP, f"quantum:T'_{channel}", [_slot_label(s) for s in env.slots])
            self._return[channel] = self._transmit(env, "return")
        return self.announcement

    # step (5)
    def step5_measure_verify(self) -> tuple[list[BellIndex], float]:
        cfg = self.config
        for channel, player in (("B", BOB), ("C", CHARLIE)):
            env = self._return[channel]
            self.return_reports[channel] = self._decoy_check(
                "5", env, announcer=player, measurer=TP, measurer_rng=self.tp_rng
            )
        self._log_verdict("5", PLAYERS, self.return_reports)
        if any(r.aborted for r in self.return_reports.values()):
            raise _Abort(ABORT_DECOY_RETURN)

        halves_b, _ = strip_decoys(self._return["B"].slots, self._return["B"].positions)
        halves_c, _ = strip_decoys(self._return["C"].slots, self._return["C"].positions)
        outcomes = []
        for hb, hc in zip(halves_b, halves_c):
            if not (isinstance(hb, PairHalf) and isinstance(hc, PairHalf)) or hb.pair != hc.pair:
                raise ConsistencyError("returned halves do not line up into pairs")
            # every pair is in an exact Bell state, so measurement is deterministic
            entry = self.ledger[hb.pair]
            entry.measured = entry.current
            outcomes.append(entry.current)
        self.tp_outcomes = outcomes
        self.agent.on_measure(outcomes)
        self.published = self.agent.publish(outcomes)
        self.published_initial = list(self.tp_initial)
        self.transcript.log("5", TP, ALL, "outcomes", [str(s) for s in self.published])
        self.transcript.log("5", TP, ALL, "initial-states", [str(s) for s in self.published_initial])

        if self.players_masks is not None:
            rate = adjusted_verify_tp(
                self.published, self.announcement, self.players_masks, self.players_positions
            )
        else:
            rate = tp_inconsistency_rate(self.published, self.announcement, self.players_positions)
        self.tp_inconsistency_rate = rate
        cheating = rate > cfg.tp_inconsistency_threshold
        self.transcript.log("5", PLAYERS, ALL, "tp-check", {"rate": rate, "cheating": cheating})
        if cheating:
            raise _Abort(ABORT_TP_CHEATING)
        return self.published, rate

    def derive_result(self) -> ComparisonOutcome:
        """Players' view: published outcomes and initial states, un-permuted."""
        blocks = []
        for i in range(self.config.m):
            measured = self.published[self.players_positions[i]]
            blocks.append(recover_xor(self.published_initial[i], measured))
        status = EQUAL if all(b == PauliCode.I for b in blocks) else UNEQUAL
        outcome = ComparisonOutcome(status, None, tuple(blocks))
        self.transcript.log("5", PLAYERS, PLAYERS, "result", outcome.to_dict())
        return outcome

    def execute(
        self, digest_x: str, digest_y: str, initial_states: Optional[Sequence[BellIndex]] = None
    ) -> ComparisonOutcome:
        if len(digest_x) != self.config.digest_bits or len(digest_y) != self.config.digest_bits:
            raise InputError(f"digests must be {self.config.digest_bits} bits long")
        self.step1_agree()
        self.step2_prepare(initial_states)
        try:
            self.step3_check_forward()
            self.step4_encode_insert(digest_x, digest_y)
            self.step5_measure_verify()
        except _Abort as abort:
            self.transcript.log("abort", PLAYERS, ALL, "abort", {"reason": abort.reason})
            return ComparisonOutcome.aborted(abort.reason)
        return self.derive_result()

    # -- channel plumbing --

    def _wrap(self, channel: str, payload: list[Slot], rng: np.random.Generator) -> _Envelope:
        decoys = prepare_decoys(self.config.decoys_per_transmission, rng)
        positions, _ = interleave_decoys(len(payload), decoys, rng)
        return _Envelope(channel, build_sequence(payload, decoys, positions), positions, decoys)

    def _transmit(self, env: _Envelope, trip: str) -> _Envelope:
        if not self.eve.taps(env.channel, trip):
            return env
        slots, disturbance = eve_intercept_resend(env.slots, self.eve_rng)
        for pair, code in disturbance.items():
            entry = self.ledger[pair]
            entry.current = BellIndex(int(entry.current) ^ int(code))
        return _Envelope(env.channel, slots, env.positions, env.decoys)

    def _decoy_check(
        self,
        step: str,
        env: _Envelope,
        announcer: str,
        measurer: str,
        measurer_rng: np.random.Generator,
    ) -> TransmissionReport:
        self.transcript.log(
            step, announcer, measurer, f"decoy-announce:{env.channel}",
            {"positions": env.positions, "bases": [d.basis.value for d in env.decoys]},
        )
        _, received = strip_decoys(env.slots, env.positions)
        measured = [
            DecoyPhoton(p.basis, measure_decoy(r, p.basis, measurer_rng))  # type: ignore[arg-type]
            for r, p in zip(received, env.decoys)
        ]
        self.transcript.log(step, measurer, announcer, f"decoy-results:{env.channel}", [d.bit for d in measured])
        return verify_decoys(measured, env.decoys, self.config.decoy_threshold)

    def _log_verdict(self, step: str, sender: str, reports: dict[str, TransmissionReport]) -> None:
        self.transcript.log(step, sender, ALL, "decoy-verdict", {c: r.to_dict() for c, r in sorted(reports.items())})


@dataclass
class RunResult:
    outcome: ComparisonOutcome
    transcript: Transcript
    adversary: AdversaryReport
    ledger: list[PairLedger]
    forward_reports: dict[str, TransmissionReport]
    return_reports: dict[str, TransmissionReport]
    tp_inconsistency_rate: Optional[float]
    published: list[BellIndex]
    true_outcomes: list[BellIndex]

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome.to_dict(),
            "adversary": self.adversary.to_dict(),
            "forward_reports": {c: r.to_dict() for c, r in sorted(self.forward_reports.items())},
            "return_reports": {c: r.to_dict() for c, r in sorted(self.return_reports.items())},
            "tp_inconsistency_rate": self.tp_inconsistency_rate,
            "ledger": [e.to_dict() for e in self.ledger],
        }


def run_protocol(
    config: ProtocolConfig,
    input_x: str,
    input_y: str,
    tp_strategy: TpStrategy = HONEST_TP,
    eve_model: EveModel = NO_EVE,
    initial_states: Optional[Sequence[BellIndex]] = None,
    shared_secret: Optional[SharedSecret] = None,
) -> RunResult:
    """Run all five steps; aborts come back as ``Aborted`` outcomes."""
    x = PlayerInput.from_raw(input_x, config)
    y = PlayerInput.from_raw(input_y, config)
    run = ProtocolRun(config, tp_strategy, eve_model, shared_secret)
    outcome = run.execute(x.digest, y.digest, initial_states)
    return RunResult(
        outcome=outcome,
        transcript=run.transcript,
        adversary=run.agent.finish(),
        ledger=run.ledger,
        forward_reports=run.forward_reports,
        return_reports=run.return_reports,
        tp_inconsistency_rate=run.tp_inconsistency_rate,
        published=run.published,
        true_outcomes=run.tp_outcomes,
    )


GOLDEN_INITIAL = tuple(
    BellIndex.parse(s) for s in ("phi+", "phi+", "psi+", "psi-", "phi-", "psi+", "psi+", "psi-")
)
GOLDEN_X = "00011011"
GOLDEN_Y = "10110011"


def golden_config(**overrides) -> ProtocolConfig:
    params = dict(m=4, k=4)
    params.update(overrides)
    return ProtocolConfig(**params)
