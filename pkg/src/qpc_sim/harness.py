"""Batch experiments over many independent protocol runs.

Each trial gets its own run seed, split from the master seed by trial index,
so a trial's result does not depend on which other trials ran or in what
order. Tallies merge as a commutative monoid.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import IO, Iterable, Optional, Sequence, Union

import numpy as np

from .adversaries import INCONCLUSIVE, UNEQUAL_CERTAIN, TpStrategy
from .decoy import EveModel, NO_EVE
from .errors import InputError
from .protocol import (
    ABORTED,
    EQUAL,
    GOLDEN_INITIAL,
    GOLDEN_X,
    GOLDEN_Y,
    UNEQUAL,
    ProtocolConfig,
    RunResult,
    run_protocol,
)

SCENARIOS = (
    "golden-example",
    "attack-soundness",
    "attack-power",
    "countermeasure",
    "decoy-eve",
    "lying-tp",
)

_FAMILIES = {
    "golden-example": "golden",
    "attack-soundness": "attack",
    "attack-power": "attack",
    "countermeasure": "attack",
    "decoy-eve": "decoy",
    "lying-tp": "lying",
}

_DEFAULT_POLICY = {
    "golden-example": "fixed",
    "attack-soundness": "random-equal",
    "attack-power": "random-unequal",
    "countermeasure": "random-equal",
    "decoy-eve": "random-mixed",
    "lying-tp": "random-mixed",
}

INPUT_POLICIES = ("fixed", "random-equal", "random-unequal", "random-mixed")

CSV_HEADER = (
    "scenario", "trials", "equal", "unequal", "aborted",
    "verdict_unequal", "verdict_inconclusive", "rate", "stderr", "seed",
)

_INPUT_STREAM = 7
_MAX_SEED = 2**64 - 1


@dataclass(frozen=True)
class ExperimentSpec:
    """What to run.

    ``input_policy`` picks the players' digests per trial; ``p_equal`` is
    the equal-input probability for ``random-mixed``. ``q`` is the lying
    TP's tamper fraction. ``eve`` overrides the scenario's default
    eavesdropper.
    """

    scenario: str
    config: ProtocolConfig = field(default_factory=ProtocolConfig)
    trials: int = 1
    input_policy: Optional[str] = None
    x: Optional[str] = None
    y: Optional[str] = None
    p_equal: float = 0.5
    q: float = 1.0
    eve: Optional[EveModel] = None
    seed: int = 0
    keep_rows: bool = False
    dump_transcripts: Optional[str] = None

    def validate(self) -> "ExperimentSpec":
        if self.scenario not in SCENARIOS:
            raise InputError(f"unknown scenario {self.scenario!r}")
        if self.trials < 1:
            raise InputError("trials must be at least 1")
        if not 0 <= self.seed <= _MAX_SEED:
            raise InputError("seed must be a 64-bit unsigned value")
        policy = self.policy
        if policy not in INPUT_POLICIES:
            raise InputError(f"unknown input policy {policy!r}")
        if policy == "fixed" and self.scenario != "golden-example" and (self.x is None or self.y is None):
            raise InputError("fixed input policy needs both x and y")
        if self.scenario == "golden-example":
            if self.config.m != 4 or self.config.k != 4:
                raise InputError("the golden example uses n=8, m=4, k=4")
        if not 0.0 <= self.p_equal <= 1.0 or not 0.0 <= self.q <= 1.0:
            raise InputError("probabilities must lie in [0, 1]")
        return self

    @property
    def policy(self) -> str:
        return self.input_policy or _DEFAULT_POLICY[self.scenario]

    @property
    def hardened(self) -> bool:
        return self.scenario == "countermeasure" or self.config.hardened


@dataclass(frozen=True)
class TrialRow:
    trial: int
    seed: int
    x: str
    y: str
    outcome: str
    verdict: Optional[str]
    decoy_errors: int
    decoys: int
    tp_inconsistency_rate: Optional[float]

    def to_dict(self) -> dict:
        return {
            "trial": self.trial,
            "seed": self.seed,
            "x": self.x,
            "y": self.y,
            "outcome": self.outcome,
            "verdict": self.verdict,
            "decoy_errors": self.decoy_errors,
            "decoys": self.decoys,
            "tp_inconsistency_rate": self.tp_inconsistency_rate,
        }


@dataclass(frozen=True)
class Tallies:
    trials: int = 0
    equal: int = 0
    unequal: int = 0
    aborted: int = 0
    verdict_unequal: int = 0
    verdict_inconclusive: int = 0
    hits: int = 0
    decoy_errors: int = 0
    decoys: int = 0
    abort_reasons: tuple[tuple[str, int], ...] = ()

    def __add__(self, other: "Tallies") -> "Tallies":
        reasons = dict(self.abort_reasons)
        for key, val in other.abort_reasons:
            reasons[key] = reasons.get(key, 0) + val
        return Tallies(
            self.trials + other.trials,
            self.equal + other.equal,
            self.unequal + other.unequal,
            self.aborted + other.aborted,
            self.verdict_unequal + other.verdict_unequal,
            self.verdict_inconclusive + other.verdict_inconclusive,
            self.hits + other.hits,
            self.decoy_errors + other.decoy_errors,
            self.decoys + other.decoys,
            tuple(sorted(reasons.items())),
        )

    @classmethod
    def merge(cls, parts: Iterable["Tallies"]) -> "Tallies":
        total = cls()
        for part in parts:
            total = total + part
        return total


@dataclass
class ExperimentReport:
    scenario: str
    trials: int
    hardened: bool
    m: int
    k: int
    seed: int
    tallies: Tallies
    rate: float
    stderr: float
    rate_label: str
    decoy_error_rate: Optional[float] = None
    wall_time: float = 0.0
    transcript_dir: Optional[str] = None
    rows: Optional[list[TrialRow]] = None

    @property
    def label(self) -> str:
        return "hardened" if self.hardened else "baseline"

    def to_dict(self, include_timing: bool = False) -> dict:
        t = self.tallies
        out = {
            "scenario": self.scenario,
            "trials": self.trials,
            "mode": self.label,
            "m": self.m,
            "k": self.k,
            "seed": self.seed,
            "outcomes": {"equal": t.equal, "unequal": t.unequal, "aborted": t.aborted},
            "abort_reasons": dict(t.abort_reasons),
            "verdicts": {"unequal_certain": t.verdict_unequal, "inconclusive": t.verdict_inconclusive},
            "rate_label": self.rate_label,
            "rate": self.rate,
            "stderr": self.stderr,
            "decoy_error_rate": self.decoy_error_rate,
            "transcript_dir": self.transcript_dir,
        }
        if include_timing:
            out["wall_time"] = self.wall_time
        if self.rows is not None:
            out["rows"] = [r.to_dict() for r in self.rows]
        return out


def trial_seed(master: int, trial: int) -> int:
    state = np.random.SeedSequence(master, spawn_key=(trial,)).generate_state(1, np.uint64)
    return int(state[0])


def _random_digest(rng: np.random.Generator, bits: int) -> str:
    return "".join(str(int(b)) for b in rng.integers(0, 2, size=bits))


def _draw_inputs(spec: ExperimentSpec, seed: int) -> tuple[str, str]:
    policy = spec.policy
    if policy == "fixed":
        return spec.x, spec.y  # type: ignore[return-value]
    bits = spec.config.digest_bits
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(_INPUT_STREAM,)))
    x = _random_digest(rng, bits)
    if policy == "random-mixed":
        policy = "random-equal" if rng.random() < spec.p_equal else "random-unequal"
    if policy == "random-equal":
        return x, x
    y = _random_digest(rng, bits)
    while y == x:
        y = _random_digest(rng, bits)
    return x, y


def _scenario_setup(spec: ExperimentSpec) -> tuple[TpStrategy, EveModel, str]:
    """TP strategy, eavesdropper and the name of the headline rate."""
    scenario = spec.scenario
    if scenario in ("golden-example", "attack-soundness", "attack-power", "countermeasure"):
        label = {
            "attack-power": "detection_rate",
            "golden-example": "unequal_certain_rate",
        }.get(scenario, "false_unequal_rate")
        return TpStrategy("counting"), spec.eve or NO_EVE, label
    if scenario == "decoy-eve":
        eve = spec.eve or EveModel("intercept-resend", channels={"B"}, trips={"forward"})
        return TpStrategy("honest"), eve, "abort_rate"
    return TpStrategy("lying", q=spec.q), spec.eve or NO_EVE, "cheating_detection_rate"


def run_one(spec: ExperimentSpec, trial: int) -> tuple[TrialRow, RunResult]:
    seed = trial_seed(spec.seed, trial)
    config = replace(spec.config, seed=seed, hardened=spec.hardened)
    tp, eve, _ = _scenario_setup(spec)
    if spec.scenario == "golden-example":
        x, y = (spec.x or GOLDEN_X), (spec.y or GOLDEN_Y)
        result = run_protocol(config, x, y, tp, eve, initial_states=GOLDEN_INITIAL)
    else:
        x, y = _draw_inputs(spec, seed)
        result = run_protocol(config, x, y, tp, eve)
    reports = list(result.forward_reports.values()) + list(result.return_reports.values())
    row = TrialRow(
        trial=trial,
        seed=seed,
        x=x,
        y=y,
        outcome=result.outcome.label,
        verdict=result.adversary.verdict,
        decoy_errors=sum(r.error_count for r in reports),
        decoys=sum(r.decoy_count for r in reports),
        tp_inconsistency_rate=result.tp_inconsistency_rate,
    )
    return row, result


def _hit(scenario: str, row: TrialRow) -> bool:
    if scenario == "decoy-eve":
        # payload damage Eve slips past the decoys can also trip the TP
        # check; only decoy-check aborts count as detecting her
        return row.outcome.startswith(f"{ABORTED}(decoy-")
    if scenario == "lying-tp":
        return row.outcome == f"{ABORTED}(tp-cheating)"
    return row.verdict == UNEQUAL_CERTAIN


def tally_row(scenario: str, row: TrialRow) -> Tallies:
    aborted = row.outcome.startswith(ABORTED)
    reasons: tuple[tuple[str, int], ...] = ()
    if aborted:
        reasons = ((row.outcome[len(ABORTED) + 1:-1], 1),)
    return Tallies(
        trials=1,
        equal=int(row.outcome == EQUAL),
        unequal=int(row.outcome == UNEQUAL),
        aborted=int(aborted),
        verdict_unequal=int(row.verdict == UNEQUAL_CERTAIN),
        verdict_inconclusive=int(row.verdict == INCONCLUSIVE),
        hits=int(_hit(scenario, row)),
        decoy_errors=row.decoy_errors,
        decoys=row.decoys,
        abort_reasons=reasons,
    )


def standard_error(rate: float, trials: int) -> float:
    return math.sqrt(rate * (1.0 - rate) / trials)


def build_report(spec: ExperimentSpec, tallies: Tallies, rows: Optional[list[TrialRow]] = None) -> ExperimentReport:
    _, _, label = _scenario_setup(spec)
    rate = tallies.hits / tallies.trials
    return ExperimentReport(
        scenario=spec.scenario,
        trials=tallies.trials,
        hardened=spec.hardened,
        m=spec.config.m,
        k=spec.config.k,
        seed=spec.seed,
        tallies=tallies,
        rate=rate,
        stderr=standard_error(rate, tallies.trials),
        rate_label=label,
        decoy_error_rate=(tallies.decoy_errors / tallies.decoys) if tallies.decoys else None,
        transcript_dir=spec.dump_transcripts,
        rows=rows,
    )


def run_trials(spec: ExperimentSpec) -> ExperimentReport:
    spec.validate()
    if spec.dump_transcripts:
        Path(spec.dump_transcripts).mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    tallies = Tallies()
    rows: list[TrialRow] = []
    for trial in range(spec.trials):
        row, result = run_one(spec, trial)
        tallies = tallies + tally_row(spec.scenario, row)
        if spec.keep_rows:
            rows.append(row)
        if spec.dump_transcripts:
            path = Path(spec.dump_transcripts) / f"trial-{trial:06d}.txt"
            path.write_text(result.transcript.to_text())
    report = build_report(spec, tallies, rows if spec.keep_rows else None)
    report.wall_time = time.perf_counter() - start
    return report


# -- summaries and output ------------------------------------------------------

@dataclass(frozen=True)
class SummaryTable:
    columns: tuple[str, ...]
    rows: tuple[tuple, ...]

    def render(self) -> str:
        cells = [self.columns] + [tuple(_fmt(v) for v in r) for r in self.rows]
        widths = [max(len(str(row[i])) for row in cells) for i in range(len(self.columns))]
        lines = ["  ".join(str(v).ljust(w) for v, w in zip(row, widths)).rstrip() for row in cells]
        lines.insert(1, "  ".join("-" * w for w in widths))
        return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    return f"{v:.6f}" if isinstance(v, float) else str(v)


def summarize(reports: Sequence[ExperimentReport]) -> SummaryTable:
    if not reports:
        raise InputError("nothing to summarise")
    families = {_FAMILIES[r.scenario] for r in reports}
    if len(families) > 1:
        raise InputError(f"cannot tabulate mixed scenario families {sorted(families)}")
    rows = tuple(
        (r.scenario, r.label, r.m, r.k, r.trials, r.rate_label, r.rate, r.stderr) for r in reports
    )
    return SummaryTable(("scenario", "mode", "m", "k", "trials", "measure", "rate", "stderr"), rows)


def _csv_row(report: ExperimentReport) -> list:
    t = report.tallies
    return [
        report.scenario, report.trials, t.equal, t.unequal, t.aborted,
        t.verdict_unequal, t.verdict_inconclusive, repr(report.rate), repr(report.stderr), report.seed,
    ]


def render_report(report: Union[ExperimentReport, Sequence[ExperimentReport]], fmt: str) -> str:
    reports = [report] if isinstance(report, ExperimentReport) else list(report)
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in reports:
            writer.writerow(_csv_row(r))
        return buf.getvalue()
    if fmt == "json":
        payload = [r.to_dict() for r in reports]
        return json.dumps(payload[0] if isinstance(report, ExperimentReport) else payload, indent=2, sort_keys=True) + "\n"
    if fmt == "text":
        return "".join(_text(r) for r in reports) + (summarize(reports).render() if len(reports) > 1 else "")
    raise InputError(f"unknown format {fmt!r}")


def _text(r: ExperimentReport) -> str:
    t = r.tallies
    lines = [
        f"scenario: {r.scenario} ({r.label}, m={r.m}, k={r.k})",
        f"trials: {r.trials}  seed: {r.seed}",
        f"outcomes: equal={t.equal} unequal={t.unequal} aborted={t.aborted}",
        f"verdicts: unequal_certain={t.verdict_unequal} inconclusive={t.verdict_inconclusive}",
        f"{r.rate_label}: {r.rate:.6f} +/- {r.stderr:.6f}",
    ]
    if t.abort_reasons:
        lines.append("abort reasons: " + ", ".join(f"{k}={v}" for k, v in t.abort_reasons))
    if r.decoy_error_rate is not None:
        lines.append(f"decoy error rate: {r.decoy_error_rate:.6f}")
    if r.transcript_dir:
        lines.append(f"transcripts: {r.transcript_dir}")
    lines.append(f"wall time: {r.wall_time:.3f}s")
    return "\n".join(lines) + "\n\n"


def emit_report(
    report: Union[ExperimentReport, Sequence[ExperimentReport]],
    fmt: str = "text",
    destination: Union[str, os.PathLike, IO[str], None] = None,
) -> None:
    """Write a rendered report to a path, an open text stream, or stdout.

    Only the text format shows wall time, so csv and json output is
    byte-stable for a given spec.
    """
    text = render_report(report, fmt)
    if destination is None or destination == "-":
        sys.stdout.write(text)
    elif hasattr(destination, "write"):
        destination.write(text)  # type: ignore[union-attr]
    else:
        with open(destination, "w", encoding="utf-8") as fh:
            fh.write(text)
