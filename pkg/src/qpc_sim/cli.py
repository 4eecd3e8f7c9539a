"""Command-line entry point: ``qpc-sim <subcommand> [options]``.

Exit status is 0 on success, 1 on bad input, 2 on I/O failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

from .adversaries import TpStrategy, enumerate_attack_power
from .decoy import EveModel, NO_EVE
from .errors import InputError
from .harness import ExperimentSpec, emit_report, run_trials
from .protocol import (
    GOLDEN_INITIAL,
    GOLDEN_X,
    GOLDEN_Y,
    ProtocolConfig,
    run_protocol,
)

_CONFIG_KEYS = {
    "seed", "trials", "n", "m", "k", "hardened", "input_policy", "x", "y", "p_equal", "q",
    "decoys_per_transmission", "decoy_threshold", "tp_inconsistency_threshold", "hash_scheme",
}


def _common(p: argparse.ArgumentParser, trials: bool = True) -> None:
    p.add_argument("--config", help="JSON file of flat key/value settings; flags override it")
    p.add_argument("--seed", type=int)
    if trials:
        p.add_argument("--trials", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--decoys", dest="decoys_per_transmission", type=int)
    p.add_argument("--decoy-threshold", type=float)
    p.add_argument("--tp-threshold", dest="tp_inconsistency_threshold", type=float)
    p.add_argument("--hash", dest="hash_scheme", choices=("identity", "toy-digest"))
    p.add_argument("--hardened", action="store_true", default=None)
    p.add_argument("--format", choices=("text", "csv", "json"), default="text")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--dump-transcripts", metavar="DIR")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qpc-sim",
        description="Quantum private comparison: counting attack and countermeasure simulator.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="one protocol run")
    _common(run, trials=False)
    run.add_argument("--x", help="Bob's input bits")
    run.add_argument("--y", help="Charlie's input bits")
    run.add_argument("--tp", choices=("honest", "counting", "lying"), default="counting")
    run.add_argument("--q", type=float, help="lying TP tamper fraction")
    run.add_argument("--eve", choices=("none", "intercept-resend"), default="none")
    run.add_argument("--transcript", action="store_true", help="print the transcript")

    golden = sub.add_parser("golden", help="the eight-pair golden fixture")
    _common(golden, trials=False)
    golden.add_argument("--transcript", action="store_true")

    attack = sub.add_parser("attack-eval", help="counting-attack soundness or power")
    _common(attack)
    attack.add_argument(
        "--inputs", dest="input_policy",
        choices=("random-equal", "random-unequal", "random-mixed"),
    )
    attack.add_argument("--p-equal", dest="p_equal", type=float)
    attack.add_argument("--exact", action="store_true",
                        help="also print the exhaustively enumerated rate (m <= 3)")

    cm = sub.add_parser("countermeasure-eval", help="baseline vs hardened false-unequal rate")
    _common(cm)

    decoy = sub.add_parser("decoy-eval", help="intercept-resend eavesdropper detection")
    _common(decoy)
    decoy.add_argument("--eve-channels", default="B", help="comma list of B,C")
    decoy.add_argument("--eve-trips", default="forward", help="comma list of forward,return")

    lying = sub.add_parser("lying-tp-eval", help="detection of a TP publishing false outcomes")
    _common(lying)
    lying.add_argument("--q", type=float)
    return parser


def _settings(args: argparse.Namespace) -> dict[str, Any]:
    values: dict[str, Any] = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            try:
                loaded = json.load(fh)
            except json.JSONDecodeError as exc:
                raise InputError(f"config file is not valid JSON: {exc}") from None
        if not isinstance(loaded, dict):
            raise InputError("config file must hold a flat JSON object")
        unknown = set(loaded) - _CONFIG_KEYS
        if unknown:
            raise InputError(f"unknown config keys: {sorted(unknown)}")
        values.update(loaded)
    for key in _CONFIG_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            values[key] = val
    return values


def _config(values: dict[str, Any]) -> ProtocolConfig:
    kwargs = {
        key: values[key]
        for key in ("decoys_per_transmission", "decoy_threshold", "tp_inconsistency_threshold",
                    "hash_scheme", "hardened", "seed")
        if key in values
    }
    return ProtocolConfig.from_sizes(values.get("n"), values.get("m"), values.get("k"), **kwargs)


def _spec(scenario: str, values: dict[str, Any], args: argparse.Namespace, **extra) -> ExperimentSpec:
    config = _config({k: v for k, v in values.items() if k != "seed"})
    fields = {key: values[key] for key in ("input_policy", "x", "y", "p_equal", "q") if key in values}
    fields.update(extra)
    return ExperimentSpec(
        scenario=scenario,
        config=config,
        trials=values.get("trials", 1),
        seed=values.get("seed", 0),
        dump_transcripts=args.dump_transcripts,
        **fields,
    ).validate()


def _write(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _single_run(args: argparse.Namespace, golden: bool) -> None:
    values = _settings(args)
    if golden:
        values.update(n=8, m=4, k=4)
        x, y, initial = GOLDEN_X, GOLDEN_Y, GOLDEN_INITIAL
        tp, eve = TpStrategy("counting"), NO_EVE
    else:
        x, y, initial = values.get("x"), values.get("y"), None
        if x is None or y is None:
            raise InputError("run needs both --x and --y")
        tp = TpStrategy(args.tp, q=values.get("q", 1.0))
        eve = EveModel(args.eve)
    config = _config(values)
    result = run_protocol(config, x, y, tp, eve, initial_states=initial)

    if args.dump_transcripts:
        Path(args.dump_transcripts).mkdir(parents=True, exist_ok=True)
        (Path(args.dump_transcripts) / "run.txt").write_text(result.transcript.to_text())
    if args.format == "json":
        payload = {"config": config.to_dict(), "x": x, "y": y, **result.to_dict()}
        if args.transcript:
            payload["transcript"] = result.transcript.to_text().splitlines()
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    elif args.format == "csv":
        raise InputError("csv output applies to batch experiments only")
    else:
        adv = result.adversary
        lines = [
            f"inputs: x={x} y={y} ({'hardened' if config.hardened else 'baseline'}, n={config.n}, m={config.m}, k={config.k})",
            f"outcome: {result.outcome.label}",
        ]
        if result.outcome.per_block_xor:
            lines.append("per-block xor: " + " ".join(str(c) for c in result.outcome.per_block_xor))
        if result.tp_inconsistency_rate is not None:
            lines.append(f"tp inconsistency rate: {result.tp_inconsistency_rate}")
        lines.append(f"tp strategy: {adv.strategy}")
        if adv.verdict is not None:
            lines.append(f"counts initial: {tuple(adv.counts_initial)}")
            lines.append(f"counts measured: {tuple(adv.counts_measured)}")
            lines.append(f"verdict: {adv.verdict} witness={set(adv.witness) or '{}'}")
        if args.dump_transcripts:
            lines.append(f"transcript: {Path(args.dump_transcripts) / 'run.txt'}")
        text = "\n".join(lines) + "\n"
        if args.transcript:
            text += "\n" + result.transcript.to_text()
    _write(text, args.out)


def _batch(args: argparse.Namespace) -> None:
    values = _settings(args)
    cmd = args.command
    if cmd == "attack-eval":
        policy = values.get("input_policy", "random-equal")
        scenario = "attack-soundness" if policy == "random-equal" else "attack-power"
        values["input_policy"] = policy
        spec = _spec(scenario, values, args)
        if args.exact:
            digests = {"random-equal": "equal", "random-unequal": "unequal"}.get(policy)
            if digests is None:
                raise InputError("--exact needs --inputs random-equal or random-unequal")
            exact = enumerate_attack_power(spec.config.m, spec.config.k, digests, spec.hardened)
            sys.stderr.write(f"exact rate: {exact} = {float(exact):.6f}\n")
        reports = [run_trials(spec)]
    elif cmd == "countermeasure-eval":
        values.pop("hardened", None)
        baseline = _spec("attack-soundness", values, args)
        hardened = _spec("countermeasure", values, args)
        reports = [run_trials(baseline), run_trials(hardened)]
    elif cmd == "decoy-eval":
        eve = EveModel(
            "intercept-resend",
            channels={c.strip() for c in args.eve_channels.split(",") if c.strip()},
            trips={t.strip() for t in args.eve_trips.split(",") if t.strip()},
        )
        reports = [run_trials(_spec("decoy-eve", values, args, eve=eve))]
    else:
        reports = [run_trials(_spec("lying-tp", values, args))]
    emit_report(reports[0] if len(reports) == 1 else reports, args.format, args.out)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command in ("run", "golden"):
            _single_run(args, golden=args.command == "golden")
        else:
            _batch(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
