"""Simulator of a quantum private comparison protocol, the Bell-state
counting attack by its third party, and the sampling-mask countermeasure."""

from .adversaries import (
    AttackVerdict,
    CountsVector,
    TpStrategy,
    attack_power,
    counting_observe,
    counting_verdict,
    enumerate_attack_power,
    lying_publish,
)
from .bell import BellIndex, PauliCode, Side, combined_action, encode_bits, pauli_action, recover_xor
from .decoy import EveModel
from .errors import ConsistencyError, InputError
from .protocol import ComparisonOutcome, ProtocolConfig, Transcript, run_protocol

__all__ = [
    "AttackVerdict",
    "BellIndex",
    "ComparisonOutcome",
    "ConsistencyError",
    "CountsVector",
    "EveModel",
    "InputError",
    "PauliCode",
    "ProtocolConfig",
    "Side",
    "TpStrategy",
    "Transcript",
    "attack_power",
    "combined_action",
    "counting_observe",
    "counting_verdict",
    "encode_bits",
    "enumerate_attack_power",
    "lying_publish",
    "pauli_action",
    "recover_xor",
    "run_protocol",
]

__version__ = "0.1.0"
