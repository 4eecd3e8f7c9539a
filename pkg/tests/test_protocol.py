import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from qpc_sim.adversaries import TpStrategy
from qpc_sim.bell import BellIndex, PauliCode
from qpc_sim.decoy import EveModel
from qpc_sim.errors import InputError
from qpc_sim.ledger import Role, SharedSecret, invert_permutation
from qpc_sim.protocol import (
    GOLDEN_INITIAL,
    GOLDEN_X,
    GOLDEN_Y,
    ComparisonOutcome,
    ProtocolConfig,
    ProtocolRun,
    Transcript,
    golden_config,
    hash_input,
    run_protocol,
)

from oracles import all_digests

COUNTING = TpStrategy("counting")
PERMUTED_KINDS = {"quantum:T'_B", "quantum:T'_C", "outcomes"}


def digests(bits):
    return st.text(alphabet="01", min_size=bits, max_size=bits)


def test_hash_input_identity_and_toy():
    assert hash_input("00011011", "identity", 4) == "00011011"
    with pytest.raises(InputError):
        hash_input("0001", "identity", 4)
    a = hash_input("1011001110001", "toy-digest", 4)
    assert a == hash_input("1011001110001", "toy-digest", 4)
    assert len(a) == 8 and set(a) <= {"0", "1"}
    assert hash_input("", "toy-digest", 3) != hash_input("0", "toy-digest", 3)
    with pytest.raises(InputError):
        hash_input("0120", "identity", 2)
    with pytest.raises(InputError):
        hash_input("01", "sha-3", 1)


def test_config_validation():
    cfg = ProtocolConfig.from_sizes(n=8, m=4)
    assert (cfg.n, cfg.m, cfg.k) == (8, 4, 4)
    assert ProtocolConfig.from_sizes(n=10, k=3).m == 7
    assert ProtocolConfig.from_sizes(m=4, k=2, n=6).n == 6
    for bad in (dict(n=8, m=4, k=3), dict(m=4, k=0), dict(n=4, m=4)):
        with pytest.raises(InputError):
            ProtocolConfig.from_sizes(**bad)
    with pytest.raises(InputError):
        ProtocolConfig(decoy_threshold=1.5)
    with pytest.raises(InputError):
        ProtocolConfig(seed=-1)


def test_step2_fixture_accepted_verbatim():
    run = ProtocolRun(golden_config())
    ledger = run.step2_prepare(GOLDEN_INITIAL)
    assert tuple(e.initial for e in ledger) == GOLDEN_INITIAL
    assert [e.role for e in ledger] == [Role.ENCODED] * 4 + [Role.SAMPLING] * 4
    with pytest.raises(InputError):
        ProtocolRun(golden_config()).step2_prepare(GOLDEN_INITIAL[:7])


def test_step2_same_seed_same_sequences():
    a, b = ProtocolRun(ProtocolConfig(seed=9)), ProtocolRun(ProtocolConfig(seed=9))
    assert [e.initial for e in a.step2_prepare()] == [e.initial for e in b.step2_prepare()]
    assert a.transcript.to_text() == b.transcript.to_text()


def test_step4_encodes_golden_fixture():
    run = ProtocolRun(golden_config())
    run.step2_prepare(GOLDEN_INITIAL)
    run.step3_check_forward()
    announcement = run.step4_encode_insert(GOLDEN_X, GOLDEN_Y)
    P = BellIndex
    assert [e.current for e in run.ledger[:4]] == [P.PSI_PLUS, P.PSI_PLUS, P.PHI_PLUS, P.PSI_MINUS]
    assert [e.current for e in run.ledger[4:]] == list(GOLDEN_INITIAL[4:])
    assert announcement == [(i, GOLDEN_INITIAL[i]) for i in range(4, 8)]
    positions = [e.permuted_position for e in run.ledger]
    assert sorted(positions) == list(range(8))
    order = invert_permutation(positions)
    assert [positions[order[p]] for p in range(8)] == list(range(8))


def test_step4_rejects_wrong_digest_length():
    run = ProtocolRun(golden_config())
    run.step2_prepare()
    with pytest.raises(InputError):
        run.step4_encode_insert("0001", "0001")


def test_equal_digests_leave_encoded_pairs_unchanged():
    run = ProtocolRun(ProtocolConfig(seed=3))
    run.step2_prepare()
    run.step4_encode_insert("01101100", "01101100")
    assert all(e.current == e.initial for e in run.ledger)


def test_golden_end_to_end():
    result = run_protocol(golden_config(), GOLDEN_X, GOLDEN_Y, COUNTING, initial_states=GOLDEN_INITIAL)
    assert result.outcome.status == "Unequal"
    assert result.outcome.per_block_xor == (PauliCode.X, PauliCode.X, PauliCode.X, PauliCode.I)
    assert result.tp_inconsistency_rate == 0.0
    assert tuple(result.adversary.counts_measured) == (1, 1, 4, 2)
    assert result.adversary.verdict == "UnequalCertain"


def test_bob_recovers_charlies_blocks():
    result = run_protocol(golden_config(), GOLDEN_X, GOLDEN_Y, initial_states=GOLDEN_INITIAL)
    bob = [PauliCode(int(GOLDEN_X[2 * i:2 * i + 2], 2)) for i in range(4)]
    charlie = [PauliCode(int(b) ^ int(x)) for b, x in zip(bob, result.outcome.per_block_xor)]
    assert "".join(c.bits for c in charlie) == GOLDEN_Y


def test_honest_equal_run_is_equal():
    result = run_protocol(ProtocolConfig(seed=11), "11100100", "11100100")
    assert result.outcome == ComparisonOutcome("Equal", None, (PauliCode.I,) * 4)
    assert result.tp_inconsistency_rate == 0.0


@pytest.mark.parametrize("m", [1, 2])
def test_correctness_exhaustive_small_m(m):
    cfg = ProtocolConfig(m=m, k=2, decoys_per_transmission=2, seed=5)
    for x, y in itertools.product(all_digests(m), repeat=2):
        status = run_protocol(cfg, x, y).outcome.status
        assert status == ("Equal" if x == y else "Unequal"), (x, y)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 32).flatmap(lambda m: st.tuples(st.just(m), digests(2 * m), digests(2 * m), st.booleans())),
       st.integers(0, 2**64 - 1))
def test_correctness_randomized(case, seed):
    m, x, y, same = case
    if same:
        y = x
    cfg = ProtocolConfig(m=m, k=max(1, m // 2), decoys_per_transmission=4, seed=seed)
    result = run_protocol(cfg, x, y)
    assert result.outcome.status == ("Equal" if x == y else "Unequal")
    blocks = [PauliCode(int(x[2 * i:2 * i + 2], 2) ^ int(y[2 * i:2 * i + 2], 2)) for i in range(m)]
    assert list(result.outcome.per_block_xor) == blocks


def test_sampling_invariance_baseline():
    for seed in range(50):
        result = run_protocol(ProtocolConfig(seed=seed), "10010011", "00110110")
        for entry in result.ledger:
            if entry.role == Role.SAMPLING:
                assert entry.measured == entry.initial


def test_view_separation():
    cfg = ProtocolConfig(seed=21)
    a = run_protocol(cfg, "10010011", "00110110", shared_secret=SharedSecret(1))
    b = run_protocol(cfg, "10010011", "00110110", shared_secret=SharedSecret(2))
    assert [e.kind for e in a.transcript.entries] == [e.kind for e in b.transcript.entries]
    differing = {
        ea.kind
        for ea, eb in zip(a.transcript.tp_view(), b.transcript.tp_view())
        if ea != eb
    }
    assert differing <= PERMUTED_KINDS
    # the permuted outcomes are the secret's only visible effect
    assert sorted(a.published) == sorted(b.published)


def test_permutation_neutrality():
    cfg = ProtocolConfig(seed=4)
    reference = run_protocol(cfg, "10010011", "10110110").outcome
    for secret in random.Random(0).sample(range(2**40), 100):
        assert run_protocol(cfg, "10010011", "10110110", shared_secret=SharedSecret(secret)).outcome == reference


def test_transcript_deterministic_and_round_trips():
    cfg = ProtocolConfig(seed=77)
    t1 = run_protocol(cfg, "10010011", "10110110").transcript.to_text()
    t2 = run_protocol(cfg, "10010011", "10110110").transcript.to_text()
    assert t1 == t2
    assert Transcript.from_text(t1).to_text() == t1
    steps = [line.split("|")[0] for line in t1.splitlines()]
    assert steps == sorted(steps)
    assert all(len(line.split("|")) == 5 for line in t1.splitlines())


def test_lying_tp_is_caught():
    result = run_protocol(ProtocolConfig(seed=1), "10010011", "10110110", TpStrategy("lying", q=1.0))
    assert result.outcome == ComparisonOutcome.aborted("tp-cheating")
    assert result.tp_inconsistency_rate == 1.0


def test_eve_forward_abort_and_degenerate_zero_decoys():
    eve = EveModel("intercept-resend", channels={"B"}, trips={"forward"})
    aborted = sum(
        run_protocol(ProtocolConfig(seed=s), "00000000", "00000000", eve_model=eve).outcome.reason == "decoy-forward"
        for s in range(200)
    )
    assert aborted > 150
    cfg = ProtocolConfig(decoys_per_transmission=0)
    for s in range(20):
        result = run_protocol(ProtocolConfig(decoys_per_transmission=0, seed=s), "00000000", "00000000", eve_model=eve)
        assert result.outcome.reason != "decoy-forward"
        assert all(r.error_rate == 0.0 for r in result.forward_reports.values())
    assert cfg.decoys_per_transmission == 0


def test_no_eve_means_zero_decoy_errors():
    result = run_protocol(ProtocolConfig(seed=8, decoys_per_transmission=32), "00000000", "11111111")
    reports = list(result.forward_reports.values()) + list(result.return_reports.values())
    assert len(reports) == 4
    assert all(r.error_rate == 0.0 and not r.aborted for r in reports)


def test_eve_on_return_aborts_decoy_return():
    eve = EveModel("intercept-resend", trips={"return"})
    reasons = {
        run_protocol(ProtocolConfig(seed=s, decoys_per_transmission=16), "00000000", "00000000", eve_model=eve).outcome.reason
        for s in range(30)
    }
    assert "decoy-return" in reasons and "decoy-forward" not in reasons


def test_comparison_outcome_invariant():
    with pytest.raises(InputError):
        ComparisonOutcome("Equal", None, (PauliCode.X,))
    with pytest.raises(InputError):
        ComparisonOutcome("Aborted", None)
