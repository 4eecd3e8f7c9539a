import itertools
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qpc_sim.bell import BellIndex, Side
from qpc_sim.decoy import (
    Basis,
    DecoyPhoton,
    EveModel,
    PairHalf,
    TransmissionReport,
    build_sequence,
    eve_intercept_resend,
    interleave_decoys,
    payload_disturbance_distribution,
    prepare_decoys,
    strip_decoys,
    symbolic_disturbance_distribution,
    verify_decoys,
)
from qpc_sim.errors import InputError


def rng(seed=0):
    return np.random.default_rng(seed)


def test_prepare_decoys_empty_and_deterministic():
    assert prepare_decoys(0, rng()) == []
    assert prepare_decoys(4, rng(7)) == prepare_decoys(4, rng(7))
    assert len(prepare_decoys(4, rng(7))) == 4
    with pytest.raises(InputError):
        prepare_decoys(-1, rng())


def test_prepare_decoys_uniform():
    freq = Counter((d.basis, d.bit) for d in prepare_decoys(10_000, rng(1)))
    assert len(freq) == 4
    for count in freq.values():
        assert abs(count / 10_000 - 0.25) <= 0.02


def test_interleave_examples():
    decoys = prepare_decoys(4, rng())
    positions, total = interleave_decoys(8, decoys, rng())
    assert total == 12 and len(set(positions)) == 4
    assert all(0 <= p < 12 for p in positions)
    assert interleave_decoys(8, [], rng()) == ([], 8)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 64), st.integers(0, 16), st.integers(0, 2**32 - 1))
def test_interleave_strip_round_trip(length, n_decoys, seed):
    g = rng(seed)
    payload = [PairHalf(i, Side.B) for i in range(length)]
    decoys = prepare_decoys(n_decoys, g)
    positions, total = interleave_decoys(length, decoys, g)
    seq = build_sequence(payload, decoys, positions)
    assert len(seq) == total
    got_payload, got_decoys = strip_decoys(seq, positions)
    assert got_payload == payload
    assert got_decoys == decoys


def test_eve_matching_basis_leaves_decoy_unchanged():
    photon = DecoyPhoton(Basis.Z, 0)
    out, disturbance = eve_intercept_resend([photon], rng(), bases=[Basis.Z])
    assert out == [photon] and disturbance == {}
    assert verify_decoys(out, [photon], 0.0).error_count == 0


def test_eve_decoy_error_rate_quarter():
    prepared = prepare_decoys(20_000, rng(2))
    received, _ = eve_intercept_resend(prepared, rng(3))
    report = verify_decoys(received, prepared, 0.05, rng(4))
    assert abs(report.error_rate - 0.25) <= 0.02
    assert report.aborted


def test_eve_payload_z_toggles_phase_half_the_time():
    g = rng(5)
    outcomes = Counter()
    for _ in range(4000):
        _, dist = eve_intercept_resend([PairHalf(0, Side.B)], g, bases=[Basis.Z])
        code = dist[0]
        outcomes[BellIndex(int(BellIndex.PHI_PLUS) ^ int(code))] += 1
    assert set(outcomes) == {BellIndex.PHI_PLUS, BellIndex.PHI_MINUS}
    assert abs(outcomes[BellIndex.PHI_PLUS] / 4000 - 0.5) < 0.03


@pytest.mark.parametrize("state, basis", list(itertools.product(BellIndex, Basis)))
def test_payload_disturbance_matches_dense_collapse(state, basis):
    np.testing.assert_allclose(
        payload_disturbance_distribution(state, basis),
        symbolic_disturbance_distribution(state, basis),
        atol=1e-12,
    )


def test_verify_decoys_examples():
    prepared = [DecoyPhoton(Basis.Z, 0), DecoyPhoton(Basis.X, 1), DecoyPhoton(Basis.Z, 1), DecoyPhoton(Basis.X, 0)]
    assert verify_decoys(prepared, prepared, 0.1) == TransmissionReport(4, 0, 0.0, False)
    damaged = list(prepared)
    damaged[2] = DecoyPhoton(Basis.Z, 0)
    assert verify_decoys(damaged, prepared, 0.1) == TransmissionReport(4, 1, 0.25, True)
    assert verify_decoys([], [], 0.05) == TransmissionReport(0, 0, 0.0, False)
    with pytest.raises(InputError):
        verify_decoys(prepared[:3], prepared, 0.1)


def test_conjugate_measurement_needs_generator():
    with pytest.raises(InputError):
        verify_decoys([DecoyPhoton(Basis.X, 0)], [DecoyPhoton(Basis.Z, 0)], 0.1)


def test_eve_model_validation():
    assert not EveModel().taps("B", "forward")
    eve = EveModel("intercept-resend", channels={"B"}, trips={"forward"})
    assert eve.taps("B", "forward") and not eve.taps("C", "forward") and not eve.taps("B", "return")
    with pytest.raises(InputError):
        EveModel("entangling")
    with pytest.raises(InputError):
        EveModel("intercept-resend", channels={"D"})
