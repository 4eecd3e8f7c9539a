import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qpc_sim.bell import (
    BellIndex,
    PauliCode,
    Side,
    bell_vector,
    combined_action,
    dense_oracle_apply,
    encode_bits,
    pauli_action,
    pauli_matrix,
    recover_xor,
    split_blocks,
    xor_codes,
)
from qpc_sim.errors import InputError

PHI_P, PHI_M, PSI_P, PSI_M = BellIndex
codes = st.sampled_from(list(PauliCode))
states = st.sampled_from(list(BellIndex))
sides = st.sampled_from(list(Side))

ALL_CASES = list(itertools.product(BellIndex, PauliCode, PauliCode))


@pytest.mark.parametrize(
    "block, expected",
    [("00", (0, 0)), ("01", (0, 1)), ("10", (1, 0)), ("11", (1, 1))],
)
def test_encode_bits(block, expected):
    code = encode_bits(block)
    assert (code.x, code.z) == expected
    assert code.bits == block


@pytest.mark.parametrize("bad", ["", "0", "012", "2a", "1 ", None, 10])
def test_encode_bits_rejects_malformed(bad):
    with pytest.raises(InputError):
        encode_bits(bad)


def test_split_blocks():
    assert split_blocks("00011011") == [PauliCode.I, PauliCode.Z, PauliCode.X, PauliCode.Y]
    with pytest.raises(InputError):
        split_blocks("001")


def test_canonical_mapping_and_order():
    assert [(b.x_bit, b.z_bit) for b in BellIndex] == [(0, 0), (0, 1), (1, 0), (1, 1)]
    assert [str(b) for b in sorted(BellIndex, reverse=True)] == ["psi-", "psi+", "phi-", "phi+"]
    assert BellIndex.parse(" PSI- ") is PSI_M
    with pytest.raises(InputError):
        BellIndex.parse("chi+")


def test_pauli_action_examples():
    assert pauli_action(PauliCode.I, Side.B, PHI_P) is PHI_P
    assert pauli_action(PauliCode.X, Side.B, PHI_P) is PSI_P
    assert pauli_action(PauliCode.Y, Side.C, PSI_M) is PHI_P


def test_combined_action_examples():
    assert combined_action(PauliCode.I, PauliCode.I, PSI_M) is PSI_M
    assert combined_action(PauliCode.X, PauliCode.I, PSI_P) is PHI_P
    assert combined_action(PauliCode.Y, PauliCode.Y, PSI_P) is PSI_P


def test_recover_xor_examples():
    assert recover_xor(PHI_P, PHI_P) is PauliCode.I
    assert recover_xor(PHI_P, PSI_P) is PauliCode.X
    assert recover_xor(PSI_M, PHI_M) is PauliCode.X


def test_dense_oracle_examples():
    assert dense_oracle_apply(PauliCode.I, PauliCode.I, PHI_P) == (PHI_P, pytest.approx(1.0))
    state, mag = dense_oracle_apply(PauliCode.X, PauliCode.I, PHI_P)
    assert state is PSI_P and mag == pytest.approx(1.0, abs=1e-12)


def test_dense_single_side_matches_symbolic():
    eye = pauli_matrix(PauliCode.I)
    for code, state in itertools.product(PauliCode, BellIndex):
        for op, side in ((np.kron(pauli_matrix(code), eye), Side.B), (np.kron(eye, pauli_matrix(code)), Side.C)):
            out = op @ bell_vector(state)
            overlap = abs(np.vdot(bell_vector(pauli_action(code, side, state)), out))
            assert abs(overlap - 1.0) < 1e-12


def test_i_sigma_y_is_sigma_z_sigma_x():
    np.testing.assert_array_equal(
        pauli_matrix(PauliCode.Y), pauli_matrix(PauliCode.Z) @ pauli_matrix(PauliCode.X)
    )


@pytest.mark.parametrize("state, code_b, code_c", ALL_CASES)
def test_oracle_equivalence_all_64(state, code_b, code_c):
    dense_state, magnitude = dense_oracle_apply(code_b, code_c, state)
    assert dense_state is combined_action(code_b, code_c, state)
    assert abs(magnitude - 1.0) <= 1e-12


@given(codes, sides, states)
def test_involution(code, side, state):
    assert pauli_action(code, side, pauli_action(code, side, state)) is state


@given(codes, states)
def test_same_code_fixpoint(code, state):
    assert combined_action(code, code, state) is state


@given(codes, states)
def test_side_independence(code, state):
    assert pauli_action(code, Side.B, state) is pauli_action(code, Side.C, state)


@given(codes, codes, states)
def test_combined_is_composition(u, v, state):
    assert combined_action(u, v, state) is pauli_action(v, Side.C, pauli_action(u, Side.B, state))


def test_xor_round_trip_exhaustive():
    for state, u, v in ALL_CASES:
        assert recover_xor(state, combined_action(u, v, state)) is xor_codes(u, v)
