"""
Tests for the three sharing schemes: encoding, erasure, decoding and the access structure.
"""

import itertools

import numpy as np
import pytest

from conftest import random_secret
from qss.codes import (
    SecretSpec,
    SubsetClass,
    classify_subset,
    decode,
    encode,
    erase,
    erase_to_fresh,
    logical_basis,
    prepare_secret,
    privacy_leakage,
    qutrit_recover,
    reduced_secret_state,
    secret_circuit,
    share_qubits,
)
from qss.errors import CodeError, UncorrectableSubsetError
from qss.qcore import (
    DensityMatrix,
    StateVector,
    apply_circuit,
    equal_up_to_phase,
    fidelity,
    partial_trace,
    trace_distance,
)
from qss.stabilizer import CorrectionTable

ROUND_TRIPS = [
    ("five_qubit", (1, 2)),
    ("steane", (6, 7)),
    ("steane", (5, 6, 7)),
    ("steane", (4, 5, 6)),
    ("qutrit", (1,)),
    ("qutrit", (2,)),
    ("qutrit", (3,)),
]


def round_trip(code, secret, subset, mode="mcm", rng=None):
    erased = erase(code, encode(code, secret), subset)
    recovered, _ = decode(code, erased, subset, mode, rng=rng)
    return recovered


@pytest.mark.parametrize("name,subset", ROUND_TRIPS)
@pytest.mark.parametrize("mode", ["mcm", "dcm"])
def test_noiseless_round_trip(request, rng, name, subset, mode):
    code = request.getfixturevalue(name)
    kind = "qutrit" if code.is_qutrit else "qubit"
    for _ in range(100):
        secret = random_secret(kind, rng)
        assert fidelity(round_trip(code, secret, subset, mode), secret) >= 1 - 1e-9


def test_sampled_mcm_round_trip(five_qubit, rng):
    """Test that a single sampled syndrome branch still recovers the secret"""
    secret = random_secret("qubit", rng)
    assert fidelity(round_trip(five_qubit, secret, (1, 2), rng=rng), secret) >= 1 - 1e-9


@pytest.mark.parametrize("name,subset", [("five_qubit", (1, 2)), ("steane", (5, 6, 7)), ("qutrit", (2,))])
def test_mcm_matches_dcm(request, rng, name, subset):
    code = request.getfixturevalue(name)
    kind = "qutrit" if code.is_qutrit else "qubit"
    for _ in range(50):
        secret = random_secret(kind, rng)
        mcm = round_trip(code, secret, subset, "mcm")
        dcm = round_trip(code, secret, subset, "dcm")
        assert np.allclose(mcm.matrix, dcm.matrix, atol=1e-10)


def test_secret_circuit_prepares_secret():
    for spec, width in [(SecretSpec(theta=0.4, phi=5.1), 1), (SecretSpec(kind="qutrit", theta1=1.1, theta2=2.0), 2)]:
        built, _ = apply_circuit(StateVector.zero(width), secret_circuit(spec))
        assert equal_up_to_phase(built.amplitudes, prepare_secret(spec).amplitudes, atol=1e-10)


def test_secret_angles_are_validated():
    with pytest.raises(CodeError):
        SecretSpec(theta=4.0)
    with pytest.raises(CodeError):
        SecretSpec(kind="ququart")
    spec = SecretSpec.from_degrees("qubit", 90, 180)
    assert spec.degrees() == pytest.approx((90.0, 180.0))
    assert SecretSpec.from_dict(spec.to_dict()) == spec


def test_logical_basis_is_orthonormal(five_qubit, qutrit):
    for code in (five_qubit, qutrit):
        basis = logical_basis(code)
        gram = np.array([[np.vdot(a.amplitudes, b.amplitudes) for b in basis] for a in basis])
        assert np.allclose(gram, np.eye(len(basis)), atol=1e-10)


def test_encoded_state_is_stabilized(steane, rng):
    encoded = encode(steane, random_secret("qubit", rng))
    for g in steane.generators:
        assert np.allclose(g.to_matrix() @ encoded.amplitudes, encoded.amplitudes, atol=1e-10)


def test_five_qubit_small_subsets_are_maximally_mixed(five_qubit, rng):
    secret = random_secret("qubit", rng)
    for subset in [(1,), (3,), (1, 2), (2, 5), (3, 4)]:
        reduced = reduced_secret_state(five_qubit, secret, subset)
        assert np.allclose(reduced.matrix, np.eye(2 ** len(subset)) / 2 ** len(subset), atol=1e-9)


def test_steane_tail_triple_is_maximally_mixed(steane, rng):
    reduced = reduced_secret_state(steane, random_secret("qubit", rng), (5, 6, 7))
    assert np.allclose(reduced.matrix, np.eye(8) / 8, atol=1e-12)


def test_steane_odd_quartet_is_secret_independent(steane):
    zero = reduced_secret_state(steane, StateVector.from_label("0"), (1, 3, 5, 7))
    plus = reduced_secret_state(steane, StateVector.from_amplitudes([1, 1], normalize=True), (1, 3, 5, 7))
    assert trace_distance(zero, plus) <= 1e-9
    assert privacy_leakage(steane, (1, 3, 5, 7)) <= 1e-9


def test_steane_odd_quartet_matrix_pattern(steane, rng):
    reduced = reduced_secret_state(steane, random_secret("qubit", rng), (1, 3, 5, 7)).matrix
    assert reduced[0, 0] == pytest.approx(1 / 8, abs=1e-12)
    assert reduced[0, 15] == pytest.approx(1 / 8, abs=1e-12)
    assert np.count_nonzero(np.abs(reduced) > 1e-9) == 16


@pytest.mark.parametrize("mode", ["mcm", "dcm"])
def test_steane_survives_losing_the_odd_quartet(steane, rng, mode):
    assert steane.is_correctable((1, 3, 5, 7))
    for _ in range(20):
        secret = random_secret("qubit", rng)
        assert fidelity(round_trip(steane, secret, (1, 3, 5, 7), mode), secret) >= 1 - 1e-9


def test_steane_fano_triple_leaks(steane):
    zero = reduced_secret_state(steane, StateVector.from_label("0"), (2, 4, 6))
    plus = reduced_secret_state(steane, StateVector.from_amplitudes([1, 1], normalize=True), (2, 4, 6))
    assert trace_distance(zero, plus) > 0.1
    assert privacy_leakage(steane, (2, 4, 6)) > 0.1


def test_qutrit_single_share_is_private(qutrit):
    assert privacy_leakage(qutrit, (1,)) <= 1e-9
    reduced = reduced_secret_state(qutrit, StateVector.from_label("01"), (2,))
    assert isinstance(reduced, DensityMatrix)
    assert reduced.n_qubits == 2


def test_classify_subset(five_qubit, steane, qutrit):
    assert classify_subset(five_qubit, (1, 2, 3)) is SubsetClass.AUTHORIZED
    assert classify_subset(five_qubit, (1, 2)) is SubsetClass.UNAUTHORIZED_PRIVATE
    assert classify_subset(steane, (1, 2, 3, 4)) is SubsetClass.AUTHORIZED
    assert classify_subset(steane, (5, 6, 7)) is SubsetClass.UNAUTHORIZED_PRIVATE
    assert classify_subset(steane, (2, 4, 6)) is SubsetClass.AUTHORIZED
    assert classify_subset(steane, (1, 3, 5, 7)) is SubsetClass.UNAUTHORIZED_PRIVATE
    assert classify_subset(qutrit, (1, 3)) is SubsetClass.AUTHORIZED
    assert classify_subset(qutrit, (2,)) is SubsetClass.UNAUTHORIZED_PRIVATE
    with pytest.raises(CodeError):
        classify_subset(five_qubit, (1, 2, 3, 4, 5))


@pytest.mark.slow
def test_access_structure_is_complementary(five_qubit, steane):
    for code, sizes in ((five_qubit, (2, 3)), (steane, (3, 4))):
        for size in sizes:
            for subset in itertools.combinations(code.labels, size):
                found = classify_subset(code, subset)
                assert found is not SubsetClass.UNAUTHORIZED_LEAKY
                if found is SubsetClass.AUTHORIZED:
                    complement = tuple(q for q in code.labels if q not in subset)
                    assert classify_subset(code, complement) is not SubsetClass.AUTHORIZED


def test_erase_rejects_bad_subsets(five_qubit):
    encoded = encode(five_qubit, StateVector.from_label("0"))
    with pytest.raises(CodeError):
        erase(five_qubit, encoded, (6,))
    with pytest.raises(CodeError):
        erase_to_fresh(encoded, (1, 2, 3, 4, 5))


def test_erase_resets_qutrit_share(qutrit):
    encoded = encode(qutrit, StateVector.from_label("10"))
    erased = erase(qutrit, encoded, (3,))
    probs = erased.probabilities().reshape(16, 4)
    assert probs[:, 1:].sum() == pytest.approx(0.0, abs=1e-12)


def test_uncorrectable_erasure_is_refused(steane, five_qubit):
    encoded = encode(steane, StateVector.from_label("0"))
    with pytest.raises(UncorrectableSubsetError):
        decode(steane, erase(steane, encoded, (2, 4, 6)), (2, 4, 6))
    assert not five_qubit.is_correctable((1, 2, 3))
    assert steane.is_correctable((1, 2, 4))


def test_noiseless_decode_flags_syndromes_outside_the_table(steane):
    full = steane.table_for((6, 7))
    partial = CorrectionTable((6, 7), full.rows[:-1])
    erased = erase(steane, encode(steane, StateVector.from_label("0")), (6, 7))
    with pytest.raises(UncorrectableSubsetError, match="missing from the table"):
        decode(steane, erased, (6, 7), table=partial)


@pytest.mark.parametrize("pair", ["12", "23", "31"])
def test_qutrit_recover_each_share_pair(qutrit, rng, pair):
    keep = share_qubits(int(pair[0]))
    for _ in range(100):
        secret = random_secret("qutrit", rng)
        recovered = qutrit_recover(encode(qutrit, secret), pair)
        assert fidelity(partial_trace(recovered, keep), secret) >= 1 - 1e-9


def test_qutrit_recover_leaves_shares_two_and_three_entangled(qutrit):
    recovered = qutrit_recover(encode(qutrit, StateVector.from_label("00")), "12")
    probs = recovered.probabilities()
    # share 1 holds |0>; shares 2,3 hold |00>, |12>, |21> in the two-qubit embedding
    expected = np.zeros(64)
    expected[[int(label, 2) for label in ("000000", "000110", "001001")]] = 1 / 3
    assert np.allclose(probs, expected, atol=1e-10)
    with pytest.raises(CodeError):
        qutrit_recover(encode(qutrit, StateVector.from_label("00")), "13")


def test_qutrit_rejects_double_erasure(qutrit):
    encoded = encode(qutrit, StateVector.from_label("00"))
    with pytest.raises(UncorrectableSubsetError):
        decode(qutrit, erase(qutrit, encoded, (1, 2)), (1, 2))


def test_qutrit_secret_must_avoid_unused_level(qutrit):
    with pytest.raises(CodeError):
        encode(qutrit, StateVector.from_label("11"))


def test_reference_qubits_ride_along(five_qubit):
    """Test that qubits after the secret pass through encode and decode untouched"""
    bell = StateVector.from_amplitudes([1, 0, 0, 1], normalize=True)
    recovered = round_trip(five_qubit, bell, (1, 2))
    assert fidelity(recovered, bell) >= 1 - 1e-9
