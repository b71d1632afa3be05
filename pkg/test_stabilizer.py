"""
Tests for the Pauli algebra, Clifford conjugation, encoder verification and correction tables.
"""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qss.errors import CodeError, NonCliffordError, PauliError, UncorrectableSubsetError
from qss.qcore import Circuit, GateSpec
from qss.stabilizer import (
    CorrectionRow,
    CorrectionTable,
    GeneratorSet,
    PauliString,
    conjugate_pauli,
    derive_correction_table,
    gf2_rank,
    syndrome_of,
    table_consistency_check,
    verify_encoding,
)

FANO_LINES = [(1, 2, 3), (1, 4, 5), (1, 6, 7), (2, 4, 6), (2, 5, 7), (3, 4, 7), (3, 5, 6)]
CLIFFORD_1Q = ["H", "S", "SDG", "SX", "SXDG", "X", "Y", "Z"]
CLIFFORD_2Q = ["CNOT", "CZ", "SWAP"]

paulis = st.builds(lambda letters, phase: PauliString(letters, phase),
                   st.text(alphabet="IXYZ", min_size=3, max_size=3), st.integers(0, 3))


@st.composite
def clifford_gates(draw, n=3):
    if draw(st.booleans()):
        return GateSpec(draw(st.sampled_from(CLIFFORD_1Q)), (draw(st.integers(1, n)),))
    a, b = draw(st.permutations(range(1, n + 1)))[:2]
    return GateSpec(draw(st.sampled_from(CLIFFORD_2Q)), (a, b))


def test_pauli_text_and_products():
    assert str(PauliString.from_text("-iXZ")) == "-iXZ"
    assert PauliString.from_text("X") * PauliString.from_text("Y") == PauliString("Z", 1)
    assert PauliString.from_text("Y") * PauliString.from_text("X") == PauliString("Z", 3)
    with pytest.raises(PauliError):
        PauliString.from_text("XQ")
    with pytest.raises(PauliError):
        PauliString("XX") * PauliString("X")


@settings(max_examples=60, deadline=None)
@given(a=paulis, b=paulis)
def test_product_matches_matrices(a, b):
    assert np.allclose((a * b).to_matrix(), a.to_matrix() @ b.to_matrix())
    commute = np.allclose(a.to_matrix() @ b.to_matrix(), b.to_matrix() @ a.to_matrix())
    assert a.commutes_with(b) == commute


@settings(max_examples=60, deadline=None)
@given(gates=st.lists(clifford_gates(), min_size=1, max_size=6), p=paulis)
def test_conjugation_matches_unitary(gates, p):
    u = Circuit.from_gates(3, gates).unitary()
    image = conjugate_pauli(gates, p)
    assert np.allclose(image.to_matrix(), u @ p.to_matrix() @ u.conj().T, atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(gates=st.lists(clifford_gates(), min_size=1, max_size=5), a=paulis, b=paulis)
def test_conjugation_is_a_homomorphism(gates, a, b):
    assert conjugate_pauli(gates, a * b) == conjugate_pauli(gates, a) * conjugate_pauli(gates, b)


def test_conjugation_rules():
    assert conjugate_pauli([GateSpec("H", (1,))], PauliString("X")) == PauliString("Z")
    assert conjugate_pauli([GateSpec("S", (1,))], PauliString("X")) == PauliString("Y")
    assert conjugate_pauli([GateSpec("CNOT", (1, 2))], PauliString("XI")) == PauliString("XX")
    assert conjugate_pauli([GateSpec("CNOT", (1, 2))], PauliString("IZ")) == PauliString("ZZ")
    with pytest.raises(NonCliffordError):
        conjugate_pauli([GateSpec("RZ", (1,), (0.1,))], PauliString("X"))


def test_syndromes_are_linear(five_qubit):
    gens = five_qubit.generators
    for a, b in itertools.combinations(["XIIII", "IZIII", "IIYII", "ZZIXI"], 2):
        pa, pb = PauliString(a), PauliString(b)
        combined = tuple(x ^ y for x, y in zip(syndrome_of(pa, gens), syndrome_of(pb, gens)))
        assert syndrome_of(pa * pb, gens) == combined


def test_generators_must_commute():
    with pytest.raises(PauliError):
        GeneratorSet((PauliString("XI"), PauliString("ZI")))


def test_gf2_rank():
    assert gf2_rank([np.array([1, 0, 1]), np.array([0, 1, 1]), np.array([1, 1, 0])]) == 2


def test_encoders_verify(five_qubit, steane):
    for code in (five_qubit, steane):
        report = verify_encoding(code.encoding, code.generators, code.syndrome_registers, code.secret_register)
        assert report.passed
        assert report.generator_mismatches == 0
        assert report.logical_ok


def test_identity_circuit_fails_verification(five_qubit):
    report = verify_encoding(Circuit(5), five_qubit.generators, five_qubit.syndrome_registers,
                             five_qubit.secret_register)
    assert report.generator_mismatches == 4
    assert not report.passed


def test_readout_generators_are_stabilizers(five_qubit, steane):
    for code in (five_qubit, steane):
        for g in code.readout_generators:
            assert code.generators.contains(g)


def test_five_qubit_printed_syndromes(five_qubit):
    """Test the printed syndromes against the measured generators"""
    x1 = PauliString("XIIII")
    assert "".join(map(str, syndrome_of(x1, five_qubit.readout_generators))) == "1011"


def test_steane_printed_syndromes(steane):
    x7 = PauliString("IIIIIIX")
    assert "".join(map(str, syndrome_of(x7, steane.readout_generators))) == "011000"


def test_five_qubit_table_matches_stored_rows(five_qubit):
    table = derive_correction_table(five_qubit, (1, 2))
    assert len(table) == 16
    assert table.row_for_error("XI").syndrome == "1011"
    assert table.lookup("1011").letters == "Y"
    assert table.lookup("0001").letters == "Z"
    assert table.lookup("0100").letters == "I"
    check = table_consistency_check(table, five_qubit.stored_tables[(1, 2)])
    assert check.consistent
    assert check.rows_checked == 16


def test_steane_stored_tables_are_consistent(steane):
    total = 0
    for subset, stored in steane.stored_tables.items():
        check = table_consistency_check(derive_correction_table(steane, subset), stored)
        assert check.consistent, check.mismatches
        total += check.rows_checked
    assert total == 16 + 64


def test_table_rows_satisfy_readout_syndromes(steane):
    table = derive_correction_table(steane, (5, 6, 7))
    for row in table.rows:
        error = PauliString.on(7, (5, 6, 7), row.error)
        assert "".join(map(str, syndrome_of(error, steane.readout_generators))) == row.syndrome


def test_steane_uncorrectable_triples_are_fano_lines(steane):
    bad = []
    for subset in itertools.combinations(range(1, 8), 3):
        try:
            derive_correction_table(steane, subset)
        except UncorrectableSubsetError:
            bad.append(subset)
    assert sorted(bad) == FANO_LINES


def test_five_qubit_corrects_every_pair(five_qubit):
    for subset in itertools.combinations(range(1, 6), 2):
        assert len(derive_correction_table(five_qubit, subset).syndromes()) == 16
    with pytest.raises(UncorrectableSubsetError):
        derive_correction_table(five_qubit, (1, 2, 3))


def test_bitwise_corrections_reproduce_table(steane):
    table = derive_correction_table(steane, (4, 5, 6))
    letters = table.bitwise_corrections()
    for syndrome in table.syndromes():
        product = PauliString("I")
        for bit, letter in zip(syndrome, letters):
            if bit == "1":
                product = product * PauliString(letter)
        assert product.equal_up_to_phase(table.lookup(syndrome))


def test_consistency_check_reports_bad_rows(five_qubit):
    derived = derive_correction_table(five_qubit, (1, 2))
    rows = list(five_qubit.stored_tables[(1, 2)].rows)
    rows[4] = CorrectionRow(rows[4].syndrome, PauliString("X"), rows[4].error)
    check = table_consistency_check(derived, CorrectionTable((1, 2), tuple(rows[:-1])))
    reasons = sorted(m["reason"] for m in check.mismatches)
    assert reasons == ["correction differs", "row missing from stored table"]
    with pytest.raises(CodeError):
        table_consistency_check(derived, CorrectionTable((1, 3), tuple(rows)))


def test_table_json_round_trip(five_qubit):
    table = five_qubit.stored_tables[(1, 2)]
    again = CorrectionTable.from_dict(table.to_dict())
    assert again.to_dict() == table.to_dict()
