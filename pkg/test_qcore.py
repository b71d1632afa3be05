"""
Tests for states, circuits and the dense simulation kernels.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qss.errors import CircuitError, StateError
from qss.qcore import (
    Circuit,
    Conditional,
    DensityMatrix,
    GateSpec,
    Measure,
    Reset,
    StateVector,
    apply_circuit,
    controlled_swap,
    defer_measurements,
    depolarize,
    equal_up_to_phase,
    fidelity,
    measure_all,
    native_decomposition,
    partial_trace,
    permute_qubits,
    toffoli,
    trace_distance,
)

angles = st.floats(min_value=-2 * np.pi, max_value=2 * np.pi, allow_nan=False, allow_infinity=False)


def bell() -> StateVector:
    circuit = Circuit.from_gates(2, [GateSpec("H", (1,)), GateSpec("CNOT", (1, 2))])
    return apply_circuit(StateVector.zero(2), circuit)[0]


def permutation_unitary(n: int, mapping) -> np.ndarray:
    dim = 2 ** n
    u = np.zeros((dim, dim), dtype=complex)
    for i in range(dim):
        u[mapping(i), i] = 1
    return u


def test_qubit_one_is_most_significant():
    """Test that X on qubit 1 of two flips the leftmost bit"""
    out, _ = apply_circuit(StateVector.zero(2), Circuit.from_gates(2, [GateSpec("X", (1,))]))
    assert np.isclose(abs(out.amplitudes[int("10", 2)]), 1.0)


def test_bell_state_and_partial_trace():
    psi = bell()
    assert np.allclose(psi.amplitudes, np.array([1, 0, 0, 1]) / np.sqrt(2))
    reduced = partial_trace(psi, [2])
    assert np.allclose(reduced.matrix, np.eye(2) / 2)


def test_unnormalized_state_is_rejected():
    with pytest.raises(StateError):
        StateVector(1, np.array([1.0, 1.0]))
    psi = StateVector.from_amplitudes([3, 4], normalize=True)
    assert np.isclose(psi.probabilities().sum(), 1.0)


def test_density_matrix_trace_is_checked():
    with pytest.raises(StateError):
        DensityMatrix(1, np.eye(2))


def test_gate_validation():
    with pytest.raises(CircuitError):
        GateSpec("CNOT", (1,))
    with pytest.raises(CircuitError):
        GateSpec("RZ", (1,))
    with pytest.raises(CircuitError):
        GateSpec("CNOT", (2, 2))
    with pytest.raises(CircuitError):
        GateSpec("T", (1,))
    assert GateSpec("cx", (1, 2)).name == "CNOT"
    assert GateSpec("s†", (1,)).name == "SDG"


def test_circuit_validation():
    with pytest.raises(CircuitError):
        Circuit.from_gates(2, [GateSpec("H", (3,))])
    with pytest.raises(CircuitError):
        Circuit(2, 1, (Conditional(GateSpec("X", (2,)), 0),))
    with pytest.raises(CircuitError):
        Circuit(2, 1, (Measure(1, 1),))


def test_inverse_undoes_circuit():
    gates = [GateSpec("H", (1,)), GateSpec("S", (2,)), GateSpec("CNOT", (1, 3)),
             GateSpec("RY", (2,), (0.37,)), GateSpec("SX", (3,)), GateSpec("CZ", (2, 3))]
    circuit = Circuit.from_gates(3, gates)
    assert np.allclose(circuit.then(circuit.inverse()).unitary(), np.eye(8), atol=1e-12)


def test_circuit_json_round_trip():
    circuit = Circuit(2, 1, (GateSpec("H", (1,)), Measure(1, 0), Conditional(GateSpec("Z", (2,)), 0),
                             Reset(1), GateSpec("RZ", (2,), (0.5,))))
    assert Circuit.from_dict(circuit.to_dict()) == circuit


def test_nonselective_measurement_averages_branches():
    circuit = Circuit(1, 1, (GateSpec("H", (1,)), Measure(1, 0)))
    out, record = apply_circuit(StateVector.zero(1), circuit)
    assert np.allclose(out.matrix, np.eye(2) / 2)
    assert record.distribution == pytest.approx({"0": 0.5, "1": 0.5})
    assert record.value is None


def test_sampled_feed_forward(rng):
    """Test that a measured 1 drives the conditional X"""
    circuit = Circuit(2, 1, (GateSpec("X", (1,)), Measure(1, 0), Conditional(GateSpec("X", (2,)), 0)))
    out, record = apply_circuit(StateVector.zero(2), circuit, rng=rng)
    assert record.value == "1"
    assert fidelity(out, StateVector.from_label("11")) == pytest.approx(1.0)


def test_reset_returns_qubit_to_zero():
    circuit = Circuit(1, 0, (GateSpec("X", (1,)), Reset(1)))
    out, _ = apply_circuit(StateVector.zero(1).to_density(), circuit)
    assert np.allclose(out.matrix, np.diag([1, 0]))


def test_deferred_measurement_matches_feed_forward():
    ops = (GateSpec("RY", (1,), (1.1,)), GateSpec("H", (2,)), Measure(1, 0),
           Conditional(GateSpec("X", (2,)), 0), Conditional(GateSpec("Z", (2,)), 0),
           Conditional(GateSpec("Y", (2,)), 0, value=0))
    circuit = Circuit(2, 1, ops)
    mcm, _ = apply_circuit(StateVector.zero(2).to_density(), circuit)
    dcm, _ = apply_circuit(StateVector.zero(2).to_density(), defer_measurements(circuit))
    assert np.allclose(mcm.matrix, dcm.matrix, atol=1e-12)
    assert all(not isinstance(op, Conditional) for op in defer_measurements(circuit).ops)


def test_depolarize_full_strength_gives_maximally_mixed():
    out = depolarize(bell().to_density(), [1], 1.0)
    assert np.allclose(out.matrix, np.eye(4) / 4)
    with pytest.raises(StateError):
        depolarize(bell().to_density(), [1], 1.5)


def test_permute_qubits():
    out = permute_qubits(StateVector.from_label("01"), [2, 1])
    assert fidelity(out, StateVector.from_label("10")) == pytest.approx(1.0)


def test_measure_all_counts(rng):
    counts = measure_all(bell(), 1000, rng)
    assert sum(counts.values()) == 1000
    assert set(counts) <= {"00", "11"}
    with pytest.raises(StateError):
        measure_all(bell(), 0, rng)


def test_trace_distance_and_fidelity():
    zero, one = StateVector.from_label("0"), StateVector.from_label("1")
    assert trace_distance(zero, one) == pytest.approx(1.0)
    assert fidelity(zero, one) == pytest.approx(0.0)
    mixed = DensityMatrix.maximally_mixed(1)
    assert fidelity(mixed, zero) == pytest.approx(0.5)
    assert trace_distance(mixed, mixed) == pytest.approx(0.0)


def test_toffoli_network_is_ccx():
    u = Circuit.from_gates(3, toffoli(1, 2, 3)).unitary()
    ccx = permutation_unitary(3, lambda i: i ^ 1 if i >> 1 == 0b11 else i)
    assert equal_up_to_phase(u, ccx, atol=1e-10)


def test_controlled_swap_is_fredkin():
    u = Circuit.from_gates(3, controlled_swap(1, 2, 3)).unitary()

    def fredkin(i):
        if i >> 2 and ((i >> 1) & 1) != (i & 1):
            return i ^ 0b011
        return i

    assert equal_up_to_phase(u, permutation_unitary(3, fredkin), atol=1e-10)


@settings(max_examples=100, deadline=None)
@given(theta=angles)
def test_native_rx_decomposition(theta):
    target = GateSpec("RX", (1,), (theta,)).matrix()
    assert equal_up_to_phase(native_decomposition("X", theta).unitary(), target, atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(theta=angles)
def test_native_ry_decomposition(theta):
    target = GateSpec("RY", (1,), (theta,)).matrix()
    assert equal_up_to_phase(native_decomposition("Y", theta).unitary(), target, atol=1e-12)


def test_native_decomposition_uses_only_rz_and_sx():
    names = {g.name for g in native_decomposition("X", 0.3).gates}
    assert names <= {"RZ", "SX"}
    with pytest.raises(CircuitError):
        native_decomposition("Z", 0.3)
