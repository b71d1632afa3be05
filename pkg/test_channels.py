"""
Tests for Kraus channels, the gate-noise hook and the end-to-end pipeline channel.
"""

import numpy as np
import pytest

from qss.channels import (
    Channel,
    GateNoise,
    apply_channel,
    baseline_channel,
    depolarizing,
    erasure_channel,
    idle_pipeline,
    maximally_entangled,
    output_state,
    pipeline_channel,
    pipeline_two_qubit_count,
    two_qubit_depolarizing,
)
from qss.errors import ChannelError, UncorrectableSubsetError
from qss.metrics import entanglement_fidelity
from qss.qcore import DensityMatrix, GateSpec, StateVector, fidelity


def test_trace_preservation_is_enforced():
    with pytest.raises(ChannelError):
        Channel(2, 2, (0.5 * np.eye(2),))
    with pytest.raises(ChannelError):
        Channel(2, 2, ())
    with pytest.raises(ChannelError):
        depolarizing(1.2)


def test_choi_round_trip():
    channel = depolarizing(0.3).compose(erasure_channel())
    again = Channel.from_choi(channel.choi(), 2, 2)
    rho = StateVector.from_amplitudes([0.6, 0.8j]).to_density().matrix
    assert np.allclose(again.apply_matrix(rho), channel.apply_matrix(rho), atol=1e-10)


def test_depolarizing_channels():
    rho = np.array([[1, 0], [0, 0]], dtype=complex)
    assert np.allclose(depolarizing(1.0).apply_matrix(rho), np.eye(2) / 2)
    assert entanglement_fidelity(depolarizing(1.0)) == pytest.approx(0.25)
    assert entanglement_fidelity(depolarizing(0.2)) == pytest.approx(1 - 3 * 0.2 / 4)
    full = two_qubit_depolarizing(1.0).apply_matrix(np.diag([1, 0, 0, 0]).astype(complex))
    assert np.allclose(full, np.eye(4) / 4)


def test_erasure_channel_is_constant():
    rho = np.array([[0.5, 0.5], [0.5, 0.5]], dtype=complex)
    assert np.allclose(erasure_channel().apply_matrix(rho), np.diag([1, 0]))
    assert entanglement_fidelity(erasure_channel()) == pytest.approx(0.25)


def test_mix_and_output_state():
    mixed = Channel.identity(2).mix(depolarizing(1.0), 0.5)
    assert np.allclose(mixed.choi(), depolarizing(0.5).choi(), atol=1e-12)
    assert np.trace(output_state(mixed)) == pytest.approx(1.0)


def test_apply_channel_checks_width():
    dm = StateVector.zero(2).to_density()
    with pytest.raises(ChannelError):
        apply_channel(dm, depolarizing(0.1), [1, 2])
    out = apply_channel(dm, depolarizing(1.0), [2])
    assert isinstance(out, DensityMatrix)
    assert out.matrix[0, 0].real == pytest.approx(0.5)


def test_gate_noise_only_hits_two_qubit_gates():
    noise = GateNoise(0.5)
    dm = StateVector.zero(2).to_density()
    assert np.allclose(noise(dm, GateSpec("H", (1,))).matrix, dm.matrix)
    assert not np.allclose(noise(dm, GateSpec("CNOT", (1, 2))).matrix, dm.matrix)


def test_maximally_entangled_embeds_qutrit(qutrit, steane):
    assert fidelity(maximally_entangled(steane), StateVector.from_amplitudes([1, 0, 0, 1], normalize=True)) == \
        pytest.approx(1.0)
    amps = maximally_entangled(qutrit).amplitudes
    assert np.flatnonzero(np.abs(amps) > 0).tolist() == [0, 5, 10]


@pytest.mark.parametrize("name,subset", [("five_qubit", (1, 2)), ("steane", (5, 6, 7)),
                                         ("steane", (4, 5, 6)), ("qutrit", (3,))])
def test_noiseless_pipeline_is_identity(request, name, subset):
    code = request.getfixturevalue(name)
    assert entanglement_fidelity(pipeline_channel(code, subset)) >= 1 - 1e-9


def test_uncorrectable_pipeline_is_constant(steane):
    with pytest.raises(UncorrectableSubsetError):
        pipeline_channel(steane, (2, 4, 6))
    channel = pipeline_channel(steane, (2, 4, 6), allow_uncorrectable=True)
    assert entanglement_fidelity(channel) == pytest.approx(0.25, abs=1e-6)


def test_gate_noise_lowers_fidelity(five_qubit):
    clean = entanglement_fidelity(pipeline_channel(five_qubit, (1, 2), gate_noise=0.0))
    noisy = entanglement_fidelity(pipeline_channel(five_qubit, (1, 2), gate_noise=0.02))
    noisier = entanglement_fidelity(pipeline_channel(five_qubit, (1, 2), gate_noise=0.05))
    assert clean > noisy > noisier


@pytest.mark.parametrize("mode", ["mcm", "dcm"])
def test_noisy_steane_pair_erasure_still_decodes(steane, mode):
    """Test that gate noise reaching syndromes outside the {6,7} table degrades instead of failing"""
    noisy = entanglement_fidelity(pipeline_channel(steane, (6, 7), mode, gate_noise=0.01))
    noisier = entanglement_fidelity(pipeline_channel(steane, (6, 7), mode, gate_noise=0.05))
    assert 0.25 < noisier < noisy < 1.0


def test_two_qubit_count_includes_decoder(five_qubit, qutrit):
    encoder = five_qubit.encoding.two_qubit_count()
    assert pipeline_two_qubit_count(five_qubit, (1, 2)) > encoder
    assert pipeline_two_qubit_count(qutrit, (2,)) > qutrit.encoding.two_qubit_count()


def test_baseline_channel(five_qubit, qutrit):
    assert entanglement_fidelity(baseline_channel(five_qubit, 12)) == pytest.approx(1.0)
    noisy = entanglement_fidelity(baseline_channel(five_qubit, 12, 0.01))
    assert 0.25 < noisy < 1.0
    assert entanglement_fidelity(baseline_channel(qutrit, 12, 0.01), 3) < 1.0


def test_idle_pipeline_keeps_width(five_qubit):
    out = idle_pipeline(five_qubit, StateVector.from_label("1"), 5, 0.1)
    assert out.n_qubits == 1
    assert out.matrix[1, 1].real < 1.0
