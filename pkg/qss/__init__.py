"""
Exact simulation of quantum secret sharing schemes: circuits, stabilizer codes,
channels, figures of merit and readout mitigation.
"""

from .channels import Channel, GateNoise, pipeline_channel
from .codes import CodeSpec, SecretSpec, decode, encode, erase, load_code
from .errors import QSSError
from .metrics import entanglement_fidelity, swap_test, tomography_reconstruct
from .mitigation import ReadoutCalibration, mitigate
from .qcore import Circuit, DensityMatrix, GateSpec, StateVector, apply_circuit
from .stabilizer import PauliString, conjugate_pauli, derive_correction_table

__all__ = [
    "Channel", "GateNoise", "pipeline_channel",
    "CodeSpec", "SecretSpec", "decode", "encode", "erase", "load_code",
    "QSSError",
    "entanglement_fidelity", "swap_test", "tomography_reconstruct",
    "ReadoutCalibration", "mitigate",
    "Circuit", "DensityMatrix", "GateSpec", "StateVector", "apply_circuit",
    "PauliString", "conjugate_pauli", "derive_correction_table",
]
