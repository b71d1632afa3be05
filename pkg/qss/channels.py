"""
CPTP channels, the gate-noise model and the end-to-end sharing channel.
"""

import itertools
import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .codes import CodeSpec, decode, decoder_circuit, encode, erase, recovery_circuit
from .errors import ChannelError, UncorrectableSubsetError
from .qcore import (
    DensityMatrix,
    GateSpec,
    State,
    StateVector,
    apply_kraus,
    as_density,
    depolarize,
    partial_trace,
    permute_qubits,
)
from .stabilizer import CorrectionTable

logger = logging.getLogger(__name__)

TP_ATOL = 1e-10
CP_ATOL = 1e-9

_PAULIS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True, eq=False)
class Channel:
    """Kraus representation; each operator has shape (dim_out, dim_in)."""
    dim_in: int
    dim_out: int
    kraus_ops: Tuple[np.ndarray, ...]

    def __post_init__(self):
        ops = tuple(np.asarray(k, dtype=complex) for k in self.kraus_ops)
        if not ops:
            raise ChannelError("a channel needs at least one Kraus operator")
        for k in ops:
            if k.shape != (self.dim_out, self.dim_in):
                raise ChannelError(f"Kraus operator of shape {k.shape}, expected {(self.dim_out, self.dim_in)}")
        completeness = sum(k.conj().T @ k for k in ops)
        if not np.allclose(completeness, np.eye(self.dim_in), atol=TP_ATOL):
            deviation = np.abs(completeness - np.eye(self.dim_in)).max()
            raise ChannelError(f"channel is not trace preserving (deviation {deviation:.2e})")
        object.__setattr__(self, "kraus_ops", ops)

    @property
    def n_in(self) -> Optional[int]:
        return _qubits(self.dim_in)

    @property
    def n_out(self) -> Optional[int]:
        return _qubits(self.dim_out)

    @classmethod
    def identity(cls, dim: int) -> "Channel":
        return cls(dim, dim, (np.eye(dim, dtype=complex),))

    def apply_matrix(self, rho: np.ndarray) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (self.dim_in, self.dim_in):
            raise ChannelError(f"input of shape {rho.shape} does not match dim_in={self.dim_in}")
        return sum(k @ rho @ k.conj().T for k in self.kraus_ops)

    def choi(self) -> np.ndarray:
        """sum_ij |i><j| ⊗ N(|i><j|), reference first, trace dim_in."""
        vectors = [k.T.reshape(-1) for k in self.kraus_ops]
        return sum(np.outer(v, v.conj()) for v in vectors)

    @classmethod
    def from_choi(cls, choi: np.ndarray, dim_in: int, dim_out: int, atol: float = CP_ATOL) -> "Channel":
        choi = np.asarray(choi, dtype=complex)
        if choi.shape != (dim_in * dim_out, dim_in * dim_out):
            raise ChannelError(f"Choi matrix shape {choi.shape} does not match dims ({dim_in}, {dim_out})")
        choi = 0.5 * (choi + choi.conj().T)
        vals, vecs = np.linalg.eigh(choi)
        if vals.min() < -atol:
            raise ChannelError(f"Choi matrix is not positive (eigenvalue {vals.min():.3e})")
        ops = [np.sqrt(val) * vecs[:, i].reshape(dim_in, dim_out).T
               for i, val in enumerate(vals) if val > atol]
        return cls(dim_in, dim_out, tuple(ops))

    def compose(self, after: "Channel") -> "Channel":
        """Run self first, then `after`."""
        if after.dim_in != self.dim_out:
            raise ChannelError(f"cannot feed a {self.dim_out}-dim output into a {after.dim_in}-dim input")
        ops = tuple(b @ a for b in after.kraus_ops for a in self.kraus_ops)
        return Channel(self.dim_in, after.dim_out, ops)

    def mix(self, other: "Channel", weight: float) -> "Channel":
        """weight * self + (1 - weight) * other."""
        if (self.dim_in, self.dim_out) != (other.dim_in, other.dim_out):
            raise ChannelError("cannot mix channels of different dimensions")
        ops = tuple(np.sqrt(weight) * k for k in self.kraus_ops) + \
            tuple(np.sqrt(1 - weight) * k for k in other.kraus_ops)
        return Channel(self.dim_in, self.dim_out, ops)


def _qubits(dim: int) -> Optional[int]:
    n = int(round(np.log2(dim)))
    return n if 2 ** n == dim else None


def erasure_channel() -> Channel:
    return Channel(2, 2, (np.array([[1, 0], [0, 0]], dtype=complex), np.array([[0, 1], [0, 0]], dtype=complex)))


def _check_probability(p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise ChannelError(f"probability must lie in [0, 1], got {p}")
    return float(p)


def depolarizing(p: float) -> Channel:
    """rho -> (1-p) rho + p I/2."""
    p = _check_probability(p)
    ops = [np.sqrt(1 - 3 * p / 4) * _PAULIS["I"]]
    ops += [np.sqrt(p / 4) * _PAULIS[a] for a in "XYZ"]
    return Channel(2, 2, tuple(ops))


def two_qubit_depolarizing(p: float) -> Channel:
    """rho -> (1-p) rho + p I/4 on a qubit pair."""
    p = _check_probability(p)
    ops = []
    for a, b in itertools.product("IXYZ", repeat=2):
        weight = 1 - 15 * p / 16 if a == b == "I" else p / 16
        ops.append(np.sqrt(weight) * np.kron(_PAULIS[a], _PAULIS[b]))
    return Channel(4, 4, tuple(ops))


def apply_channel(dm: DensityMatrix, channel: Channel, targets: Sequence[int]) -> DensityMatrix:
    """Apply a qubit channel on the listed qubits of a larger register."""
    width = 2 ** len(targets)
    if channel.dim_in != width or channel.dim_out != width:
        raise ChannelError(f"{channel.dim_in}->{channel.dim_out} channel cannot act on {len(targets)} qubit(s)")
    return apply_kraus(dm, channel.kraus_ops, targets)


class GateNoise:
    """Noise hook for apply_circuit: two-qubit depolarizing after every two-qubit gate."""

    def __init__(self, two_qubit_p: float):
        self.two_qubit_p = _check_probability(two_qubit_p)

    def __call__(self, dm: DensityMatrix, gate: GateSpec) -> DensityMatrix:
        if gate.is_two_qubit and self.two_qubit_p > 0:
            return depolarize(dm, gate.targets, self.two_qubit_p)
        return dm

    def __repr__(self) -> str:
        return f"GateNoise(two_qubit_p={self.two_qubit_p})"


def maximally_entangled(code: CodeSpec) -> StateVector:
    """|Φ+_d> on (secret qubits, reference qubits) with the qutrit embedding for d = 3."""
    k = code.secret_width
    levels = range(code.secret_dim)
    amps = np.zeros(4 ** k, dtype=complex)
    for level in levels:
        amps[level * 2 ** k + level] = 1.0
    return StateVector(2 * k, amps / np.sqrt(code.secret_dim))


def run_pipeline(code: CodeSpec, secret, erased_subset: Sequence[int], decode_mode: str = "mcm",
                 noise: Optional[GateNoise] = None, table: Optional[CorrectionTable] = None,
                 rng: Optional[np.random.Generator] = None) -> DensityMatrix:
    """encode -> erase -> decode; returns the recovered secret (plus any reference qubits)."""
    encoded = encode(code, secret, noise=noise)
    erased = erase(code, encoded, erased_subset)
    recovered, _ = decode(code, erased, erased_subset, decode_mode, rng=rng, noise=noise, table=table)
    return recovered


def pipeline_channel(code: CodeSpec, erased_subset: Sequence[int], decode_mode: str = "mcm",
                     gate_noise: Optional[float] = None, allow_uncorrectable: bool = False,
                     table: Optional[CorrectionTable] = None) -> Channel:
    """
    Secret-in to secret-out channel of the whole sharing pipeline.

    Built by sending half of a maximally entangled pair through the pipeline and
    reading the Choi matrix off the output. Erasures the code cannot correct need
    allow_uncorrectable; they are decoded with the code's largest stored table
    unless `table` is given.

    Returns:
        Channel with dim_in = secret dimension (2 or 3) and dim_out = 2^secret qubits
    """
    if not code.is_qutrit and table is None and not code.is_correctable(erased_subset):
        if not allow_uncorrectable:
            raise UncorrectableSubsetError(
                f"{code.name}: erasure of {list(erased_subset)} is not correctable (pass allow_uncorrectable)")
        table = code.default_decoder_table()
        logger.info("%s: decoding uncorrectable erasure %s with the %s table",
                    code.name, list(erased_subset), list(table.subset))
    noise = GateNoise(gate_noise) if gate_noise else None
    out = run_pipeline(code, maximally_entangled(code), erased_subset, decode_mode, noise=noise, table=table)
    return _channel_from_output(code, out)


def _channel_from_output(code: CodeSpec, out: DensityMatrix) -> Channel:
    """Read the channel off (output, reference) after half of |Φ+_d> went through it."""
    k = code.secret_width
    # reorder to (reference, output)
    order = list(range(k + 1, 2 * k + 1)) + list(range(1, k + 1))
    choi = permute_qubits(out, order).matrix
    dim_in, dim_out = code.secret_dim, 2 ** k
    rows = [r * dim_out + a for r in range(dim_in) for a in range(dim_out)]
    choi = choi[np.ix_(rows, rows)] * dim_in
    return Channel.from_choi(choi, dim_in, dim_out)


def pipeline_two_qubit_count(code: CodeSpec, erased_subset: Sequence[int], decode_mode: str = "mcm",
                             table: Optional[CorrectionTable] = None) -> int:
    """Two-qubit gates the noisy pipeline charges: encoder plus decoder (or recovery network)."""
    count = code.encoding.two_qubit_count()
    if code.is_qutrit:
        return count + recovery_circuit(code.recovery_pair(erased_subset)).two_qubit_count()
    table = table or code.table_for(erased_subset)
    return count + decoder_circuit(code, table, decode_mode).two_qubit_count()


def idle_pipeline(code: CodeSpec, state: State, two_qubit_gates: int,
                  gate_noise: Optional[float] = None) -> DensityMatrix:
    """
    Baseline: the secret passes through `two_qubit_gates` identity gates, each followed by
    the gate-noise channel. A qubit secret is paired with a fresh idle ancilla that is
    discarded at the end; a qutrit secret uses its own two qubits.
    """
    dm = as_density(state)
    width = dm.n_qubits
    if code.secret_width == 1:
        dm = dm.tensor(StateVector.zero(1).to_density())
        pair = (1, width + 1)
    else:
        pair = (1, 2)
    if gate_noise:
        for _ in range(two_qubit_gates):
            dm = depolarize(dm, pair, gate_noise)
    return partial_trace(dm, range(1, width + 1))


def baseline_channel(code: CodeSpec, two_qubit_gates: int, gate_noise: Optional[float] = None) -> Channel:
    out = idle_pipeline(code, maximally_entangled(code), two_qubit_gates, gate_noise)
    return _channel_from_output(code, out)


def output_state(channel: Channel) -> np.ndarray:
    """(id ⊗ N)(|Φ+><Φ+|) as a matrix, reference first."""
    return channel.choi() / channel.dim_in
