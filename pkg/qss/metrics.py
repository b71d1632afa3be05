"""
Figures of merit: SWAP test, entanglement fidelity, Pauli state tomography and the
Euclidean projection onto the probability simplex.
"""

import itertools
import logging
from dataclasses import dataclass, field
from functools import lru_cache, reduce
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .channels import Channel, output_state
from .errors import ChannelError, StateError, TomographyError
from .qcore import (
    Circuit,
    DensityMatrix,
    GateSpec,
    State,
    StateVector,
    apply_circuit,
    as_density,
    controlled_swap,
    measure_all,
    partial_trace,
    trace_distance,
)

logger = logging.getLogger(__name__)

SIMPLEX_ATOL = 1e-9
LEAKAGE_ATOL = 1e-9

__all__ = [
    "SwapTestResult", "swap_test", "swap_test_circuit", "entanglement_fidelity", "choi_state", "TomographyData",
    "tomography_collect", "tomography_probabilities", "tomography_reconstruct", "nearest_probability",
    "project_to_density", "fidelity_estimate_weights", "linear_fidelity", "trace_distance",
]


# ---------------------------------------------------------------------------
# SWAP test
# ---------------------------------------------------------------------------

@dataclass
class SwapTestResult:
    exact_p0: float
    sampled_rate: Optional[float] = None
    counts: Optional[Dict[str, int]] = None


def swap_test_circuit(width: int) -> Circuit:
    """Ancilla on qubit 1, first state on 2..width+1, second on width+2..2*width+1."""
    gates = [GateSpec("H", (1,))]
    for i in range(width):
        gates += controlled_swap(1, 2 + i, 2 + width + i)
    gates.append(GateSpec("H", (1,)))
    return Circuit.from_gates(1 + 2 * width, gates)


def swap_test(psi: State, phi: State, shots: Optional[int] = None,
              rng: Optional[np.random.Generator] = None) -> SwapTestResult:
    """
    Probability that the SWAP-test ancilla reads 0, exactly and optionally sampled.

    The exact value is (1 + tr(rho sigma)) / 2, which is (1 + |<psi|phi>|²) / 2 for pure
    inputs. The sampled rate comes from running the interference circuit and drawing
    `shots` ancilla readouts.
    """
    if psi.n_qubits != phi.n_qubits:
        raise StateError(f"cannot compare {psi.n_qubits}-qubit and {phi.n_qubits}-qubit states")
    a, b = as_density(psi), as_density(phi)
    overlap = float(np.real(np.trace(a.matrix @ b.matrix)))
    result = SwapTestResult(exact_p0=min(max((1 + overlap) / 2, 0.5), 1.0))
    if shots is None:
        return result
    if rng is None:
        raise StateError("a sampled SWAP test needs an rng")
    ancilla = DensityMatrix(1, np.array([[1, 0], [0, 0]], dtype=complex))
    joint = ancilla.tensor(a).tensor(b)
    out, _ = apply_circuit(joint, swap_test_circuit(psi.n_qubits))
    counts = measure_all(partial_trace(out, [1]), shots, rng)
    result.counts = counts
    result.sampled_rate = counts.get("0", 0) / shots
    return result


# ---------------------------------------------------------------------------
# Entanglement fidelity
# ---------------------------------------------------------------------------

def entanglement_fidelity(channel: Channel, d: Optional[int] = None) -> float:
    """
    <Φ+_d| (id ⊗ N)(|Φ+_d><Φ+_d|) |Φ+_d>.

    Input level i is identified with output index i, which is the qutrit embedding
    when a 3-level input lands on two qubits; population left on the extra output
    levels is reported as leakage.
    """
    d = d or channel.dim_in
    if channel.dim_in != d or channel.dim_out < d:
        raise ChannelError(f"channel {channel.dim_in}->{channel.dim_out} does not act on a {d}-level system")
    value = sum(abs(np.trace(k[:d, :d])) ** 2 for k in channel.kraus_ops) / d ** 2
    if channel.dim_out > d:
        leakage = sum(float(np.sum(np.abs(k[d:, :]) ** 2)) for k in channel.kraus_ops) / d
        if leakage > LEAKAGE_ATOL:
            logger.warning("channel leaks %.3e of its population outside the %d embedded levels", leakage, d)
    return float(min(max(value, 0.0), 1.0))


def choi_state(channel: Channel) -> Tuple[DensityMatrix, StateVector]:
    """
    (id ⊗ N)(|Φ+_d><Φ+_d|) as a qubit density matrix, reference first, together with
    the ideal |Φ+_d> target. A qutrit reference is padded to two qubits.
    """
    d_in, d_out = channel.dim_in, channel.dim_out
    if channel.n_out is None:
        raise ChannelError(f"output dimension {d_out} is not a whole number of qubits")
    ref_qubits = max(1, int(np.ceil(np.log2(d_in))))
    width = 2 ** ref_qubits * d_out
    matrix = np.zeros((width, width), dtype=complex)
    matrix[:d_in * d_out, :d_in * d_out] = output_state(channel)
    target = np.zeros(width, dtype=complex)
    for r in range(d_in):
        target[r * d_out + r] = 1 / np.sqrt(d_in)
    n = ref_qubits + channel.n_out
    return DensityMatrix(n, matrix), StateVector(n, target)


# ---------------------------------------------------------------------------
# Tomography
# ---------------------------------------------------------------------------

_PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def setting_labels(n_qubits: int) -> List[str]:
    return ["".join(s) for s in itertools.product("XYZ", repeat=n_qubits)]


@dataclass
class TomographyData:
    """Per-setting outcome counts (or exact probabilities when shots is None)."""
    n_qubits: int
    settings: Dict[str, Dict[str, float]] = field(default_factory=dict)
    shots: Optional[int] = None

    def validate(self) -> None:
        expected = set(setting_labels(self.n_qubits))
        missing = expected - set(self.settings)
        extra = set(self.settings) - expected
        if missing or extra:
            raise TomographyError(f"settings incomplete: {len(missing)} missing, {len(extra)} unexpected")
        for label, counts in self.settings.items():
            for outcome in counts:
                if len(outcome) != self.n_qubits or set(outcome) - {"0", "1"}:
                    raise TomographyError(f"setting {label}: invalid outcome {outcome!r}")
            total = sum(counts.values())
            if self.shots is None:
                if abs(total - 1.0) > 1e-9:
                    raise TomographyError(f"setting {label}: probabilities sum to {total}")
            elif total != self.shots:
                raise TomographyError(f"setting {label}: {total} counts, expected {self.shots}")

    def frequencies(self, label: str) -> np.ndarray:
        counts = self.settings[label]
        vec = np.zeros(2 ** self.n_qubits)
        for outcome, value in counts.items():
            vec[int(outcome, 2)] = value
        return vec / (self.shots if self.shots else vec.sum())

    def to_dict(self) -> Dict[str, Any]:
        return {"n": self.n_qubits, "shots": self.shots, "settings": self.settings}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TomographyData":
        return cls(n_qubits=int(data["n"]), settings={k: dict(v) for k, v in data["settings"].items()},
                   shots=data.get("shots"))


def _rotation(label: str) -> Circuit:
    gates = []
    for q, letter in enumerate(label, start=1):
        if letter == "X":
            gates.append(GateSpec("H", (q,)))
        elif letter == "Y":
            gates += [GateSpec("SDG", (q,)), GateSpec("H", (q,))]
    return Circuit.from_gates(len(label), gates)


def _rotated_probabilities(dm: DensityMatrix, label: str) -> np.ndarray:
    rotated, _ = apply_circuit(dm, _rotation(label))
    probs = rotated.probabilities()
    return probs / probs.sum()


def tomography_collect(state: State, shots: int, rng: np.random.Generator) -> TomographyData:
    """Sample every Pauli setting with its own child stream of rng."""
    if shots < 1:
        raise TomographyError(f"shots must be at least 1, got {shots}")
    dm = as_density(state)
    labels = setting_labels(dm.n_qubits)
    streams = rng.spawn(len(labels))
    settings = {}
    for label, stream in zip(labels, streams):
        settings[label] = measure_all(DensityMatrix(dm.n_qubits, np.diag(_rotated_probabilities(dm, label))),
                                      shots, stream)
    return TomographyData(dm.n_qubits, settings, shots)


def tomography_probabilities(state: State) -> TomographyData:
    """Exact outcome probabilities for every setting."""
    dm = as_density(state)
    width = dm.n_qubits
    settings = {}
    for label in setting_labels(width):
        probs = _rotated_probabilities(dm, label)
        settings[label] = {format(i, f"0{width}b"): float(p) for i, p in enumerate(probs) if p > 0}
    return TomographyData(width, settings, None)


@lru_cache(maxsize=None)
def _sign_vector(pauli: str) -> np.ndarray:
    """(-1)^(parity of outcome bits on the non-identity positions), per outcome index."""
    n = len(pauli)
    outcomes = np.arange(2 ** n)
    parity = np.zeros(2 ** n, dtype=int)
    for q, letter in enumerate(pauli):
        if letter != "I":
            parity ^= (outcomes >> (n - 1 - q)) & 1
    return 1 - 2 * parity


def _compatible(pauli: str, labels: List[str]) -> List[str]:
    return [s for s in labels if all(p == "I" or p == c for p, c in zip(pauli, s))]


def _pauli_matrix(pauli: str) -> np.ndarray:
    return reduce(np.kron, (_PAULI_MATRICES[a] for a in pauli))


def tomography_reconstruct(data: TomographyData) -> DensityMatrix:
    """Linear inversion from Pauli expectations, then projection onto density matrices."""
    data.validate()
    n = data.n_qubits
    labels = setting_labels(n)
    freqs = {label: data.frequencies(label) for label in labels}
    estimate = np.zeros((2 ** n, 2 ** n), dtype=complex)
    for letters in itertools.product("IXYZ", repeat=n):
        pauli = "".join(letters)
        signs = _sign_vector(pauli)
        compatible = _compatible(pauli, labels)
        expectation = float(np.mean([freqs[s] @ signs for s in compatible]))
        estimate += expectation * _pauli_matrix(pauli)
    estimate /= 2 ** n
    return DensityMatrix(n, project_to_density(estimate))


def project_to_density(matrix: np.ndarray) -> np.ndarray:
    """Nearest (Frobenius) positive semidefinite unit-trace matrix."""
    hermitian = 0.5 * (matrix + matrix.conj().T)
    vals, vecs = np.linalg.eigh(hermitian)
    vals = nearest_probability(vals / vals.sum())
    return (vecs * vals) @ vecs.conj().T


def nearest_probability(quasi) -> np.ndarray:
    """Euclidean projection of a vector summing to 1 onto the probability simplex."""
    x = np.asarray(quasi, dtype=float)
    if x.ndim != 1 or not x.size or not np.all(np.isfinite(x)):
        raise StateError("quasi-distribution must be a nonempty finite vector")
    if abs(x.sum() - 1.0) > SIMPLEX_ATOL:
        raise StateError(f"quasi-distribution sums to {x.sum():.12f}, expected 1")
    u = np.sort(x)[::-1]
    shifted = np.cumsum(u) - 1.0
    ranks = np.arange(1, x.size + 1)
    support = u - shifted / ranks > 0
    rho = ranks[support][-1]
    threshold = shifted[support][-1] / rho
    return np.maximum(x - threshold, 0.0)


def fidelity_estimate_weights(target: State, n_qubits: Optional[int] = None) -> Dict[str, np.ndarray]:
    """
    Per-setting outcome weights w such that sum_s freq_s · w_s equals <t| rho_lin |t>,
    the overlap of the target with the linear-inversion estimate.
    """
    dm = as_density(target)
    n = n_qubits or dm.n_qubits
    if n != dm.n_qubits:
        raise TomographyError(f"target has {dm.n_qubits} qubits, expected {n}")
    labels = setting_labels(n)
    weights = {label: np.zeros(2 ** n) for label in labels}
    for letters in itertools.product("IXYZ", repeat=n):
        pauli = "".join(letters)
        value = float(np.real(np.trace(dm.matrix @ _pauli_matrix(pauli))))
        if abs(value) < 1e-15:
            continue
        compatible = _compatible(pauli, labels)
        share = value / (2 ** n * len(compatible))
        for label in compatible:
            weights[label] = weights[label] + share * _sign_vector(pauli)
    return weights


def linear_fidelity(data: TomographyData, weights: Dict[str, np.ndarray]) -> float:
    return float(sum(data.frequencies(label) @ w for label, w in weights.items()))
