"""
Dense simulation of qubit registers.

Conventions used everywhere in the package:
    - Public qubit indices are 1-based. Qubit 1 is the leftmost letter of a Pauli
      string and the most significant bit of kets and bitstrings.
    - Classical bit indices are 0-based.
    - Circuit ops are applied in list order, so the circuit unitary is G_m ... G_1.
"""

import logging
import string
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import CircuitError, StateError

logger = logging.getLogger(__name__)

MAX_QUBITS = 14
STATE_ATOL = 1e-9

_SQ2 = 1 / np.sqrt(2)

# canonical name -> (qubit arity, parameter arity)
GATE_ARITY: Dict[str, Tuple[int, int]] = {
    "H": (1, 0), "X": (1, 0), "Y": (1, 0), "Z": (1, 0),
    "S": (1, 0), "SDG": (1, 0), "SX": (1, 0), "SXDG": (1, 0),
    "RX": (1, 1), "RY": (1, 1), "RZ": (1, 1),
    "CNOT": (2, 0), "CZ": (2, 0), "SWAP": (2, 0),
}

GATE_ALIASES: Dict[str, str] = {
    "h": "H", "x": "X", "y": "Y", "z": "Z", "s": "S",
    "sdg": "SDG", "s†": "SDG", "sx": "SX", "√x": "SX", "sxdg": "SXDG", "√x†": "SXDG",
    "rx": "RX", "ry": "RY", "rz": "RZ",
    "cx": "CNOT", "cnot": "CNOT", "cz": "CZ", "swap": "SWAP",
}

# names used in the circuit JSON format
JSON_NAMES: Dict[str, str] = {
    "H": "h", "X": "x", "Y": "y", "Z": "z", "S": "s", "SDG": "sdg", "SX": "sx",
    "SXDG": "sxdg", "RX": "rx", "RY": "ry", "RZ": "rz", "CNOT": "cx", "CZ": "cz", "SWAP": "swap",
}

TWO_QUBIT_GATES = frozenset({"CNOT", "CZ", "SWAP"})

_FIXED_MATRICES: Dict[str, np.ndarray] = {
    "H": np.array([[1, 1], [1, -1]], dtype=complex) * _SQ2,
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "S": np.array([[1, 0], [0, 1j]], dtype=complex),
    "SDG": np.array([[1, 0], [0, -1j]], dtype=complex),
    "SX": 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]], dtype=complex),
    "SXDG": 0.5 * np.array([[1 - 1j, 1 + 1j], [1 + 1j, 1 - 1j]], dtype=complex),
    "CNOT": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),
    "CZ": np.diag([1, 1, 1, -1]).astype(complex),
    "SWAP": np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex),
}

_INVERSE_NAMES = {"S": "SDG", "SDG": "S", "SX": "SXDG", "SXDG": "SX"}

# Kraus operators of the reset-to-|0> (erasure) map
RESET_KRAUS: Tuple[np.ndarray, np.ndarray] = (
    np.array([[1, 0], [0, 0]], dtype=complex),
    np.array([[0, 1], [0, 0]], dtype=complex),
)


def canonical_gate_name(name: str) -> str:
    """Map any accepted spelling of a gate name to its canonical form."""
    if name in GATE_ARITY:
        return name
    key = name.lower() if isinstance(name, str) else name
    if key in GATE_ALIASES:
        return GATE_ALIASES[key]
    raise CircuitError(f"unknown gate {name!r}")


# ---------------------------------------------------------------------------
# States
# ---------------------------------------------------------------------------

def _check_width(n_qubits: int) -> None:
    if not isinstance(n_qubits, (int, np.integer)) or n_qubits < 1:
        raise StateError(f"qubit count must be a positive integer, got {n_qubits!r}")
    if n_qubits > MAX_QUBITS:
        raise StateError(f"dense simulation is limited to {MAX_QUBITS} qubits, got {n_qubits}")


@dataclass(frozen=True, eq=False)
class StateVector:
    """Pure state of n qubits; amplitudes indexed with qubit 1 as the most significant bit."""
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        _check_width(self.n_qubits)
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape[0] != 2 ** self.n_qubits:
            raise StateError(f"expected {2 ** self.n_qubits} amplitudes, got {amps.shape[0]}")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > STATE_ATOL:
            raise StateError(f"state is not normalized (norm² = {norm:.3e})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def zero(cls, n_qubits: int) -> "StateVector":
        amps = np.zeros(2 ** n_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(n_qubits, amps)

    @classmethod
    def from_label(cls, label: str) -> "StateVector":
        """Computational basis state from a bitstring such as '0101'."""
        if not label or set(label) - {"0", "1"}:
            raise StateError(f"invalid basis label {label!r}")
        amps = np.zeros(2 ** len(label), dtype=complex)
        amps[int(label, 2)] = 1.0
        return cls(len(label), amps)

    @classmethod
    def from_amplitudes(cls, amplitudes: Sequence[complex], normalize: bool = False) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        n = int(round(np.log2(amps.shape[0]))) if amps.shape[0] else 0
        if amps.shape[0] != 2 ** n:
            raise StateError(f"amplitude count {amps.shape[0]} is not a power of two")
        if normalize:
            norm = np.linalg.norm(amps)
            if norm == 0:
                raise StateError("cannot normalize the zero vector")
            amps = amps / norm
        return cls(n, amps)

    def tensor(self, other: "StateVector") -> "StateVector":
        return StateVector(self.n_qubits + other.n_qubits, np.kron(self.amplitudes, other.amplitudes))

    def to_density(self) -> "DensityMatrix":
        return DensityMatrix(self.n_qubits, np.outer(self.amplitudes, self.amplitudes.conj()))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Mixed state of n qubits, same index convention as StateVector."""
    n_qubits: int
    matrix: np.ndarray

    def __post_init__(self):
        _check_width(self.n_qubits)
        mat = np.asarray(self.matrix, dtype=complex)
        dim = 2 ** self.n_qubits
        if mat.shape != (dim, dim):
            raise StateError(f"expected a {dim}x{dim} matrix, got shape {mat.shape}")
        if not np.allclose(mat, mat.conj().T, atol=STATE_ATOL):
            raise StateError("density matrix is not Hermitian")
        tr = np.trace(mat).real
        if abs(tr - 1.0) > STATE_ATOL:
            raise StateError(f"density matrix trace is {tr:.12f}, expected 1")
        mat = 0.5 * (mat + mat.conj().T)
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def maximally_mixed(cls, n_qubits: int) -> "DensityMatrix":
        dim = 2 ** n_qubits
        return cls(n_qubits, np.eye(dim, dtype=complex) / dim)

    def tensor(self, other: "DensityMatrix") -> "DensityMatrix":
        return DensityMatrix(self.n_qubits + other.n_qubits, np.kron(self.matrix, other.matrix))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def is_positive(self, atol: float = 1e-10) -> bool:
        return bool(self.eigenvalues().min() >= -atol)

    def probabilities(self) -> np.ndarray:
        return np.clip(np.diag(self.matrix).real, 0.0, None)

    def to_density(self) -> "DensityMatrix":
        return self


State = Union[StateVector, DensityMatrix]


def as_density(state: State) -> DensityMatrix:
    return state.to_density()


# ---------------------------------------------------------------------------
# Circuit ops
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GateSpec:
    """A named unitary gate. Targets are 1-based; for CNOT the first target is the control."""
    name: str
    targets: Tuple[int, ...]
    params: Tuple[float, ...] = ()

    def __post_init__(self):
        name = canonical_gate_name(self.name)
        targets = tuple(int(t) for t in self.targets)
        params = tuple(float(p) for p in self.params)
        n_targets, n_params = GATE_ARITY[name]
        if len(targets) != n_targets:
            raise CircuitError(f"{name} takes {n_targets} target(s), got {len(targets)}")
        if len(params) != n_params:
            raise CircuitError(f"{name} takes {n_params} parameter(s), got {len(params)}")
        if len(set(targets)) != len(targets):
            raise CircuitError(f"{name} targets must be distinct, got {targets}")
        if any(t < 1 for t in targets):
            raise CircuitError(f"qubit indices are 1-based, got {targets}")
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "params", params)

    def matrix(self) -> np.ndarray:
        if self.name in _FIXED_MATRICES:
            return _FIXED_MATRICES[self.name]
        theta = self.params[0]
        c, s = np.cos(theta / 2), np.sin(theta / 2)
        if self.name == "RX":
            return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
        if self.name == "RY":
            return np.array([[c, -s], [s, c]], dtype=complex)
        return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])

    def inverse(self) -> "GateSpec":
        if self.name in ("RX", "RY", "RZ"):
            return GateSpec(self.name, self.targets, (-self.params[0],))
        return GateSpec(_INVERSE_NAMES.get(self.name, self.name), self.targets)

    def shifted(self, offset: int) -> "GateSpec":
        return GateSpec(self.name, tuple(t + offset for t in self.targets), self.params)

    @property
    def is_two_qubit(self) -> bool:
        return self.name in TWO_QUBIT_GATES

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": "gate", "name": JSON_NAMES[self.name], "targets": list(self.targets),
                "params": list(self.params)}


@dataclass(frozen=True)
class Measure:
    qubit: int
    clbit: int

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": "measure", "qubit": self.qubit, "clbit": self.clbit}


@dataclass(frozen=True)
class Reset:
    qubit: int

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": "reset", "qubit": self.qubit}


@dataclass(frozen=True)
class Conditional:
    """Apply `gate` iff classical bit `clbit` currently holds `value`."""
    gate: GateSpec
    clbit: int
    value: int = 1

    def __post_init__(self):
        if self.value not in (0, 1):
            raise CircuitError(f"conditional value must be 0 or 1, got {self.value!r}")

    def to_dict(self) -> Dict[str, Any]:
        data = self.gate.to_dict()
        data.update({"kind": "cond_gate", "clbit": self.clbit, "value": self.value})
        return data


Op = Union[GateSpec, Measure, Reset, Conditional]


@dataclass(frozen=True)
class Circuit:
    """Ordered list of ops over n_qubits qubits and n_clbits classical bits."""
    n_qubits: int
    n_clbits: int = 0
    ops: Tuple[Op, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))
        if self.n_qubits < 1:
            raise CircuitError("circuit needs at least one qubit")
        written = set()
        for position, op in enumerate(self.ops):
            if isinstance(op, GateSpec):
                self._check_qubits(op.targets, position)
            elif isinstance(op, Measure):
                self._check_qubits((op.qubit,), position)
                self._check_clbit(op.clbit, position)
                written.add(op.clbit)
            elif isinstance(op, Reset):
                self._check_qubits((op.qubit,), position)
            elif isinstance(op, Conditional):
                self._check_qubits(op.gate.targets, position)
                self._check_clbit(op.clbit, position)
                if op.clbit not in written:
                    raise CircuitError(
                        f"op {position}: conditional reads clbit {op.clbit} before any measurement writes it")
            else:
                raise CircuitError(f"op {position}: unsupported op {op!r}")

    def _check_qubits(self, qubits: Iterable[int], position: int) -> None:
        for q in qubits:
            if not 1 <= q <= self.n_qubits:
                raise CircuitError(f"op {position}: qubit {q} out of range 1..{self.n_qubits}")

    def _check_clbit(self, clbit: int, position: int) -> None:
        if not 0 <= clbit < self.n_clbits:
            raise CircuitError(f"op {position}: clbit {clbit} out of range 0..{self.n_clbits - 1}")

    @classmethod
    def from_gates(cls, n_qubits: int, gates: Iterable[GateSpec]) -> "Circuit":
        return cls(n_qubits, 0, tuple(gates))

    @property
    def gates(self) -> List[GateSpec]:
        return [op for op in self.ops if isinstance(op, GateSpec)]

    @property
    def is_unitary(self) -> bool:
        return all(isinstance(op, GateSpec) for op in self.ops)

    def two_qubit_count(self) -> int:
        count = 0
        for op in self.ops:
            gate = op.gate if isinstance(op, Conditional) else op
            if isinstance(gate, GateSpec) and gate.is_two_qubit:
                count += 1
        return count

    def then(self, other: "Circuit") -> "Circuit":
        """Run self, then other, on the wider of the two registers."""
        return Circuit(max(self.n_qubits, other.n_qubits), max(self.n_clbits, other.n_clbits),
                       self.ops + other.ops)

    def inverse(self) -> "Circuit":
        if not self.is_unitary:
            raise CircuitError("only gate-only circuits can be inverted")
        return Circuit(self.n_qubits, self.n_clbits, tuple(g.inverse() for g in reversed(self.ops)))

    def shifted(self, offset: int = 0, n_qubits: Optional[int] = None) -> "Circuit":
        """Relabel qubit q as q + offset on a register of n_qubits (default: just wide enough)."""
        width = n_qubits if n_qubits is not None else self.n_qubits + offset
        ops = []
        for op in self.ops:
            if isinstance(op, GateSpec):
                ops.append(op.shifted(offset))
            elif isinstance(op, Measure):
                ops.append(Measure(op.qubit + offset, op.clbit))
            elif isinstance(op, Reset):
                ops.append(Reset(op.qubit + offset))
            else:
                ops.append(Conditional(op.gate.shifted(offset), op.clbit, op.value))
        return Circuit(width, self.n_clbits, tuple(ops))

    def unitary(self) -> np.ndarray:
        if not self.is_unitary:
            raise CircuitError("circuit contains non-unitary ops")
        dim = 2 ** self.n_qubits
        tensor = np.eye(dim, dtype=complex).reshape((2,) * self.n_qubits + (dim,))
        for gate in self.ops:
            tensor = _apply_to_axes(tensor, gate.matrix(), [t - 1 for t in gate.targets])
        return tensor.reshape(dim, dim)

    def to_dict(self) -> Dict[str, Any]:
        return {"n_qubits": self.n_qubits, "n_clbits": self.n_clbits,
                "ops": [op.to_dict() for op in self.ops]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Circuit":
        ops: List[Op] = []
        for raw in data.get("ops", []):
            kind = raw.get("kind", "gate")
            if kind == "gate":
                ops.append(GateSpec(raw["name"], tuple(raw["targets"]), tuple(raw.get("params", ()))))
            elif kind == "measure":
                ops.append(Measure(int(raw["qubit"]), int(raw["clbit"])))
            elif kind == "reset":
                ops.append(Reset(int(raw["qubit"])))
            elif kind == "cond_gate":
                gate = GateSpec(raw["name"], tuple(raw["targets"]), tuple(raw.get("params", ())))
                ops.append(Conditional(gate, int(raw["clbit"]), int(raw.get("value", 1))))
            else:
                raise CircuitError(f"unknown op kind {kind!r}")
        return cls(int(data["n_qubits"]), int(data.get("n_clbits", 0)), tuple(ops))


# ---------------------------------------------------------------------------
# Tensor kernels
# ---------------------------------------------------------------------------

def _apply_to_axes(tensor: np.ndarray, u: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    """Contract a 2^k x 2^k operator into the given axes of a (2,)*n tensor."""
    k = len(axes)
    u = np.asarray(u).reshape((2,) * (2 * k))
    out = np.tensordot(u, tensor, axes=(list(range(k, 2 * k)), list(axes)))
    return np.moveaxis(out, list(range(k)), list(axes))


def _check_targets(n_qubits: int, targets: Sequence[int]) -> List[int]:
    targets = [int(t) for t in targets]
    if len(set(targets)) != len(targets):
        raise CircuitError(f"targets must be distinct, got {targets}")
    for t in targets:
        if not 1 <= t <= n_qubits:
            raise CircuitError(f"qubit {t} out of range 1..{n_qubits}")
    return [t - 1 for t in targets]


def _evolve_matrix(matrix: np.ndarray, n: int, op: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    """op rho op† on the given (0-based) qubit axes of an unnormalized 2^n x 2^n matrix."""
    tensor = matrix.reshape((2,) * (2 * n))
    tensor = _apply_to_axes(tensor, op, axes)
    tensor = _apply_to_axes(tensor, np.conj(op), [a + n for a in axes])
    return tensor.reshape(2 ** n, 2 ** n)


def apply_matrix(state: State, u: np.ndarray, targets: Sequence[int]) -> State:
    """Apply a unitary on the listed qubits (first listed = most significant)."""
    axes = _check_targets(state.n_qubits, targets)
    u = np.asarray(u, dtype=complex)
    if u.shape != (2 ** len(axes), 2 ** len(axes)):
        raise CircuitError(f"operator shape {u.shape} does not fit {len(axes)} target(s)")
    n = state.n_qubits
    if isinstance(state, StateVector):
        tensor = _apply_to_axes(state.amplitudes.reshape((2,) * n), u, axes)
        return StateVector(n, tensor.reshape(-1))
    return DensityMatrix(n, _evolve_matrix(state.matrix, n, u, axes))


def apply_kraus(dm: DensityMatrix, kraus: Sequence[np.ndarray], targets: Sequence[int]) -> DensityMatrix:
    """sum_k K rho K† with each K acting on the listed qubits."""
    axes = _check_targets(dm.n_qubits, targets)
    n = dm.n_qubits
    out = np.zeros_like(dm.matrix)
    for op in kraus:
        out = out + _evolve_matrix(dm.matrix, n, np.asarray(op, dtype=complex), axes)
    return DensityMatrix(n, out)


def _einsum_partial_trace(matrix: np.ndarray, n: int, keep: Sequence[int]) -> np.ndarray:
    letters = string.ascii_letters
    rows = list(letters[:n])
    cols = list(letters[n:2 * n])
    for q in range(n):
        if q not in keep:
            cols[q] = rows[q]
    out = "".join(rows[q] for q in keep) + "".join(cols[q] for q in keep)
    spec = "".join(rows) + "".join(cols) + "->" + out
    reduced = np.einsum(spec, matrix.reshape((2,) * (2 * n)))
    dim = 2 ** len(keep)
    return reduced.reshape(dim, dim)


def partial_trace(state: State, keep: Iterable[int]) -> DensityMatrix:
    """Trace out every qubit not in `keep`; kept qubits stay in ascending order."""
    keep = sorted(set(int(q) for q in keep))
    if not keep:
        raise StateError("partial trace needs at least one kept qubit")
    dm = as_density(state)
    axes = _check_targets(dm.n_qubits, keep)
    if len(axes) == dm.n_qubits:
        return dm
    return DensityMatrix(len(axes), _einsum_partial_trace(dm.matrix, dm.n_qubits, axes))


def depolarize(dm: DensityMatrix, targets: Sequence[int], p: float) -> DensityMatrix:
    """rho -> (1-p) rho + p (I/2^k on targets) ⊗ tr_targets(rho)."""
    if not 0.0 <= p <= 1.0:
        raise StateError(f"depolarizing strength must lie in [0, 1], got {p}")
    if p == 0.0:
        return dm
    n = dm.n_qubits
    axes = _check_targets(n, targets)
    rest = [q for q in range(n) if q not in axes]
    k = len(axes)
    letters = string.ascii_letters
    rows, cols = letters[:n], letters[n:2 * n]
    mixed = np.eye(2 ** k, dtype=complex).reshape((2,) * (2 * k)) / 2 ** k
    full = "".join(rows) + "".join(cols)
    if rest:
        reduced = _einsum_partial_trace(dm.matrix, n, rest).reshape((2,) * (2 * len(rest)))
        spec = ("".join(rows[q] for q in rest) + "".join(cols[q] for q in rest) + ","
                + "".join(rows[q] for q in axes) + "".join(cols[q] for q in axes) + "->" + full)
        replaced = np.einsum(spec, reduced, mixed)
    else:
        spec = "".join(rows[q] for q in axes) + "".join(cols[q] for q in axes) + "->" + full
        replaced = np.einsum(spec, mixed)
    out = (1 - p) * dm.matrix + p * replaced.reshape(2 ** n, 2 ** n)
    return DensityMatrix(n, out)


def permute_qubits(state: State, order: Sequence[int]) -> State:
    """New qubit i+1 is old qubit order[i]."""
    n = state.n_qubits
    order = [int(q) - 1 for q in order]
    if sorted(order) != list(range(n)):
        raise StateError(f"{order} is not a permutation of 1..{n}")
    if isinstance(state, StateVector):
        tensor = state.amplitudes.reshape((2,) * n).transpose(order)
        return StateVector(n, tensor.reshape(-1))
    perm = order + [q + n for q in order]
    tensor = state.matrix.reshape((2,) * (2 * n)).transpose(perm)
    return DensityMatrix(n, tensor.reshape(2 ** n, 2 ** n))


# ---------------------------------------------------------------------------
# Gates and circuits
# ---------------------------------------------------------------------------

def apply_gate(state: State, gate: GateSpec) -> State:
    if not isinstance(gate, GateSpec):
        raise CircuitError(f"expected a GateSpec, got {gate!r}")
    return apply_matrix(state, gate.matrix(), gate.targets)


@dataclass(frozen=True)
class ClbitRecord:
    """Classical register after a run.

    bits holds the sampled values (None where a clbit was never written, or when the
    run averaged over outcomes). distribution maps the full clbit string (clbit 0 first,
    '-' for unwritten) to its probability.
    """
    bits: Tuple[Optional[int], ...]
    distribution: Dict[str, float]

    @property
    def value(self) -> Optional[str]:
        if any(b is None for b in self.bits):
            return None
        return "".join(str(b) for b in self.bits)


NoiseHook = Callable[[DensityMatrix, GateSpec], DensityMatrix]


def _branch_key(bits: Sequence[Optional[int]]) -> str:
    return "".join("-" if b is None else str(b) for b in bits)


def _project(matrix: np.ndarray, n: int, qubit: int, outcome: int) -> np.ndarray:
    projector = np.zeros((2, 2), dtype=complex)
    projector[outcome, outcome] = 1.0
    return _evolve_matrix(matrix, n, projector, [qubit - 1])


def apply_circuit(state: State, circuit: Circuit, rng: Optional[np.random.Generator] = None,
                  noise: Optional[NoiseHook] = None) -> Tuple[State, ClbitRecord]:
    """
    Run a circuit.

    With an rng, measurements collapse the state by the Born rule and the record
    holds the sampled bits. Without one, a density-matrix run averages over every
    measurement branch (non-selective evolution) and conditional gates act per branch.

    Args:
        state: Input state; must match circuit.n_qubits
        circuit: Circuit to execute
        rng: Random stream for measurement sampling
        noise: Hook called after each applied gate (density-matrix runs only)

    Returns:
        (final state, clbit record)
    """
    if state.n_qubits != circuit.n_qubits:
        raise CircuitError(f"circuit acts on {circuit.n_qubits} qubits, state has {state.n_qubits}")
    measures = any(isinstance(op, (Measure, Reset)) for op in circuit.ops)
    if isinstance(state, StateVector) and (noise is not None or (measures and rng is None)):
        state = state.to_density()

    if isinstance(state, StateVector):
        return _run_pure(state, circuit, rng)
    return _run_mixed(state, circuit, rng, noise)


def _run_pure(state: StateVector, circuit: Circuit, rng: Optional[np.random.Generator]):
    n = state.n_qubits
    psi = state.amplitudes.reshape((2,) * n)
    bits: List[Optional[int]] = [None] * circuit.n_clbits
    for op in circuit.ops:
        if isinstance(op, GateSpec):
            psi = _apply_to_axes(psi, op.matrix(), [t - 1 for t in op.targets])
        elif isinstance(op, Conditional):
            if bits[op.clbit] == op.value:
                psi = _apply_to_axes(psi, op.gate.matrix(), [t - 1 for t in op.gate.targets])
        else:
            axis = op.qubit - 1
            p1 = float(np.sum(np.abs(np.take(psi, 1, axis=axis)) ** 2))
            outcome = int(rng.random() < p1)
            prob = p1 if outcome else 1 - p1
            psi = psi.copy()
            index = [slice(None)] * n
            index[axis] = 1 - outcome
            psi[tuple(index)] = 0
            psi = psi / np.sqrt(prob)
            if isinstance(op, Measure):
                bits[op.clbit] = outcome
            elif outcome == 1:
                psi = _apply_to_axes(psi, _FIXED_MATRICES["X"], [axis])
    final = StateVector(n, psi.reshape(-1))
    return final, ClbitRecord(tuple(bits), {_branch_key(bits): 1.0})


def _run_mixed(state: DensityMatrix, circuit: Circuit, rng: Optional[np.random.Generator],
               noise: Optional[NoiseHook]):
    n = state.n_qubits
    # each branch: (clbits, unnormalized matrix whose trace is the branch probability)
    branches: List[Tuple[Tuple[Optional[int], ...], np.ndarray]] = [
        ((None,) * circuit.n_clbits, state.matrix)]

    def gate_on(matrix: np.ndarray, gate: GateSpec) -> np.ndarray:
        matrix = _evolve_matrix(matrix, n, gate.matrix(), [t - 1 for t in gate.targets])
        if noise is not None:
            weight = np.trace(matrix).real
            if weight > 0:
                matrix = noise(DensityMatrix(n, matrix / weight), gate).matrix * weight
        return matrix

    for op in circuit.ops:
        if isinstance(op, GateSpec):
            branches = [(bits, gate_on(m, op)) for bits, m in branches]
        elif isinstance(op, Conditional):
            branches = [(bits, gate_on(m, op.gate) if bits[op.clbit] == op.value else m)
                        for bits, m in branches]
        elif isinstance(op, Reset):
            branches = [(bits, sum(_evolve_matrix(m, n, k, [op.qubit - 1]) for k in RESET_KRAUS))
                        for bits, m in branches]
        else:
            split = []
            for bits, m in branches:
                for outcome in (0, 1):
                    projected = _project(m, n, op.qubit, outcome)
                    if np.trace(projected).real <= 1e-15:
                        continue
                    new_bits = list(bits)
                    new_bits[op.clbit] = outcome
                    split.append((tuple(new_bits), projected))
            if rng is not None:
                weights = np.array([np.trace(m).real for _, m in split])
                choice = int(rng.choice(len(split), p=weights / weights.sum()))
                bits, m = split[choice]
                split = [(bits, m / weights[choice])]
            branches = _merge_branches(split)

    total = sum(m for _, m in branches)
    distribution: Dict[str, float] = {}
    for bits, m in branches:
        key = _branch_key(bits)
        distribution[key] = distribution.get(key, 0.0) + float(np.trace(m).real)
    if len(branches) == 1:
        record_bits = branches[0][0]
    else:
        record_bits = (None,) * circuit.n_clbits
    return DensityMatrix(n, total), ClbitRecord(tuple(record_bits), distribution)


def _merge_branches(branches):
    merged: Dict[Tuple[Optional[int], ...], np.ndarray] = {}
    for bits, m in branches:
        merged[bits] = merged[bits] + m if bits in merged else m
    return list(merged.items())


# ---------------------------------------------------------------------------
# Measurement statistics and comparisons
# ---------------------------------------------------------------------------

def measure_all(state: State, shots: int, rng: np.random.Generator) -> Dict[str, int]:
    """Sample `shots` computational-basis outcomes; bitstrings are MSB (qubit 1) first."""
    if shots < 1:
        raise StateError(f"shots must be at least 1, got {shots}")
    probs = state.probabilities()
    probs = probs / probs.sum()
    draws = rng.multinomial(shots, probs)
    width = state.n_qubits
    return {format(i, f"0{width}b"): int(c) for i, c in enumerate(draws) if c}


def fidelity(a: State, b: State) -> float:
    """|<a|b>|² for pure states; Uhlmann fidelity (tr sqrt(sqrt(a) b sqrt(a)))² otherwise."""
    if a.n_qubits != b.n_qubits:
        raise StateError(f"cannot compare {a.n_qubits}-qubit and {b.n_qubits}-qubit states")
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        value = abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2
    elif isinstance(a, StateVector):
        value = np.vdot(a.amplitudes, b.matrix @ a.amplitudes).real
    elif isinstance(b, StateVector):
        value = np.vdot(b.amplitudes, a.matrix @ b.amplitudes).real
    else:
        vals, vecs = np.linalg.eigh(a.matrix)
        root = (vecs * np.sqrt(np.clip(vals, 0, None))) @ vecs.conj().T
        inner = np.linalg.eigvalsh(root @ b.matrix @ root)
        value = np.sum(np.sqrt(np.clip(inner, 0, None))) ** 2
    return float(min(max(value, 0.0), 1.0))


def equal_up_to_phase(u: np.ndarray, v: np.ndarray, atol: float = 1e-12) -> bool:
    """True if u = e^{i delta} v for some delta."""
    u = np.asarray(u)
    v = np.asarray(v)
    if u.shape != v.shape:
        return False
    flat = v.reshape(-1)
    pivot = int(np.argmax(np.abs(flat)))
    if abs(flat[pivot]) < atol:
        return bool(np.allclose(u, v, atol=atol))
    phase = u.reshape(-1)[pivot] / flat[pivot]
    if abs(abs(phase) - 1) > atol * 10:
        return False
    return bool(np.allclose(u, phase * v, atol=atol))


# ---------------------------------------------------------------------------
# Decompositions
# ---------------------------------------------------------------------------

def native_decomposition(axis: str, theta: float) -> Circuit:
    """RX or RY on one qubit as a circuit over {RZ, SX}, equal up to global phase."""
    axis = axis.upper()
    if axis == "X":
        gates = [GateSpec("RZ", (1,), (np.pi / 2,)), GateSpec("SX", (1,)),
                 GateSpec("RZ", (1,), (theta + np.pi,)), GateSpec("SX", (1,)),
                 GateSpec("RZ", (1,), (np.pi / 2,))]
    elif axis == "Y":
        gates = [GateSpec("SX", (1,)), GateSpec("RZ", (1,), (theta + np.pi,)),
                 GateSpec("SX", (1,)), GateSpec("RZ", (1,), (np.pi,))]
    else:
        raise CircuitError(f"native decomposition is defined for X and Y rotations, got {axis!r}")
    return Circuit.from_gates(1, gates)


def toffoli(c1: int, c2: int, target: int) -> List[GateSpec]:
    """Six-CNOT Toffoli network, T realized as RZ(pi/4) (exact up to global phase)."""
    t = np.pi / 4

    def rz(q, angle):
        return GateSpec("RZ", (q,), (angle,))

    return [
        GateSpec("H", (target,)),
        GateSpec("CNOT", (c2, target)), rz(target, -t),
        GateSpec("CNOT", (c1, target)), rz(target, t),
        GateSpec("CNOT", (c2, target)), rz(target, -t),
        GateSpec("CNOT", (c1, target)), rz(c2, t), rz(target, t),
        GateSpec("H", (target,)),
        GateSpec("CNOT", (c1, c2)), rz(c1, t), rz(c2, -t),
        GateSpec("CNOT", (c1, c2)),
    ]


def controlled_swap(control: int, a: int, b: int) -> List[GateSpec]:
    """Fredkin gate: CNOT(b,a), Toffoli(control,a,b), CNOT(b,a)."""
    return [GateSpec("CNOT", (b, a))] + toffoli(control, a, b) + [GateSpec("CNOT", (b, a))]


def _controlled(control: int, gate: GateSpec) -> List[GateSpec]:
    (t,) = gate.targets
    if gate.name == "X":
        return [GateSpec("CNOT", (control, t))]
    if gate.name == "Z":
        return [GateSpec("CZ", (control, t))]
    if gate.name == "Y":
        return [GateSpec("SDG", (t,)), GateSpec("CNOT", (control, t)), GateSpec("S", (t,))]
    raise CircuitError(f"no controlled form for conditional {gate.name}")


def defer_measurements(circuit: Circuit) -> Circuit:
    """
    Coherent rewrite of a feed-forward circuit.

    Conditional Pauli gates become controlled gates driven by the measured qubit and
    every measurement moves to the end. A measured qubit may only be used as a control
    after its measurement.
    """
    source: Dict[int, int] = {}
    measured_qubits = set()
    body: List[GateSpec] = []
    tail: List[Measure] = []
    for op in circuit.ops:
        if isinstance(op, Measure):
            source[op.clbit] = op.qubit
            measured_qubits.add(op.qubit)
            tail.append(op)
        elif isinstance(op, Reset):
            raise CircuitError("cannot defer measurements across a reset")
        elif isinstance(op, GateSpec):
            if measured_qubits.intersection(op.targets):
                raise CircuitError(f"{op.name} acts on a qubit after it was measured")
            body.append(op)
        else:
            control = source[op.clbit]
            if control in op.gate.targets:
                raise CircuitError("conditional gate targets its own control qubit")
            if op.value == 0:
                body.append(GateSpec("X", (control,)))
            body.extend(_controlled(control, op.gate))
            if op.value == 0:
                body.append(GateSpec("X", (control,)))
    return Circuit(circuit.n_qubits, circuit.n_clbits, tuple(body) + tuple(tail))


def trace_distance(a: State, b: State) -> float:
    """Half the trace norm of a - b."""
    if a.n_qubits != b.n_qubits:
        raise StateError(f"cannot compare {a.n_qubits}-qubit and {b.n_qubits}-qubit states")
    diff = as_density(a).matrix - as_density(b).matrix
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(diff))))
