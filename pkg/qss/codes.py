"""
The three secret sharing schemes: five-qubit ((3,5)), Steane ((5,7)) and the
((2,3)) qutrit scheme carried on qubit pairs.

Scheme data (generators, encoders, printed correction tables) is bundled in
data/codes.json and loaded once per process with load_code().
"""

import itertools
import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, FrozenSet, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import CodeError, ConsistencyError, UncorrectableSubsetError
from .qcore import (
    RESET_KRAUS,
    Circuit,
    ClbitRecord,
    Conditional,
    DensityMatrix,
    GateSpec,
    Measure,
    NoiseHook,
    State,
    StateVector,
    apply_circuit,
    apply_kraus,
    as_density,
    controlled_swap,
    defer_measurements,
    partial_trace,
    permute_qubits,
    toffoli,
    trace_distance,
)
from .stabilizer import (
    CorrectionTable,
    GeneratorSet,
    PauliString,
    conjugate_pauli,
    derive_correction_table,
    table_consistency_check,
    verify_encoding,
)

logger = logging.getLogger(__name__)

CODES_PATH = Path(__file__).resolve().parent / "data" / "codes.json"
ANGLE_ATOL = 1e-12
EMBEDDING_ATOL = 1e-12

DECODE_MODES = ("mcm", "dcm")
SHARE_PAIRS = ("12", "23", "31")


class SubsetClass(str, Enum):
    AUTHORIZED = "authorized"
    UNAUTHORIZED_PRIVATE = "unauthorized_private"
    UNAUTHORIZED_LEAKY = "unauthorized_leaky"


@dataclass(frozen=True)
class SecretSpec:
    """Bloch angles of a qubit secret, or the two angles of a qutrit secret (radians)."""
    kind: str = "qubit"
    theta: float = 0.0
    phi: float = 0.0
    theta1: float = 0.0
    theta2: float = 0.0

    def __post_init__(self):
        if self.kind == "qubit":
            _check_angle("theta", self.theta, np.pi)
            _check_angle("phi", self.phi, 2 * np.pi)
        elif self.kind == "qutrit":
            _check_angle("theta1", self.theta1, 2 * np.pi)
            _check_angle("theta2", self.theta2, np.pi)
        else:
            raise CodeError(f"secret kind must be 'qubit' or 'qutrit', got {self.kind!r}")

    @classmethod
    def from_degrees(cls, kind: str, first: float, second: float) -> "SecretSpec":
        """(theta, phi) for a qubit, (theta1, theta2) for a qutrit, in degrees."""
        a, b = np.deg2rad(first), np.deg2rad(second)
        if kind == "qutrit":
            return cls(kind="qutrit", theta1=a, theta2=b)
        return cls(kind=kind, theta=a, phi=b)

    def degrees(self) -> Tuple[float, float]:
        """Reported angle pair: (theta, phi) or (theta1, theta2)."""
        if self.kind == "qutrit":
            return float(np.rad2deg(self.theta1)), float(np.rad2deg(self.theta2))
        return float(np.rad2deg(self.theta)), float(np.rad2deg(self.phi))

    def to_dict(self) -> Dict[str, Any]:
        if self.kind == "qutrit":
            return {"kind": self.kind, "theta1": self.theta1, "theta2": self.theta2}
        return {"kind": self.kind, "theta": self.theta, "phi": self.phi}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SecretSpec":
        return cls(kind=data.get("kind", "qubit"), theta=data.get("theta", 0.0), phi=data.get("phi", 0.0),
                   theta1=data.get("theta1", 0.0), theta2=data.get("theta2", 0.0))


def _check_angle(name: str, value: float, upper: float) -> None:
    if not -ANGLE_ATOL <= value <= upper + ANGLE_ATOL:
        raise CodeError(f"{name}={value} outside [0, {upper:.6f}]")


@dataclass(frozen=True, eq=False)
class CodeSpec:
    """One secret sharing scheme, fully built (encoder verified, tables derived)."""
    name: str
    kind: str
    n_physical: int
    distance: int
    threshold: int
    encoding: Circuit
    secret_register: int
    syndrome_registers: Tuple[int, ...] = ()
    generators: Optional[GeneratorSet] = None
    readout_generators: Tuple[PauliString, ...] = ()
    correction_tables: Dict[Tuple[int, ...], CorrectionTable] = field(default_factory=dict)
    stored_tables: Dict[Tuple[int, ...], CorrectionTable] = field(default_factory=dict)
    uncorrectable: FrozenSet[Tuple[int, ...]] = frozenset()
    shares: int = 0
    recovery_pairs: Dict[str, str] = field(default_factory=dict)
    description: str = ""

    @property
    def is_qutrit(self) -> bool:
        return self.kind == "qutrit"

    @property
    def secret_width(self) -> int:
        return 2 if self.is_qutrit else 1

    @property
    def secret_dim(self) -> int:
        return 3 if self.is_qutrit else 2

    @property
    def secret_qubits(self) -> Tuple[int, ...]:
        if self.is_qutrit:
            return share_qubits(self.secret_register)
        return (self.secret_register,)

    @property
    def labels(self) -> Tuple[int, ...]:
        """Names of the parties holding shares: qubit indices, or share numbers for the qutrit scheme."""
        count = self.shares if self.is_qutrit else self.n_physical
        return tuple(range(1, count + 1))

    @property
    def max_erasure(self) -> int:
        """
        Erasure size up to which every subset is tabulated when the code loads, and the
        widest subset the privacy scan visits. Larger erasures can still be correctable
        (Steane survives losing 1,3,5,7); is_correctable derives those on demand.
        """
        count = len(self.labels)
        return count - (count // 2 + 1)

    def physical_qubits(self, subset: Sequence[int]) -> Tuple[int, ...]:
        subset = _normalize_subset(subset)
        for label in subset:
            if label not in self.labels:
                raise CodeError(f"{self.name}: {label} is not a valid share label")
        if self.is_qutrit:
            return tuple(q for s in subset for q in share_qubits(s))
        return subset

    def is_correctable(self, subset: Sequence[int]) -> bool:
        subset = _normalize_subset(subset)
        if self.is_qutrit:
            return len(subset) <= 1
        if subset in self.correction_tables:
            return True
        if subset in self.uncorrectable:
            return False
        try:
            self.correction_tables[subset] = derive_correction_table(self, subset)
        except UncorrectableSubsetError:
            return False
        return True

    def table_for(self, subset: Sequence[int]) -> CorrectionTable:
        subset = _normalize_subset(subset)
        if subset in self.correction_tables:
            return self.correction_tables[subset]
        if self.is_qutrit:
            raise CodeError("the qutrit scheme has no syndrome tables")
        if subset in self.uncorrectable:
            raise UncorrectableSubsetError(f"{self.name}: erasure of {list(subset)} is not correctable")
        return derive_correction_table(self, subset)

    def default_decoder_table(self) -> CorrectionTable:
        """Decoder used when an uncorrectable erasure is studied on purpose: the largest stored table."""
        if not self.stored_tables:
            raise CodeError(f"{self.name} ships no stored tables")
        subset = max(self.stored_tables, key=lambda s: (len(s), s))
        return self.correction_tables[subset]

    def recovery_pair(self, erased_shares: Sequence[int]) -> str:
        erased = _normalize_subset(erased_shares)
        if not erased:
            return "12"
        if len(erased) > 1:
            raise UncorrectableSubsetError(f"qutrit scheme cannot recover from erasing shares {list(erased)}")
        return self.recovery_pairs[str(erased[0])]


def _normalize_subset(subset: Union[Sequence[int], int, None]) -> Tuple[int, ...]:
    if subset is None:
        return ()
    if isinstance(subset, (int, np.integer)):
        return (int(subset),)
    return tuple(sorted(int(q) for q in subset))


def share_qubits(share: int) -> Tuple[int, int]:
    """Qubits (high bit, low bit) carrying qutrit share s."""
    return 2 * share - 1, 2 * share


# ---------------------------------------------------------------------------
# Loading
# ---------------------------------------------------------------------------

def _load_bundle(path: Path = CODES_PATH) -> Dict[str, Any]:
    try:
        with open(path, "r") as f:
            return json.load(f)
    except FileNotFoundError as e:
        raise CodeError(f"code bundle {path} is missing") from e
    except json.JSONDecodeError as e:
        raise CodeError(f"code bundle {path} is not valid JSON: {e}") from e


@lru_cache(maxsize=None)
def load_code(name: str) -> CodeSpec:
    """Build a scheme from the bundle: verify its encoder, derive and cross-check its tables."""
    bundle = _load_bundle()
    if name not in bundle:
        raise CodeError(f"unknown scheme {name!r}; choose from {sorted(bundle)}")
    data = bundle[name]
    if data.get("kind") == "qutrit":
        return _build_qutrit(name, data)
    return _build_stabilizer(name, data)


def _build_stabilizer(name: str, data: Dict[str, Any]) -> CodeSpec:
    gens = GeneratorSet(tuple(PauliString.from_text(g) for g in data["generators"]),
                        PauliString.from_text(data["logical_z"]), PauliString.from_text(data["logical_x"]))
    encoding = Circuit.from_dict(data["encoding"])
    secret = int(data["secret_register"])
    registers = tuple(int(r) for r in data["syndrome_registers"])

    report = verify_encoding(encoding, gens, registers, secret)
    if not report.passed:
        raise CodeError(f"{name}: encoder does not map onto the stabilizer group: "
                        f"{[c.to_dict() for c in report.mismatches]}")

    readout = tuple(conjugate_pauli(encoding, PauliString.single(encoding.n_qubits, r, "Z")) for r in registers)
    code = CodeSpec(name=name, kind="stabilizer", n_physical=int(data["n_physical"]),
                    distance=int(data["distance"]), threshold=int(data["threshold"]), encoding=encoding,
                    secret_register=secret, syndrome_registers=registers, generators=gens,
                    readout_generators=readout, description=data.get("description", ""))

    tables: Dict[Tuple[int, ...], CorrectionTable] = {}
    uncorrectable = set()
    for size in range(code.max_erasure + 1):
        for subset in itertools.combinations(code.labels, size):
            try:
                tables[subset] = derive_correction_table(code, subset)
            except UncorrectableSubsetError:
                uncorrectable.add(subset)

    stored = {}
    for raw in data.get("tables", []):
        table = CorrectionTable.from_dict(raw)
        key = _normalize_subset(table.subset)
        stored[key] = table
        if key not in tables:
            raise ConsistencyError(f"{name}: stored table for {list(key)} describes an uncorrectable erasure")
        check = table_consistency_check(tables[key], table)
        if not check.consistent:
            logger.warning("%s: stored table for %s disagrees with the derived one in %d row(s)",
                           name, list(key), len(check.mismatches))

    code.correction_tables.update(tables)
    code.stored_tables.update(stored)
    object.__setattr__(code, "uncorrectable", frozenset(uncorrectable))
    logger.info("loaded %s: %d correctable erasure subsets, %d uncorrectable, %d stored tables",
                name, len(tables), len(uncorrectable), len(stored))
    return code


def _build_qutrit(name: str, data: Dict[str, Any]) -> CodeSpec:
    return CodeSpec(name=name, kind="qutrit", n_physical=int(data["n_physical"]),
                    distance=int(data["distance"]), threshold=int(data["threshold"]),
                    encoding=qutrit_encoder(), secret_register=int(data["secret_register"]),
                    shares=int(data["shares"]), recovery_pairs=dict(data["recovery_pairs"]),
                    description=data.get("description", ""))


# ---------------------------------------------------------------------------
# Qutrit gate networks
# ---------------------------------------------------------------------------

def _prepare_pair(high: int, low: int, alpha: float, beta: float, gamma: float) -> List[GateSpec]:
    """alpha|00> + beta|01> + gamma|10> on (high, low) from |00>, real amplitudes."""
    a = 2 * np.arctan2(gamma, np.hypot(alpha, beta))
    b = 2 * np.arctan2(beta, alpha)
    return [
        GateSpec("RY", (high,), (a,)),
        # RY(b) on low, controlled on high being 0
        GateSpec("X", (high,)),
        GateSpec("RY", (low,), (b / 2,)),
        GateSpec("CNOT", (high, low)),
        GateSpec("RY", (low,), (-b / 2,)),
        GateSpec("CNOT", (high, low)),
        GateSpec("X", (high,)),
    ]


def _controlled_increment(control: int, high: int, low: int, step: int) -> List[GateSpec]:
    """Add `step` (1 or 2) mod 3 to the embedded qutrit (high, low) when control is 1; |11> is left alone."""
    swap = controlled_swap(control, high, low)
    cycle = [GateSpec("X", (high,))] + toffoli(control, high, low) + [GateSpec("X", (high,))]
    return swap + cycle if step == 1 else cycle + swap


def modular_add(source: int, target: int, sign: int = 1) -> List[GateSpec]:
    """Share target += sign * share source (mod 3)."""
    if source == target:
        raise CodeError("modular addition needs two different shares")
    src_high, src_low = share_qubits(source)
    dst_high, dst_low = share_qubits(target)
    # source value 1 lives on its low qubit, value 2 on its high qubit
    low_step, high_step = (1, 2) if sign > 0 else (2, 1)
    return (_controlled_increment(src_low, dst_high, dst_low, low_step)
            + _controlled_increment(src_high, dst_high, dst_low, high_step))


def qutrit_encoder() -> Circuit:
    """|j> on share 1 -> sum_k |k, k+j, k+2j> / sqrt(3) across shares 1..3."""
    third = 1 / np.sqrt(3)
    gates = _prepare_pair(*share_qubits(2), third, third, third)
    gates += modular_add(2, 3, sign=-1)
    # inverse of the 12 recovery
    gates += modular_add(2, 1, sign=-1)
    gates += modular_add(1, 2, sign=-1)
    return Circuit.from_gates(6, gates)


def _parse_pair(pair: Union[str, int, Sequence[int]]) -> Tuple[int, int]:
    text = pair if isinstance(pair, str) else (str(pair) if isinstance(pair, (int, np.integer))
                                               else "".join(str(p) for p in pair))
    if text not in SHARE_PAIRS:
        raise CodeError(f"share pair must be one of {SHARE_PAIRS}, got {pair!r}")
    return int(text[0]), int(text[1])


def recovery_circuit(pair: Union[str, int, Sequence[int]]) -> Circuit:
    """R_ij: add share i into share j, then share j into share i; the secret lands in share i."""
    first, second = _parse_pair(pair)
    return Circuit.from_gates(6, modular_add(first, second) + modular_add(second, first))


def qutrit_recover(state: State, share_pair: Union[str, int, Sequence[int]],
                   noise: Optional[NoiseHook] = None) -> State:
    """Run R_ij on an embedded three-share state (extra reference qubits may follow)."""
    circuit = recovery_circuit(share_pair).shifted(0, state.n_qubits)
    return apply_circuit(state, circuit, noise=noise)[0]


# ---------------------------------------------------------------------------
# Secrets, encoding, erasure, decoding
# ---------------------------------------------------------------------------

def qutrit_amplitudes(spec: SecretSpec) -> Tuple[float, float, float]:
    alpha = np.cos(spec.theta2 / 2)
    beta = np.sin(spec.theta2 / 2) * np.cos(spec.theta1)
    gamma = np.sin(spec.theta2 / 2) * np.sin(spec.theta1)
    return float(alpha), float(beta), float(gamma)


def prepare_secret(spec: SecretSpec) -> StateVector:
    """cos(θ/2)|0> + e^{iφ} sin(θ/2)|1>, or α|00> + β|01> + γ|10> for a qutrit."""
    if spec.kind == "qutrit":
        alpha, beta, gamma = qutrit_amplitudes(spec)
        return StateVector(2, np.array([alpha, beta, gamma, 0.0], dtype=complex))
    return StateVector(1, np.array([np.cos(spec.theta / 2), np.exp(1j * spec.phi) * np.sin(spec.theta / 2)]))


def secret_circuit(spec: SecretSpec) -> Circuit:
    """Gate-level preparation of prepare_secret(spec) from |0...0> (equal up to global phase)."""
    if spec.kind == "qutrit":
        return Circuit.from_gates(2, _prepare_pair(1, 2, *qutrit_amplitudes(spec)))
    return Circuit.from_gates(1, [GateSpec("RY", (1,), (spec.theta,)), GateSpec("RZ", (1,), (spec.phi,))])


def _embedded_leakage(state: State) -> float:
    """Population of |11> on the first two qubits."""
    probs = state.probabilities().reshape(4, -1)
    return float(probs[3].sum())


def _embed_secret(code: CodeSpec, secret: State) -> State:
    """Place the secret in its registers, zeros elsewhere, extra input qubits after the code."""
    k = code.secret_width
    n = code.n_physical
    extra = secret.n_qubits - k
    if extra < 0:
        raise CodeError(f"{code.name} expects a {k}-qubit secret, got {secret.n_qubits} qubit(s)")
    if code.is_qutrit and _embedded_leakage(secret) > EMBEDDING_ATOL:
        raise CodeError("qutrit secret has weight on the unused |11> level")
    zeros = n - k
    if isinstance(secret, StateVector):
        full = secret.tensor(StateVector.zero(zeros))
    else:
        full = secret.tensor(StateVector.zero(zeros).to_density())
    secret_qubits = code.secret_qubits
    order = []
    next_zero = k + extra + 1
    for q in range(1, n + 1):
        if q in secret_qubits:
            order.append(secret_qubits.index(q) + 1)
        else:
            order.append(next_zero)
            next_zero += 1
    order.extend(range(k + 1, k + extra + 1))
    return permute_qubits(full, order)


def encode(code: CodeSpec, secret: State, noise: Optional[NoiseHook] = None) -> State:
    """
    Encode a secret into the scheme's physical qubits.

    Any qubits of `secret` beyond the secret itself are carried along untouched as
    reference qubits after the code block. With a noise hook the result is a DensityMatrix.
    """
    state = _embed_secret(code, secret)
    circuit = code.encoding.shifted(0, state.n_qubits)
    return apply_circuit(state, circuit, noise=noise)[0]


def logical_basis(code: CodeSpec) -> List[StateVector]:
    """Encoded |0>_L, |1>_L (and |2>_L for the qutrit scheme)."""
    if code.is_qutrit:
        kets = [StateVector.from_label(label) for label in ("00", "01", "10")]
    else:
        kets = [StateVector.from_label(label) for label in ("0", "1")]
    return [encode(code, ket) for ket in kets]


def erase_to_fresh(state: State, subset: Sequence[int]) -> DensityMatrix:
    """Replace each listed qubit by a fresh |0>, keeping positions."""
    qubits = _normalize_subset(subset)
    if len(set(qubits)) >= state.n_qubits:
        raise CodeError("erasure cannot remove every qubit")
    dm = as_density(state)
    for q in qubits:
        dm = apply_kraus(dm, RESET_KRAUS, [q])
    return dm


def erase(code: CodeSpec, state: State, subset: Sequence[int]) -> DensityMatrix:
    """Erase the shares named by `subset` (qubits, or share numbers for the qutrit scheme)."""
    return erase_to_fresh(state, code.physical_qubits(subset))


def decoder_circuit(code: CodeSpec, table: CorrectionTable, mode: str = "mcm",
                    n_qubits: Optional[int] = None) -> Circuit:
    """
    U† followed by syndrome readout and correction of the secret register.

    mcm measures the syndrome registers and applies the correction through
    classically conditioned Paulis, one per syndrome bit; dcm is the same circuit
    with the measurements deferred, so the correction becomes controlled Paulis.
    """
    if mode not in DECODE_MODES:
        raise CodeError(f"decode mode must be one of {DECODE_MODES}, got {mode!r}")
    registers = code.syndrome_registers
    ops: List[Any] = list(code.encoding.inverse().ops)
    ops += [Measure(reg, bit) for bit, reg in enumerate(registers)]
    for bit, letter in enumerate(table.bitwise_corrections()):
        if letter != "I":
            ops.append(Conditional(GateSpec(letter, (code.secret_register,)), bit, 1))
    circuit = Circuit(code.n_physical, len(registers), tuple(ops))
    if n_qubits is not None:
        circuit = circuit.shifted(0, n_qubits)
    return defer_measurements(circuit) if mode == "dcm" else circuit


def decode(code: CodeSpec, state: State, erased_subset: Sequence[int], mode: str = "mcm",
           rng: Optional[np.random.Generator] = None, noise: Optional[NoiseHook] = None,
           table: Optional[CorrectionTable] = None) -> Tuple[DensityMatrix, ClbitRecord]:
    """
    Recover the secret after an erasure.

    Returns the state of the secret register (plus any reference qubits after the code
    block) and the syndrome record: sampled when an rng is given in mcm mode, otherwise
    the outcome distribution. The qutrit scheme ignores `mode` and `table`.
    """
    width = state.n_qubits
    references = tuple(range(code.n_physical + 1, width + 1))
    if code.is_qutrit:
        pair = code.recovery_pair(erased_subset)
        recovered = qutrit_recover(as_density(state), pair, noise=noise)
        keep = share_qubits(int(pair[0])) + references
        return partial_trace(recovered, keep), ClbitRecord((), {"": 1.0})

    if mode not in DECODE_MODES:
        raise CodeError(f"decode mode must be one of {DECODE_MODES}, got {mode!r}")
    table = table or code.table_for(erased_subset)
    circuit = decoder_circuit(code, table, mode, width)
    sample = rng if mode == "mcm" else None
    out, record = apply_circuit(as_density(state), circuit, rng=sample, noise=noise)
    missing = {s: p for s, p in record.distribution.items() if p > 1e-12 and table.lookup(s) is None}
    if missing and noise is None:
        syndrome = min(missing)
        raise UncorrectableSubsetError(
            f"{code.name}: syndrome {syndrome} is missing from the table for {list(table.subset)}")
    if missing:
        # gate noise reaches syndromes outside the table; the bitwise corrections still apply
        logger.debug("%s: %.3e of the syndrome mass lies outside the table for %s",
                     code.name, sum(missing.values()), list(table.subset))
    return partial_trace(out, code.secret_qubits + references), record


# ---------------------------------------------------------------------------
# Access structure
# ---------------------------------------------------------------------------

def probe_secrets(code: CodeSpec) -> List[StateVector]:
    """Secrets used to test whether a share subset carries information."""
    if code.is_qutrit:
        third = 1 / np.sqrt(3)
        amps = [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [third, third, third, 0],
                [1 / np.sqrt(2), 1j / np.sqrt(2), 0, 0], [0, 1 / np.sqrt(2), -1j / np.sqrt(2), 0]]
    else:
        s = 1 / np.sqrt(2)
        amps = [[1, 0], [0, 1], [s, s], [s, 1j * s], [np.cos(0.3), np.exp(0.7j) * np.sin(0.3)]]
    return [StateVector.from_amplitudes(a) for a in amps]


def reduced_secret_state(code: CodeSpec, secret: State, subset: Sequence[int]) -> DensityMatrix:
    """State held by the parties in `subset` after encoding `secret`."""
    qubits = code.physical_qubits(subset)
    if not qubits:
        raise CodeError("subset must name at least one share")
    return partial_trace(encode(code, secret), qubits)


def privacy_leakage(code: CodeSpec, subset: Sequence[int], probes: Optional[Sequence[StateVector]] = None) -> float:
    """Largest trace distance between the subset's reduced states over the probe secrets."""
    probes = list(probes) if probes is not None else probe_secrets(code)
    states = [reduced_secret_state(code, secret, subset) for secret in probes]
    worst = 0.0
    for a, b in itertools.combinations(states, 2):
        worst = max(worst, trace_distance(a, b))
    return worst


def classify_subset(code: CodeSpec, subset: Sequence[int], atol: float = 1e-9) -> SubsetClass:
    """Authorized iff the complement's erasure is correctable; otherwise private or leaky."""
    subset = _normalize_subset(subset)
    code.physical_qubits(subset)
    if not subset or len(subset) >= len(code.labels):
        raise CodeError(f"subset {list(subset)} must be a nonempty proper subset of {list(code.labels)}")
    complement = tuple(q for q in code.labels if q not in subset)
    if code.is_correctable(complement):
        return SubsetClass.AUTHORIZED
    leakage = privacy_leakage(code, subset)
    logger.debug("%s: subset %s leaks %.3e", code.name, list(subset), leakage)
    if leakage <= atol:
        return SubsetClass.UNAUTHORIZED_PRIVATE
    return SubsetClass.UNAUTHORIZED_LEAKY
