"""
Signed Pauli algebra, Clifford conjugation, syndromes and correction tables.
"""

import itertools
import logging
from dataclasses import dataclass, field
from functools import cached_property, reduce
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import CodeError, NonCliffordError, PauliError, UncorrectableSubsetError
from .qcore import Circuit, GateSpec

logger = logging.getLogger(__name__)

LETTERS = "IXYZ"
_PHASE_TEXT = {0: "+", 1: "+i", 2: "-", 3: "-i"}

# single-letter products: (a, b) -> (i-exponent, letter)
_MUL: Dict[Tuple[str, str], Tuple[int, str]] = {}
for _a in LETTERS:
    _MUL[("I", _a)] = (0, _a)
    _MUL[(_a, "I")] = (0, _a)
    _MUL[(_a, _a)] = (0, "I")
for _a, _b, _c in (("X", "Y", "Z"), ("Y", "Z", "X"), ("Z", "X", "Y")):
    _MUL[(_a, _b)] = (1, _c)
    _MUL[(_b, _a)] = (3, _c)

_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class PauliString:
    """i^phase times a tensor product of single-qubit Paulis; letters[0] acts on qubit 1."""
    letters: str
    phase: int = 0

    def __post_init__(self):
        if not self.letters or set(self.letters) - set(LETTERS):
            raise PauliError(f"invalid Pauli letters {self.letters!r}")
        object.__setattr__(self, "phase", int(self.phase) % 4)

    @classmethod
    def from_text(cls, text: str) -> "PauliString":
        """Parse '-XZZXI', '+iY', 'iZZ' and similar."""
        text = text.strip()
        phase = 0
        if text[:1] in "+-":
            phase = 2 if text[0] == "-" else 0
            text = text[1:]
        if text[:1] == "i":
            phase += 1
            text = text[1:]
        return cls(text, phase)

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls("I" * n)

    @classmethod
    def single(cls, n: int, qubit: int, letter: str) -> "PauliString":
        letters = ["I"] * n
        letters[qubit - 1] = letter
        return cls("".join(letters))

    @classmethod
    def on(cls, n: int, qubits: Sequence[int], letters: str) -> "PauliString":
        """Place `letters` on the listed (1-based) qubits of an n-qubit identity."""
        if len(qubits) != len(letters):
            raise PauliError(f"{len(letters)} letters for {len(qubits)} qubits")
        out = ["I"] * n
        for q, letter in zip(qubits, letters):
            if not 1 <= q <= n:
                raise PauliError(f"qubit {q} out of range 1..{n}")
            out[q - 1] = letter
        return cls("".join(out))

    def __len__(self) -> int:
        return len(self.letters)

    def __str__(self) -> str:
        return _PHASE_TEXT[self.phase].replace("+", "") + self.letters if self.phase else self.letters

    def __mul__(self, other: "PauliString") -> "PauliString":
        if len(self) != len(other):
            raise PauliError(f"cannot multiply Paulis of length {len(self)} and {len(other)}")
        phase = self.phase + other.phase
        out = []
        for a, b in zip(self.letters, other.letters):
            k, c = _MUL[(a, b)]
            phase += k
            out.append(c)
        return PauliString("".join(out), phase)

    def times_phase(self, k: int) -> "PauliString":
        return PauliString(self.letters, self.phase + k)

    def dagger(self) -> "PauliString":
        return PauliString(self.letters, -self.phase)

    def commutes_with(self, other: "PauliString") -> bool:
        if len(self) != len(other):
            raise PauliError(f"length mismatch: {len(self)} vs {len(other)}")
        clashes = sum(1 for a, b in zip(self.letters, other.letters) if a != "I" and b != "I" and a != b)
        return clashes % 2 == 0

    def equal_up_to_phase(self, other: "PauliString") -> bool:
        return self.letters == other.letters

    def restrict(self, qubits: Sequence[int]) -> "PauliString":
        """Letters on the listed qubits, phase dropped."""
        return PauliString("".join(self.letters[q - 1] for q in qubits))

    @property
    def weight(self) -> int:
        return sum(1 for a in self.letters if a != "I")

    def symplectic(self) -> np.ndarray:
        """(x | z) bit vector, length 2n."""
        x = [1 if a in "XY" else 0 for a in self.letters]
        z = [1 if a in "ZY" else 0 for a in self.letters]
        return np.array(x + z, dtype=np.uint8)

    def to_matrix(self) -> np.ndarray:
        mat = reduce(np.kron, (_MATRICES[a] for a in self.letters))
        return (1j ** self.phase) * mat


def _p(text: str) -> PauliString:
    return PauliString.from_text(text)


# images of X_j and Z_j under each Clifford gate, on the gate's local qubits
_CLIFFORD_IMAGES: Dict[str, Dict[Tuple[str, int], PauliString]] = {
    "H": {("X", 0): _p("Z"), ("Z", 0): _p("X")},
    "S": {("X", 0): _p("Y"), ("Z", 0): _p("Z")},
    "SDG": {("X", 0): _p("-Y"), ("Z", 0): _p("Z")},
    "SX": {("X", 0): _p("X"), ("Z", 0): _p("-Y")},
    "SXDG": {("X", 0): _p("X"), ("Z", 0): _p("Y")},
    "X": {("X", 0): _p("X"), ("Z", 0): _p("-Z")},
    "Y": {("X", 0): _p("-X"), ("Z", 0): _p("-Z")},
    "Z": {("X", 0): _p("-X"), ("Z", 0): _p("Z")},
    "CNOT": {("X", 0): _p("XX"), ("Z", 0): _p("ZI"), ("X", 1): _p("IX"), ("Z", 1): _p("ZZ")},
    "CZ": {("X", 0): _p("XZ"), ("Z", 0): _p("ZI"), ("X", 1): _p("ZX"), ("Z", 1): _p("IZ")},
    "SWAP": {("X", 0): _p("IX"), ("Z", 0): _p("IZ"), ("X", 1): _p("XI"), ("Z", 1): _p("ZI")},
}


def _local_image(rules: Dict[Tuple[str, int], PauliString], local: str) -> PauliString:
    image = PauliString.identity(len(local))
    for j, letter in enumerate(local):
        if letter == "I":
            continue
        if letter == "Y":
            term = (rules[("X", j)] * rules[("Z", j)]).times_phase(1)
        else:
            term = rules[(letter, j)]
        image = image * term
    return image


def conjugate_pauli(clifford: Union[Circuit, Sequence[GateSpec]], p: PauliString) -> PauliString:
    """
    Return U p U† where U is the unitary of the (Clifford) circuit.

    Gates are processed in circuit order, so each step maps p to g p g†.
    """
    gates = clifford.ops if isinstance(clifford, Circuit) else clifford
    if isinstance(clifford, Circuit) and clifford.n_qubits != len(p):
        raise PauliError(f"circuit has {clifford.n_qubits} qubits, Pauli has {len(p)}")
    letters = list(p.letters)
    phase = p.phase
    for gate in gates:
        if not isinstance(gate, GateSpec):
            raise NonCliffordError(f"{type(gate).__name__} is not a unitary gate")
        rules = _CLIFFORD_IMAGES.get(gate.name)
        if rules is None:
            raise NonCliffordError(f"{gate.name} is not in the Clifford gate set")
        if max(gate.targets) > len(letters):
            raise PauliError(f"{gate.name} acts on qubit {max(gate.targets)} beyond a {len(letters)}-qubit Pauli")
        local = "".join(letters[t - 1] for t in gate.targets)
        if local.count("I") == len(local):
            continue
        image = _local_image(rules, local)
        for j, t in enumerate(gate.targets):
            letters[t - 1] = image.letters[j]
        phase += image.phase
    return PauliString("".join(letters), phase)


@dataclass(frozen=True)
class GeneratorSet:
    """Stabilizer generators with logical operators."""
    generators: Tuple[PauliString, ...]
    logical_z: Optional[PauliString] = None
    logical_x: Optional[PauliString] = None

    def __post_init__(self):
        gens = tuple(g if isinstance(g, PauliString) else PauliString.from_text(g) for g in self.generators)
        object.__setattr__(self, "generators", gens)
        for name in ("logical_z", "logical_x"):
            value = getattr(self, name)
            if isinstance(value, str):
                object.__setattr__(self, name, PauliString.from_text(value))
        lengths = {len(g) for g in gens}
        lengths.update(len(op) for op in (self.logical_z, self.logical_x) if op is not None)
        if len(lengths) > 1:
            raise PauliError(f"generator lengths differ: {sorted(lengths)}")
        for a, b in itertools.combinations(gens, 2):
            if not a.commutes_with(b):
                raise PauliError(f"generators {a} and {b} anticommute")
        for op in (self.logical_z, self.logical_x):
            if op is not None and not all(op.commutes_with(g) for g in gens):
                raise PauliError(f"logical operator {op} does not commute with the generators")
        if self.logical_z is not None and self.logical_x is not None:
            if self.logical_z.commutes_with(self.logical_x):
                raise PauliError("logical X and Z must anticommute")

    @property
    def n_qubits(self) -> int:
        if self.generators:
            return len(self.generators[0])
        return len(self.logical_z) if self.logical_z is not None else 0

    def __len__(self) -> int:
        return len(self.generators)

    def __iter__(self):
        return iter(self.generators)

    @cached_property
    def group(self) -> Tuple[PauliString, ...]:
        """All 2^r signed products of the generators."""
        n = self.n_qubits
        elements = []
        for mask in itertools.product((0, 1), repeat=len(self.generators)):
            element = PauliString.identity(n)
            for bit, g in zip(mask, self.generators):
                if bit:
                    element = element * g
            elements.append(element)
        return tuple(elements)

    def contains(self, p: PauliString, up_to_phase: bool = False) -> bool:
        for element in self.group:
            if element.letters == p.letters and (up_to_phase or element.phase == p.phase):
                return True
        return False


def syndrome_of(error: PauliString, gens: Union[GeneratorSet, Sequence[PauliString]]) -> Tuple[int, ...]:
    """Bit i is 1 iff the error anticommutes with generator i."""
    bits = []
    for g in gens:
        if len(g) != len(error):
            raise PauliError(f"error has length {len(error)}, generator {g} has length {len(g)}")
        bits.append(0 if error.commutes_with(g) else 1)
    return tuple(bits)


def gf2_rank(rows: Iterable[np.ndarray]) -> int:
    mat = np.array(list(rows), dtype=np.uint8) % 2
    if mat.size == 0:
        return 0
    rank = 0
    for col in range(mat.shape[1]):
        hits = np.nonzero(mat[rank:, col])[0]
        if not len(hits):
            continue
        pivot = rank + hits[0]
        mat[[rank, pivot]] = mat[[pivot, rank]]
        for r in range(mat.shape[0]):
            if r != rank and mat[r, col]:
                mat[r] ^= mat[rank]
        rank += 1
        if rank == mat.shape[0]:
            break
    return rank


# ---------------------------------------------------------------------------
# Encoding verification
# ---------------------------------------------------------------------------

@dataclass
class EncodingCheck:
    register: int
    role: str             # "generator" or "logical_z"
    expected: str
    image: str
    status: str           # "exact", "equivalent" or "mismatch"

    def to_dict(self) -> Dict[str, Any]:
        return {"register": self.register, "role": self.role, "expected": self.expected,
                "image": self.image, "status": self.status}


@dataclass
class EncodingReport:
    checks: List[EncodingCheck] = field(default_factory=list)

    @property
    def generator_mismatches(self) -> int:
        return sum(1 for c in self.checks if c.role == "generator" and c.status == "mismatch")

    @property
    def logical_ok(self) -> bool:
        return all(c.status != "mismatch" for c in self.checks if c.role == "logical_z")

    @property
    def passed(self) -> bool:
        return all(c.status != "mismatch" for c in self.checks)

    @property
    def mismatches(self) -> List[EncodingCheck]:
        return [c for c in self.checks if c.status == "mismatch"]

    def to_dict(self) -> Dict[str, Any]:
        return {"passed": self.passed, "generator_mismatches": self.generator_mismatches,
                "logical_ok": self.logical_ok, "checks": [c.to_dict() for c in self.checks]}


def verify_encoding(encoding: Circuit, gens: GeneratorSet,
                    syndrome_registers: Optional[Sequence[int]] = None,
                    secret_register: Optional[int] = None) -> EncodingReport:
    """
    Check that the encoder maps Z on each syndrome register to its generator and Z on
    the secret register to the logical Z.

    A generator check is `exact` when U Z_j U† equals g_j with sign +1, `equivalent`
    when the image is a signed element of the stabilizer group and the images stay
    independent, and `mismatch` otherwise. The logical check accepts Z̄ times any
    stabilizer element. Defaults: registers 1..r for the syndromes and n for the secret.
    """
    n = gens.n_qubits
    if encoding.n_qubits != n:
        raise PauliError(f"encoding acts on {encoding.n_qubits} qubits, generators on {n}")
    registers = list(syndrome_registers or range(1, len(gens) + 1))
    secret = secret_register if secret_register is not None else n
    images = [conjugate_pauli(encoding, PauliString.single(n, r, "Z")) for r in registers]
    independent = gf2_rank(img.symplectic() for img in images) == len(images)

    report = EncodingReport()
    for register, g, image in zip(registers, gens.generators, images):
        if image == g:
            status = "exact"
        elif independent and gens.contains(image):
            status = "equivalent"
        else:
            status = "mismatch"
        report.checks.append(EncodingCheck(register, "generator", str(g), str(image), status))

    if gens.logical_z is not None:
        image = conjugate_pauli(encoding, PauliString.single(n, secret, "Z"))
        if image == gens.logical_z:
            status = "exact"
        elif gens.contains(image * gens.logical_z):
            status = "equivalent"
        else:
            status = "mismatch"
        report.checks.append(EncodingCheck(secret, "logical_z", str(gens.logical_z), str(image), status))

    for check in report.mismatches:
        logger.debug("encoding check failed on register %d: expected %s, got %s",
                     check.register, check.expected, check.image)
    return report


# ---------------------------------------------------------------------------
# Correction tables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CorrectionRow:
    syndrome: str
    correction: PauliString
    error: Optional[str] = None
    full: Optional[PauliString] = None

    def to_dict(self) -> Dict[str, Any]:
        data = {"syndrome": self.syndrome, "correction": self.correction.letters}
        if self.error is not None:
            data["error"] = self.error
        return data


@dataclass(frozen=True)
class CorrectionTable:
    """Syndrome -> correction on the secret register, for one erased subset."""
    subset: Tuple[int, ...]
    rows: Tuple[CorrectionRow, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "subset", tuple(int(q) for q in self.subset))
        object.__setattr__(self, "rows", tuple(self.rows))

    def __len__(self) -> int:
        return len(self.rows)

    @cached_property
    def _by_syndrome(self) -> Dict[str, PauliString]:
        lookup: Dict[str, PauliString] = {}
        for row in self.rows:
            lookup.setdefault(row.syndrome, row.correction)
        return lookup

    def syndromes(self) -> List[str]:
        return sorted(self._by_syndrome)

    def lookup(self, syndrome: Union[str, Sequence[int]]) -> Optional[PauliString]:
        key = syndrome if isinstance(syndrome, str) else "".join(str(int(b)) for b in syndrome)
        return self._by_syndrome.get(key)

    def row_for_error(self, error: str) -> Optional[CorrectionRow]:
        for row in self.rows:
            if row.error == error:
                return row
        return None

    @property
    def degenerate_syndromes(self) -> List[str]:
        counts: Dict[str, int] = {}
        for row in self.rows:
            counts[row.syndrome] = counts.get(row.syndrome, 0) + 1
        return sorted(s for s, c in counts.items() if c > 1)

    def bitwise_corrections(self) -> List[str]:
        """
        Split the table into one Pauli letter per syndrome bit.

        The product of the letters of the set bits reproduces the table's correction
        (up to phase) on every listed syndrome.
        """
        if not self.rows:
            return []
        width = len(self.rows[0].syndrome)
        bits = {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}
        mat = np.array([[int(b) for b in s] + list(bits[c.letters])
                        for s, c in self._by_syndrome.items()], dtype=np.uint8)
        pivots = []
        row = 0
        for col in range(width):
            if row == mat.shape[0]:
                break
            hits = np.nonzero(mat[row:, col])[0]
            if not len(hits):
                continue
            pivot = row + hits[0]
            mat[[row, pivot]] = mat[[pivot, row]]
            for other in range(mat.shape[0]):
                if other != row and mat[other, col]:
                    mat[other] ^= mat[row]
            pivots.append(col)
            row += 1
        if mat[row:, width:].any():
            raise UncorrectableSubsetError(
                f"corrections for subset {self.subset} are not a linear function of the syndrome")
        letters_by_bits = {v: k for k, v in bits.items()}
        letters = ["I"] * width
        for i, col in enumerate(pivots):
            letters[col] = letters_by_bits[(int(mat[i, width]), int(mat[i, width + 1]))]
        return letters

    def to_dict(self) -> Dict[str, Any]:
        return {"subset": list(self.subset), "rows": [row.to_dict() for row in self.rows]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CorrectionTable":
        rows = tuple(
            CorrectionRow(str(r["syndrome"]), PauliString.from_text(r["correction"]), r.get("error"))
            for r in data.get("rows", []))
        return cls(tuple(data.get("subset", [])), rows)


def derive_table(encoding: Circuit, secret_register: int, syndrome_registers: Sequence[int],
                 erased_subset: Sequence[int]) -> CorrectionTable:
    """Enumerate every Pauli error on the subset and read off syndrome and correction."""
    n = encoding.n_qubits
    subset = tuple(int(q) for q in erased_subset)
    if any(not 1 <= q <= n for q in subset) or len(set(subset)) != len(subset):
        raise CodeError(f"invalid erased subset {subset} for a {n}-qubit code")
    decoder = encoding.inverse()
    rows: List[CorrectionRow] = []
    seen: Dict[str, CorrectionRow] = {}
    for letters in itertools.product(LETTERS, repeat=len(subset)):
        label = "".join(letters)
        error = PauliString.on(n, subset, label) if subset else PauliString.identity(n)
        full = conjugate_pauli(decoder, error.dagger())
        syndrome = "".join("1" if full.letters[r - 1] in "XY" else "0" for r in syndrome_registers)
        correction = PauliString(full.letters[secret_register - 1])
        row = CorrectionRow(syndrome, correction, label or None, full)
        previous = seen.get(syndrome)
        if previous is not None and not previous.correction.equal_up_to_phase(correction):
            raise UncorrectableSubsetError(
                f"erasure of {subset} is not correctable: errors {previous.error} and {label} share "
                f"syndrome {syndrome} but need corrections {previous.correction} and {correction}")
        seen.setdefault(syndrome, row)
        rows.append(row)
    table = CorrectionTable(subset, tuple(rows))
    logger.debug("derived table for %s: %d rows, %d distinct syndromes, %d degenerate",
                 subset, len(rows), len(seen), len(table.degenerate_syndromes))
    return table


def derive_correction_table(code: Any, erased_subset: Sequence[int]) -> CorrectionTable:
    """Correction table of a stabilizer code (anything with encoding and register attributes)."""
    if getattr(code, "encoding", None) is None or not getattr(code, "syndrome_registers", None):
        raise CodeError(f"{getattr(code, 'name', code)!r} has no stabilizer decoder")
    return derive_table(code.encoding, code.secret_register, code.syndrome_registers, erased_subset)


@dataclass
class TableCheck:
    subset: Tuple[int, ...]
    rows_checked: int = 0
    mismatches: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def consistent(self) -> bool:
        return not self.mismatches

    def to_dict(self) -> Dict[str, Any]:
        return {"subset": list(self.subset), "rows_checked": self.rows_checked,
                "consistent": self.consistent, "mismatches": self.mismatches}


def table_consistency_check(derived: CorrectionTable, stored: CorrectionTable) -> TableCheck:
    """Row-by-row comparison; corrections compared up to phase."""
    if tuple(sorted(derived.subset)) != tuple(sorted(stored.subset)):
        raise CodeError(f"tables cover different subsets: {derived.subset} vs {stored.subset}")
    check = TableCheck(stored.subset)
    for row in stored.rows:
        check.rows_checked += 1
        expected = derived.lookup(row.syndrome)
        if expected is None:
            check.mismatches.append({"syndrome": row.syndrome, "error": row.error,
                                     "stored": row.correction.letters, "derived": None,
                                     "reason": "syndrome not produced by any error"})
            continue
        if not expected.equal_up_to_phase(row.correction):
            check.mismatches.append({"syndrome": row.syndrome, "error": row.error,
                                     "stored": row.correction.letters, "derived": expected.letters,
                                     "reason": "correction differs"})
            continue
        if row.error is not None:
            source = derived.row_for_error(row.error)
            if source is not None and source.syndrome != row.syndrome:
                check.mismatches.append({"syndrome": row.syndrome, "error": row.error,
                                         "stored": row.correction.letters,
                                         "derived": source.correction.letters,
                                         "reason": f"error produces syndrome {source.syndrome}"})
    stored_syndromes = {row.syndrome for row in stored.rows}
    for syndrome in derived.syndromes():
        if syndrome not in stored_syndromes:
            check.mismatches.append({"syndrome": syndrome, "error": None, "stored": None,
                                     "derived": derived.lookup(syndrome).letters,
                                     "reason": "row missing from stored table"})
    return check
