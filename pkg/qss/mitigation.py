"""
Readout-error injection and matrix-free measurement mitigation.

The assignment matrix is the tensor product of per-qubit confusion matrices
A_q[measured, prepared]. Mitigation solves A x = y on the span of the observed
bitstrings only, evaluating matrix entries on demand.
"""

import logging
import warnings
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as la
import scipy.sparse.linalg as spla

from .errors import MitigationError
from .metrics import nearest_probability

logger = logging.getLogger(__name__)

DIRECT_SOLVE_MAX = 10
GMRES_TOL = 1e-8
GMRES_MAXITER = 200
SUM_ATOL = 1e-9

Counts = Dict[str, float]


@dataclass(frozen=True)
class ReadoutCalibration:
    """Per-qubit flip probabilities: p01 = P(read 1 | prepared 0), p10 = P(read 0 | prepared 1)."""
    p01: Tuple[float, ...]
    p10: Tuple[float, ...]

    def __post_init__(self):
        p01 = tuple(float(p) for p in self.p01)
        p10 = tuple(float(p) for p in self.p10)
        if len(p01) != len(p10) or not p01:
            raise MitigationError("calibration needs matching, nonempty p01 and p10 lists")
        if any(not 0.0 <= p <= 1.0 for p in p01 + p10):
            raise MitigationError("flip probabilities must lie in [0, 1]")
        object.__setattr__(self, "p01", p01)
        object.__setattr__(self, "p10", p10)

    @property
    def n_qubits(self) -> int:
        return len(self.p01)

    @classmethod
    def uniform(cls, n_qubits: int, p01: float, p10: Optional[float] = None) -> "ReadoutCalibration":
        return cls((p01,) * n_qubits, ((p01 if p10 is None else p10),) * n_qubits)

    @classmethod
    def identity(cls, n_qubits: int) -> "ReadoutCalibration":
        return cls.uniform(n_qubits, 0.0)

    def matrices(self) -> np.ndarray:
        """Stack of 2x2 confusion matrices, columns indexed by the prepared bit."""
        mats = np.empty((self.n_qubits, 2, 2))
        for q, (a, b) in enumerate(zip(self.p01, self.p10)):
            mats[q] = [[1 - a, b], [a, 1 - b]]
        return mats

    def subset(self, qubits: Sequence[int]) -> "ReadoutCalibration":
        """Calibration of the listed (1-based) qubits, in that order."""
        return ReadoutCalibration(tuple(self.p01[q - 1] for q in qubits), tuple(self.p10[q - 1] for q in qubits))

    def to_dict(self) -> Dict[str, Any]:
        return {"qubits": [{"p01": a, "p10": b} for a, b in zip(self.p01, self.p10)]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ReadoutCalibration":
        qubits = data.get("qubits", [])
        return cls(tuple(q["p01"] for q in qubits), tuple(q["p10"] for q in qubits))


@dataclass
class QuasiDistribution:
    """Bitstring weights summing to 1; individual weights may be negative."""
    weights: Dict[str, float] = field(default_factory=dict)
    solver: str = ""

    def total(self) -> float:
        return float(sum(self.weights.values()))

    def to_dict(self) -> Dict[str, float]:
        return dict(self.weights)


def _bits(strings: Sequence[str]) -> np.ndarray:
    return np.array([[int(c) for c in s] for s in strings], dtype=np.intp)


def _check_width(strings: Sequence[str], calib: ReadoutCalibration) -> None:
    widths = {len(s) for s in strings}
    if widths != {calib.n_qubits}:
        raise MitigationError(f"bitstrings of width {sorted(widths)} do not match a "
                              f"{calib.n_qubits}-qubit calibration")


def corrupt_counts(ideal: Dict[str, float], calib: ReadoutCalibration, shots: int,
                   rng: np.random.Generator) -> Dict[str, int]:
    """Sample ideal outcomes, then flip each bit independently through its confusion matrix."""
    if shots < 1:
        raise MitigationError(f"shots must be at least 1, got {shots}")
    strings = sorted(ideal)
    _check_width(strings, calib)
    probs = np.array([ideal[s] for s in strings], dtype=float)
    probs = np.clip(probs, 0, None)
    draws = rng.multinomial(shots, probs / probs.sum())
    p01 = np.array(calib.p01)
    p10 = np.array(calib.p10)
    observed: Dict[str, int] = {}
    for string, count in zip(strings, draws):
        if not count:
            continue
        bits = np.array([int(c) for c in string], dtype=np.intp)
        flip_p = np.where(bits == 1, p10, p01)
        flips = rng.random((count, calib.n_qubits)) < flip_p
        readouts = bits ^ flips
        labels, tallies = np.unique(["".join(map(str, row)) for row in readouts], return_counts=True)
        for label, tally in zip(labels, tallies):
            observed[str(label)] = observed.get(str(label), 0) + int(tally)
    return dict(sorted(observed.items()))


class _RestrictedAssignment:
    """Entries of the tensor-product assignment matrix on the observed strings, computed row by row."""

    def __init__(self, strings: Sequence[str], calib: ReadoutCalibration):
        self.bits = _bits(strings)
        self.mats = calib.matrices()
        self.size = len(strings)
        self.col_norms = np.zeros(self.size)
        for i in range(self.size):
            self.col_norms += self.row(i, normalized=False)

    def row(self, i: int, normalized: bool = True) -> np.ndarray:
        qubits = np.arange(self.bits.shape[1])
        entries = self.mats[qubits, self.bits[i][None, :], self.bits].prod(axis=1)
        return entries / self.col_norms if normalized else entries

    def dense(self) -> np.ndarray:
        return np.array([self.row(i) for i in range(self.size)])

    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x).reshape(-1)
        return np.array([self.row(i) @ x for i in range(self.size)])


def mitigate(counts: Counts, calib: ReadoutCalibration, direct_max: int = DIRECT_SOLVE_MAX,
             tol: float = GMRES_TOL, maxiter: int = GMRES_MAXITER) -> QuasiDistribution:
    """
    Undo readout errors on the observed bitstrings.

    Up to `direct_max` observed strings the restricted system is LU-factorized;
    above that it is solved with unpreconditioned GMRES against a matrix-free operator.

    Args:
        counts: Observed counts (or expected frequencies) per bitstring
        calib: Per-qubit readout calibration
        direct_max: Largest observed set solved directly
        tol: GMRES relative tolerance
        maxiter: GMRES iteration cap

    Returns:
        QuasiDistribution over the observed strings, summing to 1
    """
    strings = sorted(s for s, c in counts.items() if c)
    if not strings:
        raise MitigationError("cannot mitigate an empty set of counts")
    _check_width(strings, calib)
    y = np.array([counts[s] for s in strings], dtype=float)
    y = y / y.sum()
    system = _RestrictedAssignment(strings, calib)
    if np.any(system.col_norms <= 0):
        raise MitigationError("calibration gives zero weight to an observed bitstring")

    if len(strings) <= direct_max:
        solver = "direct"
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", la.LinAlgWarning)
            lu, piv = la.lu_factor(system.dense(), check_finite=False)
        if np.min(np.abs(np.diag(lu))) < 1e-13:
            raise MitigationError("restricted assignment matrix is singular")
        x = la.lu_solve((lu, piv), y, check_finite=False)
    else:
        solver = "gmres"
        operator = spla.LinearOperator((system.size, system.size), matvec=system.matvec, dtype=float)
        x, info = spla.gmres(operator, y, rtol=tol, atol=tol, maxiter=maxiter)
        if info:
            raise MitigationError(f"GMRES did not converge (info={info})")

    if not np.all(np.isfinite(x)) or abs(x.sum()) < 1e-15:
        raise MitigationError("restricted assignment system has no usable solution")
    x = x / x.sum()
    logger.debug("mitigated %d strings with the %s solver", len(strings), solver)
    return QuasiDistribution({s: float(v) for s, v in zip(strings, x)}, solver)


def to_probabilities(quasi: QuasiDistribution) -> Dict[str, float]:
    """Closest (L2) probability distribution on the quasi-distribution's support."""
    strings = sorted(quasi.weights)
    if not strings:
        return {}
    values = np.array([quasi.weights[s] for s in strings])
    if abs(values.sum() - 1.0) > SUM_ATOL:
        raise MitigationError(f"quasi-distribution sums to {values.sum():.12f}")
    projected = nearest_probability(values)
    return {s: float(p) for s, p in zip(strings, projected)}


def normalize_counts(counts: Counts) -> Dict[str, float]:
    total = float(sum(counts.values()))
    if total <= 0:
        raise MitigationError("counts are empty")
    return {s: c / total for s, c in sorted(counts.items()) if c}


def total_variation(p: Dict[str, float], q: Dict[str, float]) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


def apply_assignment(ideal: Dict[str, float], calib: ReadoutCalibration) -> Dict[str, float]:
    """Exact expected readout distribution A·p over all 2^n strings (dense; meant for small n)."""
    n = calib.n_qubits
    full = np.zeros(2 ** n)
    for s, p in ideal.items():
        full[int(s, 2)] = p
    mats: List[np.ndarray] = list(calib.matrices())
    tensor = full.reshape((2,) * n)
    for q, mat in enumerate(mats):
        tensor = np.moveaxis(np.tensordot(mat, tensor, axes=([1], [q])), 0, q)
    out = tensor.reshape(-1)
    return {format(i, f"0{n}b"): float(v) for i, v in enumerate(out) if v > 0}
