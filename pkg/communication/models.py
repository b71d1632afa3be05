"""
Pydantic models for every JSON input the harness accepts
"""

from typing import Dict, List, Literal, Optional

from pydantic import AliasChoices, BaseModel, Field, field_validator, model_validator

SUITES = ("swap", "entfid", "privacy", "tables", "mcm-vs-dcm", "baseline")
SCHEMES = ("five_qubit", "steane", "qutrit")


class QubitReadout(BaseModel):
    """Readout flip probabilities of one qubit"""
    p01: float = Field(0.0, ge=0.0, le=1.0, description="P(read 1 | prepared 0)")
    p10: float = Field(0.0, ge=0.0, le=1.0, description="P(read 0 | prepared 1)")


class CalibrationConfig(BaseModel):
    """Per-qubit readout calibration, qubit 1 first"""
    qubits: List[QubitReadout] = Field(..., min_length=1, description="One entry per measured qubit")


class ReadoutConfig(BaseModel):
    """Readout noise: uniform rates, or an explicit per-qubit calibration"""
    p01: float = Field(0.0, ge=0.0, le=1.0, description="Uniform P(read 1 | prepared 0)")
    p10: Optional[float] = Field(None, ge=0.0, le=1.0, description="Uniform P(read 0 | prepared 1); defaults to p01")
    qubits: Optional[List[QubitReadout]] = Field(None, description="Per-qubit rates; overrides the uniform ones")

    def rates(self, n_qubits: int) -> CalibrationConfig:
        """Calibration for the first n_qubits measured qubits."""
        if self.qubits:
            if len(self.qubits) < n_qubits:
                raise ValueError(f"readout calibration lists {len(self.qubits)} qubits, {n_qubits} needed")
            return CalibrationConfig(qubits=self.qubits[:n_qubits])
        p10 = self.p01 if self.p10 is None else self.p10
        return CalibrationConfig(qubits=[QubitReadout(p01=self.p01, p10=p10)] * n_qubits)

    @property
    def active(self) -> bool:
        if self.qubits:
            return any(q.p01 or q.p10 for q in self.qubits)
        return bool(self.p01 or self.p10)


class NoiseConfig(BaseModel):
    """Noise applied during a run"""
    two_qubit_p: float = Field(0.0, ge=0.0, le=1.0,
                                validation_alias=AliasChoices("two_qubit_p", "two_qubit_depolarizing"),
                                description="Depolarizing strength after each two-qubit gate")
    readout: Optional[ReadoutConfig] = Field(None, description="Readout errors on sampled measurements")


class ExperimentConfig(BaseModel):
    """Validated experiment configuration"""
    suite: Literal["swap", "entfid", "privacy", "tables", "mcm-vs-dcm", "baseline"]
    scheme: Literal["five_qubit", "steane", "qutrit"] = "five_qubit"
    erase: List[int] = Field(default_factory=list, description="Erased qubits (share numbers for qutrit)")
    decoder: Literal["mcm", "dcm"] = "mcm"
    shots: int = Field(1024, ge=1, description="Shots per job")
    jobs: int = Field(10, ge=1, description="Number of jobs")
    seed: int = Field(20240501, ge=0, lt=2 ** 64, description="Master seed")
    noise: NoiseConfig = Field(default_factory=NoiseConfig)
    mitigate: bool = Field(False, description="Fill metric_mitigated using the readout calibration")
    allow_uncorrectable: bool = Field(False, description="Permit erasures the code cannot correct")
    baseline_metric: Literal["swap", "entfid"] = "swap"
    workers: int = Field(1, ge=1, description="Thread pool size")
    bootstrap_resamples: int = Field(10000, ge=1)
    confidence: float = Field(0.99, gt=0.0, lt=1.0)
    out: Optional[str] = Field(None, description="Output path; stdout when omitted")
    format: Literal["csv", "json"] = "csv"

    @field_validator("erase")
    @classmethod
    def _distinct_positive(cls, value: List[int]) -> List[int]:
        if any(q < 1 for q in value):
            raise ValueError("erased labels are 1-based")
        if len(set(value)) != len(value):
            raise ValueError("erased labels must be distinct")
        return sorted(value)

    @model_validator(mode="after")
    def _mitigation_needs_readout(self) -> "ExperimentConfig":
        if self.mitigate and (self.noise.readout is None or not self.noise.readout.active):
            raise ValueError("--mitigate needs nonzero readout rates in the noise config")
        return self


class GateModel(BaseModel):
    """One circuit op in JSON form"""
    kind: Literal["gate", "measure", "reset", "cond_gate"] = "gate"
    name: Optional[str] = None
    targets: List[int] = Field(default_factory=list)
    params: List[float] = Field(default_factory=list)
    qubit: Optional[int] = None
    clbit: Optional[int] = None
    value: int = Field(1, ge=0, le=1)

    @model_validator(mode="after")
    def _fields_for_kind(self) -> "GateModel":
        if self.kind in ("gate", "cond_gate") and (not self.name or not self.targets):
            raise ValueError(f"{self.kind} needs a name and targets")
        if self.kind in ("measure", "reset") and self.qubit is None:
            raise ValueError(f"{self.kind} needs a qubit")
        if self.kind in ("measure", "cond_gate") and self.clbit is None:
            raise ValueError(f"{self.kind} needs a clbit")
        return self


class CircuitModel(BaseModel):
    """Circuit JSON: qubit count, classical bit count and ordered ops"""
    n_qubits: int = Field(..., ge=1, le=14)
    n_clbits: int = Field(0, ge=0)
    ops: List[GateModel] = Field(default_factory=list)


class TableRowModel(BaseModel):
    syndrome: str = Field(..., pattern=r"^[01]*$")
    correction: str = Field(..., pattern=r"^[+-]?i?[IXYZ]+$")
    error: Optional[str] = Field(None, pattern=r"^[IXYZ]+$")


class TableModel(BaseModel):
    """Correction table JSON: erased subset and syndrome rows"""
    subset: List[int] = Field(default_factory=list)
    rows: List[TableRowModel] = Field(..., min_length=1)

    @model_validator(mode="after")
    def _uniform_width(self) -> "TableModel":
        widths = {len(r.syndrome) for r in self.rows}
        if len(widths) > 1:
            raise ValueError(f"syndromes of mixed width {sorted(widths)}")
        return self


class TomographyModel(BaseModel):
    """Tomography JSON: per-setting counts or probabilities"""
    n: int = Field(..., ge=1, le=6)
    shots: Optional[int] = Field(None, ge=1)
    settings: Dict[str, Dict[str, float]]

    @field_validator("settings")
    @classmethod
    def _labels(cls, value: Dict[str, Dict[str, float]]) -> Dict[str, Dict[str, float]]:
        for label, counts in value.items():
            if set(label) - set("XYZ"):
                raise ValueError(f"setting {label!r} is not a string over X, Y, Z")
            if any(c < 0 for c in counts.values()):
                raise ValueError(f"setting {label!r} has negative counts")
        return value
