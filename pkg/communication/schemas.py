"""
Record schemas exchanged between the suite runner and the report writer.
Defines the structure of per-job results and job completion reports.
"""

from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any, Dict, List, Optional

CSV_COLUMNS = [
    "suite", "scheme", "subset", "decoder", "job", "theta_deg", "phi_deg",
    "metric", "metric_mitigated", "ci_low", "ci_high", "seed",
]

SUCCESS = "SUCCESS"
FAILURE = "FAILURE"


def format_subset(subset) -> str:
    return ",".join(str(q) for q in subset)


@dataclass
class ResultRecord:
    """One figure of merit from one job."""
    suite: str
    scheme: str
    subset: str
    decoder: str
    job: int
    theta_deg: Optional[float]
    phi_deg: Optional[float]
    metric: float
    metric_mitigated: Optional[float] = None
    ci_low: Optional[float] = None
    ci_high: Optional[float] = None
    seed: Optional[int] = None
    exact: Optional[float] = None

    def __post_init__(self):
        # numpy scalars would leak their repr into CSV cells
        for name in ("theta_deg", "phi_deg", "metric", "metric_mitigated", "ci_low", "ci_high", "exact"):
            value = getattr(self, name)
            if value is not None:
                setattr(self, name, float(value))
        self.job = int(self.job)
        if self.seed is not None:
            self.seed = int(self.seed)

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for JSON serialization (CSV column order)."""
        return {name: getattr(self, name) for name in CSV_COLUMNS}

    def to_row(self) -> List[str]:
        """CSV cells; missing values are empty and floats use repr for exact round trips."""
        cells = []
        for name in CSV_COLUMNS:
            value = getattr(self, name)
            cells.append("" if value is None else repr(value) if isinstance(value, float) else str(value))
        return cells

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ResultRecord":
        """Create from dictionary."""
        def number(key, cast=float):
            value = data.get(key)
            return None if value in (None, "") else cast(value)

        return cls(
            suite=str(data["suite"]),
            scheme=str(data["scheme"]),
            subset=str(data.get("subset", "")),
            decoder=str(data.get("decoder", "")),
            job=int(data["job"]),
            theta_deg=number("theta_deg"),
            phi_deg=number("phi_deg"),
            metric=float(data["metric"]),
            metric_mitigated=number("metric_mitigated"),
            ci_low=number("ci_low"),
            ci_high=number("ci_high"),
            seed=number("seed", int),
        )


@dataclass
class JobReport:
    """Completion report of one job: SUCCESS with its records, or FAILURE with the error text."""
    job: int
    status: str = FAILURE
    records: List[ResultRecord] = field(default_factory=list)
    error: Optional[str] = None
    timestamp: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.status == SUCCESS

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for JSON serialization."""
        return {
            "job": self.job,
            "status": self.status,
            "records": [r.to_dict() for r in self.records],
            "error": self.error,
            "timestamp": self.timestamp or datetime.now(timezone.utc).isoformat(),
        }
