"""
Bootstrap confidence intervals and CSV/JSON emission of result records.
"""

import csv
import io
import json
import logging
import sys
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from communication.schemas import CSV_COLUMNS, ResultRecord
from qss.errors import ConfigError, QSSError

logger = logging.getLogger(__name__)

FORMATS = ("csv", "json")


def _quantiles(samples: np.ndarray, confidence: float) -> Tuple[float, float]:
    tail = (1 - confidence) / 2
    low, high = np.quantile(samples, [tail, 1 - tail])
    return float(low), float(high)


def contain_estimate(low: float, high: float, estimate: float, what: str = "") -> Tuple[float, float]:
    """Widen an interval so it contains the point estimate."""
    if low <= estimate <= high:
        return low, high
    logger.warning("widened the %s interval [%.6f, %.6f] to contain the estimate %.6f",
                   what or "bootstrap", low, high, estimate)
    return min(low, estimate), max(high, estimate)


def bootstrap_proportion(successes: int, shots: int, rng: np.random.Generator,
                         resamples: int = 10000, confidence: float = 0.99) -> Tuple[float, float]:
    """Nonparametric bootstrap over the shots of one job: resampling n Bernoulli outcomes."""
    if shots < 1:
        raise QSSError("cannot bootstrap zero shots")
    rate = successes / shots
    samples = rng.binomial(shots, rate, size=resamples) / shots
    return contain_estimate(*_quantiles(samples, confidence), rate, "pass-rate")


def bootstrap_tomography(settings: Dict[str, Dict[str, float]], shots: int, weights: Dict[str, np.ndarray],
                         estimate: float, rng: np.random.Generator, resamples: int = 10000,
                         confidence: float = 0.99) -> Tuple[float, float]:
    """
    Resample every setting's counts multinomially and push each resample through the
    linear fidelity functional.
    """
    total = np.zeros(resamples)
    for label, w in weights.items():
        counts = settings[label]
        freqs = np.zeros(w.size)
        for outcome, value in counts.items():
            freqs[int(outcome, 2)] = value
        freqs = freqs / freqs.sum()
        draws = rng.multinomial(shots, freqs, size=resamples) / shots
        total += draws @ w
    low, high = _quantiles(np.clip(total, 0.0, 1.0), confidence)
    return contain_estimate(low, high, estimate, "fidelity")


def bootstrap_mean(values: Sequence[float], rng: np.random.Generator, resamples: int = 10000,
                   confidence: float = 0.99) -> Tuple[float, float, float]:
    """Mean over jobs with a bootstrap interval; returns (mean, low, high)."""
    data = np.asarray(values, dtype=float)
    if not data.size:
        raise QSSError("no values to summarize")
    idx = rng.integers(0, data.size, size=(resamples, data.size))
    means = data[idx].mean(axis=1)
    mean = float(data.mean())
    low, high = contain_estimate(*_quantiles(means, confidence), mean, "suite")
    return mean, low, high


def summarize(records: Sequence[ResultRecord], seed: int, resamples: int = 10000,
              confidence: float = 0.99) -> List[Dict[str, object]]:
    """Mean metric over jobs per (scheme, subset, decoder) group, with a bootstrap interval."""
    groups: Dict[Tuple[str, str, str], List[float]] = {}
    for record in records:
        groups.setdefault((record.scheme, record.subset, record.decoder), []).append(record.metric)
    rng = np.random.default_rng(seed)
    summary = []
    for (scheme, subset, decoder), values in sorted(groups.items()):
        mean, low, high = bootstrap_mean(values, rng, resamples, confidence)
        logger.info("%s subset=%s decoder=%s: mean %.6f over %d job(s), %.0f%% interval [%.6f, %.6f]",
                    scheme, subset or "-", decoder or "-", mean, len(values), 100 * confidence, low, high)
        summary.append({"scheme": scheme, "subset": subset, "decoder": decoder, "jobs": len(values),
                        "mean": mean, "ci_low": low, "ci_high": high})
    return summary


def render(records: Iterable[ResultRecord], fmt: str = "csv") -> str:
    """Records as CSV (header + one row each) or as a JSON list mirroring the CSV columns."""
    records = list(records)
    if fmt == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for record in records:
            writer.writerow(record.to_row())
        return buffer.getvalue()
    if fmt == "json":
        return json.dumps([r.to_dict() for r in records], indent=2) + "\n"
    raise ConfigError(f"output format must be one of {FORMATS}, got {fmt!r}")


def parse(text: str, fmt: str = "csv") -> List[ResultRecord]:
    """Inverse of render, used to read reports back."""
    if fmt == "csv":
        return [ResultRecord.from_dict(row) for row in csv.DictReader(io.StringIO(text))]
    if fmt == "json":
        return [ResultRecord.from_dict(row) for row in json.loads(text)]
    raise ConfigError(f"output format must be one of {FORMATS}, got {fmt!r}")


def emit(records: Iterable[ResultRecord], fmt: str = "csv", path: Optional[str] = None) -> None:
    """Write the report to `path`, or stdout when no path is given."""
    text = render(records, fmt)
    if path is None:
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", newline="") as f:
            f.write(text)
    except OSError as e:
        raise QSSError(f"cannot write report to {path}: {e}") from e
    logger.info("wrote %s report to %s", fmt, path)
