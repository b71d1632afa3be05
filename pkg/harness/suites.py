"""
Experiment suites: SWAP-test recovery, entanglement fidelity, privacy, table
consistency, MCM versus DCM, and the identity-gate baseline.
"""

import itertools
import logging
from typing import Any, Dict, List, Optional, Tuple, Type

import numpy as np

from communication.models import ExperimentConfig
from communication.schemas import ResultRecord, format_subset
from qss.channels import (
    GateNoise,
    baseline_channel,
    idle_pipeline,
    pipeline_channel,
    pipeline_two_qubit_count,
    run_pipeline,
)
from qss.codes import CodeSpec, SecretSpec, encode, load_code, prepare_secret, probe_secrets
from qss.errors import CodeError, ConfigError, ConsistencyError
from qss.metrics import (
    TomographyData,
    choi_state,
    entanglement_fidelity,
    fidelity_estimate_weights,
    setting_labels,
    swap_test,
    tomography_collect,
    tomography_probabilities,
    tomography_reconstruct,
)
from qss.mitigation import ReadoutCalibration, corrupt_counts, mitigate, to_probabilities
from qss.qcore import DensityMatrix, State, fidelity, partial_trace, trace_distance
from qss.stabilizer import CorrectionTable, derive_correction_table, table_consistency_check

from .report import bootstrap_proportion, bootstrap_tomography, summarize
from .suite_base import AbstractSuite

logger = logging.getLogger(__name__)

POLAR_DEGREES = 181
AZIMUTH_DEGREES = 361


def sample_angles(kind: str, rng: np.random.Generator) -> SecretSpec:
    """
    Angles on 1-degree grids, endpoints included: theta in [0, 180] and phi in [0, 360]
    for a qubit; theta1 in [0, 360] and theta2 in [0, 180] for a qutrit.
    """
    polar = int(rng.integers(0, POLAR_DEGREES))
    azimuth = int(rng.integers(0, AZIMUTH_DEGREES))
    if kind == "qutrit":
        return SecretSpec.from_degrees("qutrit", azimuth, polar)
    return SecretSpec.from_degrees("qubit", polar, azimuth)


def _load(scheme: str) -> CodeSpec:
    try:
        return load_code(scheme)
    except CodeError as e:
        raise ConfigError(str(e)) from e


class PipelineSuite(AbstractSuite):
    """Shared setup for suites that push secrets through encode, erase and decode."""

    def prepare(self) -> None:
        cfg = self.config
        self.code = _load(cfg.scheme)
        try:
            self.code.physical_qubits(cfg.erase)
        except CodeError as e:
            raise ConfigError(str(e)) from e
        self.erase = tuple(cfg.erase)
        self.table = self._decoder_table()
        self.gate_noise = cfg.noise.two_qubit_p or None
        self.noise = GateNoise(cfg.noise.two_qubit_p) if self.gate_noise else None
        self.secret_kind = "qutrit" if self.code.is_qutrit else "qubit"
        self._calibrations: Dict[int, ReadoutCalibration] = {}

    def _decoder_table(self) -> Optional[CorrectionTable]:
        """None for the code's own decoder; the fallback table when an uncorrectable erasure is allowed."""
        code = self.code
        if code.is_qutrit:
            if len(self.erase) > 1:
                raise ConfigError(f"the qutrit scheme cannot recover after erasing shares {list(self.erase)}")
            return None
        if code.is_correctable(self.erase):
            return None
        if not self.config.allow_uncorrectable:
            raise ConfigError(f"{code.name} cannot correct the erasure of {list(self.erase)}; "
                              f"pass --allow-uncorrectable to run it anyway")
        table = code.default_decoder_table()
        logger.warning("%s: erasure %s is uncorrectable, decoding with the table for %s",
                       code.name, list(self.erase), list(table.subset))
        return table

    def calibration(self, n_qubits: int) -> Optional[ReadoutCalibration]:
        readout = self.config.noise.readout
        if readout is None:
            return None
        if n_qubits not in self._calibrations:
            try:
                rates = readout.rates(n_qubits)
            except ValueError as e:
                raise ConfigError(str(e)) from e
            self._calibrations[n_qubits] = ReadoutCalibration.from_dict(rates.model_dump())
        return self._calibrations[n_qubits]

    def _mitigate(self, counts: Dict[str, float], calib: ReadoutCalibration) -> Dict[str, float]:
        quasi = mitigate(counts, calib, direct_max=self.settings["direct_solve_max_strings"],
                         tol=self.settings["gmres_tol"], maxiter=self.settings["gmres_maxiter"])
        return to_probabilities(quasi)

    def _record(self, job: int, seed: int, decoder: str, metric: float, **extra: Any) -> ResultRecord:
        return ResultRecord(suite=self.name, scheme=self.code.name, subset=format_subset(self.erase),
                            decoder=decoder, job=job, seed=seed, metric=float(np.clip(metric, 0.0, 1.0)),
                            theta_deg=extra.pop("theta_deg", None), phi_deg=extra.pop("phi_deg", None), **extra)

    # --- SWAP-test records ---

    def swap_record(self, job: int, seed: int, spec: SecretSpec, psi: State, out: State,
                    rng: np.random.Generator, decoder: str) -> ResultRecord:
        """Pass rate of the SWAP test between the recovered secret and a fresh copy."""
        cfg = self.config
        exact = swap_test(out, psi).exact_p0
        calib = self.calibration(1)
        if calib is not None:
            counts = corrupt_counts({"0": exact, "1": max(1.0 - exact, 0.0)}, calib, cfg.shots, rng)
        else:
            counts = swap_test(out, psi, shots=cfg.shots, rng=rng).counts
        passed = counts.get("0", 0)
        low, high = bootstrap_proportion(passed, cfg.shots, rng, cfg.bootstrap_resamples, cfg.confidence)
        mitigated = None
        if cfg.mitigate:
            mitigated = self._mitigate(counts, calib).get("0", 0.0)
        theta, phi = spec.degrees()
        return self._record(job, seed, decoder, passed / cfg.shots, theta_deg=theta, phi_deg=phi,
                            metric_mitigated=mitigated, ci_low=low, ci_high=high, exact=exact)

    # --- Entanglement-fidelity records ---

    def use_channel(self, channel) -> None:
        self.channel = channel
        self.exact = entanglement_fidelity(channel)
        self.choi, self.target = choi_state(channel)
        self.weights = fidelity_estimate_weights(self.target)
        logger.info("%s: exact entanglement fidelity %.6f", self.code.name, self.exact)

    def _tomography(self, rng: np.random.Generator) -> TomographyData:
        shots = self.config.shots
        calib = self.calibration(self.choi.n_qubits)
        if calib is None:
            return tomography_collect(self.choi, shots, rng)
        exact = tomography_probabilities(self.choi)
        labels = setting_labels(self.choi.n_qubits)
        settings = {label: corrupt_counts(exact.settings[label], calib, shots, stream)
                    for label, stream in zip(labels, rng.spawn(len(labels)))}
        return TomographyData(self.choi.n_qubits, settings, shots)

    def entfid_record(self, job: int, seed: int, rng: np.random.Generator, decoder: str) -> ResultRecord:
        """Tomography-estimated entanglement fidelity of the channel set by use_channel."""
        cfg = self.config
        data = self._tomography(rng)
        estimate = fidelity(tomography_reconstruct(data), self.target)
        low, high = bootstrap_tomography(data.settings, cfg.shots, self.weights, estimate, rng,
                                         cfg.bootstrap_resamples, cfg.confidence)
        mitigated = None
        if cfg.mitigate:
            calib = self.calibration(self.choi.n_qubits)
            probs = {label: self._mitigate(counts, calib) for label, counts in data.settings.items()}
            corrected = TomographyData(data.n_qubits, probs, None)
            mitigated = fidelity(tomography_reconstruct(corrected), self.target)
        return self._record(job, seed, decoder, estimate, metric_mitigated=mitigated,
                            ci_low=low, ci_high=high, exact=self.exact)


class SwapSuite(PipelineSuite):
    name = "swap"

    def run_job(self, job: int, seed: int) -> List[ResultRecord]:
        rng = np.random.default_rng(seed)
        spec = sample_angles(self.secret_kind, rng)
        psi = prepare_secret(spec)
        out = run_pipeline(self.code, psi, self.erase, self.config.decoder, noise=self.noise, table=self.table)
        return [self.swap_record(job, seed, spec, psi, out, rng, self.config.decoder)]


class EntfidSuite(PipelineSuite):
    name = "entfid"

    def prepare(self) -> None:
        super().prepare()
        self.use_channel(pipeline_channel(self.code, self.erase, self.config.decoder, gate_noise=self.gate_noise,
                                          allow_uncorrectable=self.config.allow_uncorrectable, table=self.table))

    def run_job(self, job: int, seed: int) -> List[ResultRecord]:
        return [self.entfid_record(job, seed, np.random.default_rng(seed), self.config.decoder)]


class McmVsDcmSuite(PipelineSuite):
    """Paired runs on the same secret that differ only in the decoder."""
    name = "mcm-vs-dcm"

    def run_job(self, job: int, seed: int) -> List[ResultRecord]:
        rng = np.random.default_rng(seed)
        spec = sample_angles(self.secret_kind, rng)
        psi = prepare_secret(spec)
        records = []
        for decoder, stream in zip(("mcm", "dcm"), rng.spawn(2)):
            out = run_pipeline(self.code, psi, self.erase, decoder, noise=self.noise, table=self.table)
            records.append(self.swap_record(job, seed, spec, psi, out, stream, decoder))
        return records


class BaselineSuite(PipelineSuite):
    """
    The same figure of merit on an identity pipeline: the secret idles through as many
    noisy two-qubit identity gates as the real pipeline applies.
    """
    name = "baseline"

    def prepare(self) -> None:
        super().prepare()
        self.gate_count = pipeline_two_qubit_count(self.code, self.erase, self.config.decoder, self.table)
        logger.info("%s baseline: %d identity gate(s)", self.code.name, self.gate_count)
        if self.config.baseline_metric == "entfid":
            self.use_channel(baseline_channel(self.code, self.gate_count, self.gate_noise))

    def run_job(self, job: int, seed: int) -> List[ResultRecord]:
        rng = np.random.default_rng(seed)
        if self.config.baseline_metric == "entfid":
            return [self.entfid_record(job, seed, rng, "identity")]
        spec = sample_angles(self.secret_kind, rng)
        psi = prepare_secret(spec)
        out = idle_pipeline(self.code, psi, self.gate_count, self.gate_noise)
        return [self.swap_record(job, seed, spec, psi, out, rng, "identity")]


class PrivacySuite(AbstractSuite):
    """Largest secret dependence of every small share subset's reduced state."""
    name = "privacy"

    def prepare(self) -> None:
        cfg = self.config
        self.code = _load(cfg.scheme)
        noise = GateNoise(cfg.noise.two_qubit_p) if cfg.noise.two_qubit_p else None
        self.noise = noise
        if cfg.erase:
            subsets = [tuple(cfg.erase)]
        else:
            subsets = [s for size in range(1, self.code.max_erasure + 1)
                       for s in itertools.combinations(self.code.labels, size)]
        try:
            self.subsets = {s: self.code.physical_qubits(s) for s in subsets}
        except CodeError as e:
            raise ConfigError(str(e)) from e
        encoded = [encode(self.code, probe, noise=noise) for probe in probe_secrets(self.code)]
        self.probes: Dict[Tuple[int, ...], List[DensityMatrix]] = {
            s: [partial_trace(state, qubits) for state in encoded] for s, qubits in self.subsets.items()}

    def run_job(self, job: int, seed: int) -> List[ResultRecord]:
        rng = np.random.default_rng(seed)
        spec = sample_angles("qutrit" if self.code.is_qutrit else "qubit", rng)
        state = encode(self.code, prepare_secret(spec), noise=self.noise)
        theta, phi = spec.degrees()
        records = []
        for subset, qubits in self.subsets.items():
            reduced = partial_trace(state, qubits)
            leak = max(trace_distance(reduced, probe) for probe in self.probes[subset])
            if leak > self.settings["privacy_atol"]:
                logger.debug("%s: subset %s depends on the secret (%.3e)", self.code.name, list(subset), leak)
            leak = float(np.clip(leak, 0.0, 1.0))
            records.append(ResultRecord(suite=self.name, scheme=self.code.name, subset=format_subset(subset),
                                        decoder="", job=job, theta_deg=theta, phi_deg=phi, metric=leak,
                                        ci_low=leak, ci_high=leak, seed=seed))
        return records


class TablesSuite(AbstractSuite):
    """Cross-check every stored correction table against a fresh derivation; one job."""
    name = "tables"

    @property
    def job_count(self) -> int:
        return 1

    def prepare(self) -> None:
        self.code = _load(self.config.scheme)
        if self.code.is_qutrit:
            raise ConfigError("the qutrit scheme has no correction tables")

    def run_job(self, job: int, seed: int) -> List[ResultRecord]:
        records = []
        failures = []
        for subset, stored in sorted(self.code.stored_tables.items()):
            check = table_consistency_check(derive_correction_table(self.code, subset), stored)
            agreeing = max(check.rows_checked - len(check.mismatches), 0) / max(check.rows_checked, 1)
            logger.info("%s table %s: %d row(s), %d mismatch(es)", self.code.name, list(subset),
                        check.rows_checked, len(check.mismatches))
            if not check.consistent:
                failures.append(check.to_dict())
            records.append(ResultRecord(suite=self.name, scheme=self.code.name, subset=format_subset(subset),
                                        decoder="", job=job, theta_deg=None, phi_deg=None, metric=agreeing,
                                        ci_low=agreeing, ci_high=agreeing, seed=seed))
        if failures:
            raise ConsistencyError(f"{self.code.name}: stored tables disagree with derivation: {failures}")
        return records


SUITES: Dict[str, Type[AbstractSuite]] = {
    suite.name: suite
    for suite in (SwapSuite, EntfidSuite, PrivacySuite, TablesSuite, McmVsDcmSuite, BaselineSuite)
}


def run_suite(config: ExperimentConfig, settings: Optional[Dict[str, Any]] = None) -> List[ResultRecord]:
    """
    Run one configured suite.

    Args:
        config: Validated experiment configuration
        settings: Solver thresholds and tolerances (defaults from qss.settings)

    Returns:
        Result records sorted by job
    """
    suite = SUITES[config.suite](config, settings)
    records = suite.run()
    summarize(records, config.seed, config.bootstrap_resamples, config.confidence)
    return records
