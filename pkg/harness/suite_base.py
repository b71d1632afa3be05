from abc import ABC, abstractmethod
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Dict, List, Optional

import numpy as np

from communication.models import ExperimentConfig
from communication.schemas import FAILURE, SUCCESS, JobReport, ResultRecord
from qss.errors import QSSError
from qss.settings import DEFAULTS

logger = logging.getLogger(__name__)


def derive_seeds(master: int, jobs: int) -> List[int]:
    """Per-job 64-bit seeds from independent children of the master SeedSequence."""
    children = np.random.SeedSequence(master).spawn(jobs)
    return [int(child.generate_state(1, dtype=np.uint64)[0]) for child in children]


class AbstractSuite(ABC):
    """
    Abstract Base Class for all experiment suites.

    A suite is split into independent jobs; each job gets its own seed, runs
    through _execute_task and reports SUCCESS or FAILURE.
    """

    name = "suite"

    def __init__(self, config: ExperimentConfig, settings: Optional[Dict[str, Any]] = None):
        self.config = config
        self.settings = {**DEFAULTS, **(settings or {})}
        self._failures: Dict[int, Exception] = {}

    # --- Abstract Methods (Must be Implemented by Subclasses) ---

    @abstractmethod
    def prepare(self) -> None:
        """
        Validate the configuration and build shared, read-only inputs before any job runs.
        Raises ConfigError for an unusable configuration.
        """
        pass

    @abstractmethod
    def run_job(self, job: int, seed: int) -> List[ResultRecord]:
        """
        The suite's unique experiment logic for one job. Must return its records.
        """
        pass

    # --- Concrete Methods (Shared Job Protocol) ---

    @property
    def job_count(self) -> int:
        return self.config.jobs

    def run(self) -> List[ResultRecord]:
        """Run every job, in a thread pool when workers > 1, and return records sorted by job."""
        self.prepare()
        seeds = derive_seeds(self.config.seed, self.job_count)
        logger.info("%s suite on %s: %d job(s), %d worker(s)", self.name, self.config.scheme,
                    self.job_count, self.config.workers)
        if self.config.workers > 1:
            with ThreadPoolExecutor(max_workers=self.config.workers) as pool:
                reports = list(pool.map(self._execute_task, range(self.job_count), seeds))
        else:
            reports = [self._execute_task(job, seed) for job, seed in enumerate(seeds)]

        failed = [r for r in reports if not r.ok]
        if failed:
            self._raise_failures(failed)
        records = [record for report in sorted(reports, key=lambda r: r.job) for record in report.records]
        logger.info("%s suite finished: %d record(s)", self.name, len(records))
        return records

    def _execute_task(self, job: int, seed: int) -> JobReport:
        """Executes run_job and turns any exception into a FAILURE report."""
        report = JobReport(job=job, status=FAILURE)
        try:
            report.records = self.run_job(job, seed)
            report.status = SUCCESS
            logger.debug("job %d finished with %d record(s)", job, len(report.records))
        except Exception as e:
            report.error = f"{type(e).__name__}: {e}"
            self._failures[job] = e
            logger.error("job %d failed: %s", job, report.error)
        return report

    def _raise_failures(self, failed: List[JobReport]) -> None:
        """Raise once, with the first failure's type when it is a library error."""
        first = self._failures[min(r.job for r in failed)]
        summary = "; ".join(f"job {r.job}: {r.error}" for r in sorted(failed, key=lambda r: r.job))
        message = f"{len(failed)} of {self.job_count} job(s) failed: {summary}"
        if isinstance(first, QSSError):
            raise type(first)(message) from first
        raise QSSError(message) from first
