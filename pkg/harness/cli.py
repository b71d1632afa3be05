"""
Command-line front end: `qss <suite> --scheme ... --erase 1,2 ...`.

Exit codes: 0 success, 1 simulation error, 2 configuration error, 3 table consistency failure.
"""

import argparse
import logging
import sys
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv

from communication.models import SCHEMES, SUITES
from communication.protocol import load_json_file, parse_experiment
from qss.errors import ConfigError, ConsistencyError, QSSError
from qss.settings import configure_logging, load_settings

from .report import emit
from .suites import run_suite

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_CONSISTENCY = 3


def _subset(text: str) -> List[int]:
    if not text.strip():
        return []
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated labels like 1,2, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qss", description="Quantum secret sharing experiment runner")
    parser.add_argument("suite", choices=SUITES, help="experiment suite to run")
    parser.add_argument("--scheme", choices=SCHEMES, default="five_qubit", help="sharing scheme")
    parser.add_argument("--erase", type=_subset, default=[],
                        help="erased qubits (share numbers for qutrit), e.g. 1,2")
    parser.add_argument("--decoder", choices=("mcm", "dcm"), default="mcm",
                        help="mid-circuit or deferred measurement decoding")
    parser.add_argument("--shots", type=int, help="shots per job")
    parser.add_argument("--jobs", type=int, help="number of jobs")
    parser.add_argument("--seed", type=int, help="master seed")
    parser.add_argument("--noise", help="noise config JSON file")
    parser.add_argument("--mitigate", action="store_true", help="fill metric_mitigated from the readout calibration")
    parser.add_argument("--allow-uncorrectable", action="store_true",
                        help="run erasures the code cannot correct")
    parser.add_argument("--baseline-metric", choices=("swap", "entfid"), default="swap",
                        help="figure of merit for the baseline suite")
    parser.add_argument("--workers", type=int, help="thread pool size")
    parser.add_argument("--config", help="settings file (defaults to QSS_CONFIG or config/qss_config.json)")
    parser.add_argument("--out", help="output path; stdout when omitted")
    parser.add_argument("--format", choices=("csv", "json"), default="csv", help="report format")
    return parser


def build_config(args: argparse.Namespace, settings: Dict[str, Any]) -> Dict[str, Any]:
    """Merge command-line flags over the settings file into an experiment config document."""
    config: Dict[str, Any] = {
        "suite": args.suite,
        "scheme": args.scheme,
        "erase": args.erase,
        "decoder": args.decoder,
        "mitigate": args.mitigate,
        "allow_uncorrectable": args.allow_uncorrectable,
        "baseline_metric": args.baseline_metric,
        "out": args.out,
        "format": args.format,
        "bootstrap_resamples": settings["bootstrap_resamples"],
        "confidence": settings["confidence"],
    }
    for key in ("shots", "jobs", "seed", "workers"):
        value = getattr(args, key)
        config[key] = settings[key] if value is None else value
    if args.noise:
        config["noise"] = load_json_file(args.noise)
    return config


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)
    settings = load_settings(args.config)
    configure_logging(settings["log_level"])
    try:
        config = parse_experiment(build_config(args, settings))
        records = run_suite(config, settings)
        emit(records, config.format, config.out)
    except ConfigError as e:
        logger.error("configuration error: %s", e)
        return EXIT_CONFIG
    except ConsistencyError as e:
        logger.error("consistency check failed: %s", e)
        return EXIT_CONSISTENCY
    except QSSError as e:
        logger.error("%s", e)
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
