"""
Run configuration and logging setup.

Defaults are merged from config/qss_config.json (or the file named by QSS_CONFIG)
over the built-in values below. QSS_LOG_LEVEL and QSS_WORKERS override the file.
"""

import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional

logger = logging.getLogger(__name__)

PROJECT_ROOT = Path(__file__).resolve().parent.parent
DEFAULT_CONFIG_PATH = PROJECT_ROOT / "config" / "qss_config.json"
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

DEFAULTS: Dict[str, Any] = {
    "log_level": "INFO",
    "shots": 1024,
    "jobs": 10,
    "seed": 20240501,
    "workers": 1,
    "bootstrap_resamples": 10000,
    "confidence": 0.99,
    "direct_solve_max_strings": 10,
    "gmres_tol": 1e-8,
    "gmres_maxiter": 200,
    "privacy_atol": 1e-9,
}


def _load_config(config_path: str) -> Dict[str, Any]:
    """Load configuration from a JSON file, falling back to an empty dict."""
    try:
        with open(config_path, 'r') as f:
            return json.load(f)
    except FileNotFoundError:
        logger.debug("config file %s not found, using defaults", config_path)
        return {}
    except json.JSONDecodeError as e:
        logger.warning("config file %s is not valid JSON (%s), using defaults", config_path, e)
        return {}


def load_settings(config_path: Optional[str] = None) -> Dict[str, Any]:
    """
    Build the effective settings.

    Args:
        config_path: Explicit config file; defaults to QSS_CONFIG or config/qss_config.json

    Returns:
        Dictionary of settings with environment overrides applied
    """
    path = config_path or os.getenv("QSS_CONFIG") or str(DEFAULT_CONFIG_PATH)
    settings = dict(DEFAULTS)
    settings.update(_load_config(path))

    if os.getenv("QSS_LOG_LEVEL"):
        settings["log_level"] = os.getenv("QSS_LOG_LEVEL")
    if os.getenv("QSS_WORKERS"):
        try:
            settings["workers"] = int(os.getenv("QSS_WORKERS"))
        except ValueError:
            logger.warning("ignoring non-integer QSS_WORKERS=%r", os.getenv("QSS_WORKERS"))
    return settings


def configure_logging(level: str = "INFO") -> None:
    """Install one stream handler on the root logger."""
    root = logging.getLogger()
    if not any(getattr(h, "_qss_handler", False) for h in root.handlers):
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        handler._qss_handler = True
        root.addHandler(handler)
    root.setLevel(getattr(logging, str(level).upper(), logging.INFO))
