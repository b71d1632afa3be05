"""
Protocol utilities for validating, parsing and formatting the JSON interchange formats.
"""

import json
from typing import Any, Dict, Type, TypeVar, Union

from pydantic import BaseModel, ValidationError

from qss.errors import ConfigError, QSSError
from qss.metrics import TomographyData
from qss.mitigation import ReadoutCalibration
from qss.qcore import Circuit
from qss.stabilizer import CorrectionTable

from .models import (
    CalibrationConfig,
    CircuitModel,
    ExperimentConfig,
    NoiseConfig,
    TableModel,
    TomographyModel,
)

M = TypeVar("M", bound=BaseModel)
Source = Union[str, bytes, Dict[str, Any]]


def validate_model(model: Type[M], source: Source) -> M:
    """
    Validates a JSON document (text or already-parsed dict) against a model.

    Args:
        model: Pydantic model class
        source: JSON string or dictionary

    Returns:
        Validated model instance

    Raises:
        ConfigError: if the JSON is malformed or fails validation
    """
    try:
        if isinstance(source, (str, bytes)):
            return model.model_validate_json(source)
        return model.model_validate(source)
    except ValidationError as e:
        raise ConfigError(f"invalid {model.__name__}: {e}") from e


def load_json_file(path: str) -> Dict[str, Any]:
    """Reads a JSON file, mapping I/O and syntax problems onto ConfigError."""
    try:
        with open(path, "r") as f:
            return json.load(f)
    except FileNotFoundError as e:
        raise ConfigError(f"{path} not found") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path} is not valid JSON: {e}") from e


def parse_experiment(source: Source) -> ExperimentConfig:
    return validate_model(ExperimentConfig, source)


def parse_noise(source: Source) -> NoiseConfig:
    return validate_model(NoiseConfig, source)


def parse_calibration(source: Source) -> ReadoutCalibration:
    model = validate_model(CalibrationConfig, source)
    return ReadoutCalibration.from_dict(model.model_dump())


def _build(builder, data: Dict[str, Any], what: str):
    try:
        return builder(data)
    except QSSError as e:
        raise ConfigError(f"invalid {what}: {e}") from e


def parse_circuit(source: Source) -> Circuit:
    """Circuit JSON to Circuit; structural and range errors become ConfigError."""
    model = validate_model(CircuitModel, source)
    return _build(Circuit.from_dict, model.model_dump(exclude_none=True), "circuit")


def parse_table(source: Source) -> CorrectionTable:
    model = validate_model(TableModel, source)
    return _build(CorrectionTable.from_dict, model.model_dump(exclude_none=True), "correction table")


def parse_tomography(source: Source) -> TomographyData:
    """Tomography JSON to TomographyData, checked for complete settings and consistent totals."""
    model = validate_model(TomographyModel, source)

    def build(data):
        tomo = TomographyData.from_dict(data)
        tomo.validate()
        return tomo

    return _build(build, model.model_dump(), "tomography data")


def format_message(message_obj: Dict[str, Any], indent: int = 2) -> str:
    """
    Formats an object as a pretty-printed JSON string with sorted keys.

    Args:
        message_obj: Dictionary to format
        indent: JSON indentation level

    Returns:
        Formatted JSON string
    """
    return json.dumps(message_obj, indent=indent, sort_keys=True)
