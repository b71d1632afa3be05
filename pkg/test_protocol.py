"""
Tests for JSON validation of configs, circuits, tables and tomography data, and the record schemas.
"""

import json

import numpy as np
import pytest

from communication.models import ReadoutConfig
from communication.protocol import (
    format_message,
    load_json_file,
    parse_calibration,
    parse_circuit,
    parse_experiment,
    parse_noise,
    parse_table,
    parse_tomography,
)
from communication.schemas import SUCCESS, JobReport, ResultRecord, format_subset
from qss.errors import ConfigError
from qss.mitigation import ReadoutCalibration
from qss.qcore import Conditional, Measure


def test_experiment_defaults_and_text_input():
    cfg = parse_experiment('{"suite": "swap", "erase": [2, 1]}')
    assert cfg.scheme == "five_qubit"
    assert cfg.erase == [1, 2]
    assert cfg.decoder == "mcm"
    assert cfg.noise.two_qubit_p == 0.0


@pytest.mark.parametrize("bad", [
    {"suite": "teleport"},
    {"suite": "swap", "shots": 0},
    {"suite": "swap", "erase": [1, 1]},
    {"suite": "swap", "erase": [0]},
    {"suite": "swap", "decoder": "magic"},
    {"suite": "swap", "mitigate": True},
    {"suite": "swap", "mitigate": True, "noise": {"readout": {"p01": 0.0}}},
    {"suite": "swap", "noise": {"two_qubit_p": 1.5}},
    {"suite": "swap", "seed": -1},
])
def test_invalid_experiments_are_config_errors(bad):
    with pytest.raises(ConfigError):
        parse_experiment(bad)


def test_malformed_json_is_a_config_error():
    with pytest.raises(ConfigError):
        parse_experiment("{not json")


def test_noise_and_readout_rates():
    noise = parse_noise({"two_qubit_p": 0.01, "readout": {"p01": 0.02}})
    rates = noise.readout.rates(3)
    assert [(q.p01, q.p10) for q in rates.qubits] == [(0.02, 0.02)] * 3
    assert noise.readout.active
    explicit = ReadoutConfig(qubits=[{"p01": 0.01, "p10": 0.03}])
    with pytest.raises(ValueError):
        explicit.rates(2)
    assert not ReadoutConfig().active
    assert parse_noise({"two_qubit_depolarizing": 0.03}).two_qubit_p == 0.03


def test_parse_calibration():
    calib = parse_calibration({"qubits": [{"p01": 0.01, "p10": 0.02}, {"p01": 0.03, "p10": 0.04}]})
    assert calib == ReadoutCalibration((0.01, 0.03), (0.02, 0.04))
    with pytest.raises(ConfigError):
        parse_calibration({"qubits": []})
    with pytest.raises(ConfigError):
        parse_calibration({"qubits": [{"p01": 2.0}]})


def test_parse_circuit():
    circuit = parse_circuit({"n_qubits": 2, "n_clbits": 1, "ops": [
        {"name": "h", "targets": [1]},
        {"kind": "measure", "qubit": 1, "clbit": 0},
        {"kind": "cond_gate", "name": "x", "targets": [2], "clbit": 0},
    ]})
    assert isinstance(circuit.ops[1], Measure)
    assert isinstance(circuit.ops[2], Conditional)
    with pytest.raises(ConfigError):
        parse_circuit({"n_qubits": 2, "ops": [{"name": "h", "targets": [3]}]})
    with pytest.raises(ConfigError):
        parse_circuit({"n_qubits": 2, "ops": [{"kind": "measure", "qubit": 1}]})


def test_parse_table(five_qubit):
    table = parse_table(five_qubit.stored_tables[(1, 2)].to_dict())
    assert len(table) == 16
    with pytest.raises(ConfigError):
        parse_table({"subset": [1], "rows": [{"syndrome": "01", "correction": "X"},
                                             {"syndrome": "011", "correction": "Z"}]})
    with pytest.raises(ConfigError):
        parse_table({"subset": [1], "rows": [{"syndrome": "01", "correction": "Q"}]})


def test_parse_tomography():
    data = {"n": 1, "shots": 10, "settings": {"X": {"0": 6, "1": 4}, "Y": {"0": 5, "1": 5}, "Z": {"0": 10}}}
    tomo = parse_tomography(json.dumps(data))
    assert tomo.shots == 10
    data["settings"]["Z"] = {"0": 9}
    with pytest.raises(ConfigError):
        parse_tomography(data)
    with pytest.raises(ConfigError):
        parse_tomography({"n": 1, "settings": {"W": {"0": 1.0}}})


def test_load_json_file(tmp_path):
    good = tmp_path / "noise.json"
    good.write_text('{"two_qubit_p": 0.02}')
    assert load_json_file(str(good)) == {"two_qubit_p": 0.02}
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(ConfigError):
        load_json_file(str(bad))
    with pytest.raises(ConfigError):
        load_json_file(str(tmp_path / "absent.json"))


def test_format_message_sorts_keys():
    assert format_message({"b": 1, "a": 2}, indent=None) == '{"a": 2, "b": 1}'


def test_result_record_coerces_numpy_scalars():
    record = ResultRecord("swap", "steane", format_subset((6, 7)), "mcm", np.int64(3), np.float64(90.0), None,
                          np.float64(0.5), seed=np.uint64(12))
    assert type(record.metric) is float
    assert record.to_row()[4] == "3"
    assert record.to_row()[6] == ""
    assert ResultRecord.from_dict(record.to_dict()).to_dict() == record.to_dict()


def test_job_report():
    report = JobReport(job=2, status=SUCCESS)
    assert report.ok
    data = report.to_dict()
    assert data["records"] == []
    assert data["timestamp"]
