"""
Shared pytest fixtures for the QSS simulator tests.
"""

import numpy as np
import pytest

from qss.codes import SecretSpec, load_code, prepare_secret


@pytest.fixture
def rng():
    """Seeded generator; every test gets the same stream."""
    return np.random.default_rng(20240501)


@pytest.fixture(scope="session")
def five_qubit():
    return load_code("five_qubit")


@pytest.fixture(scope="session")
def steane():
    return load_code("steane")


@pytest.fixture(scope="session")
def qutrit():
    return load_code("qutrit")


def random_secret(kind: str, rng: np.random.Generator):
    """Haar-ish random secret from uniformly drawn angles."""
    if kind == "qutrit":
        spec = SecretSpec(kind="qutrit", theta1=rng.uniform(0, 2 * np.pi), theta2=rng.uniform(0, np.pi))
    else:
        spec = SecretSpec(theta=rng.uniform(0, np.pi), phi=rng.uniform(0, 2 * np.pi))
    return prepare_secret(spec)
