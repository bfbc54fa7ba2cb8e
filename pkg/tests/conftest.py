"""Pytest configuration and fixtures."""

import pytest
from click.testing import CliRunner

from src.core import config as config_module
from src.services.hypergraph_service import InteractionGraph, reference_instance
from src.utils import metrics as metrics_module


@pytest.fixture(autouse=True)
def reset_metrics():
    """Reset metrics between tests for deterministic assertions."""
    metrics_module._metrics = metrics_module.Metrics()
    yield


@pytest.fixture(autouse=True)
def reset_settings():
    """Drop cached settings so overrides never leak between tests."""
    config_module._settings = None
    yield
    config_module._settings = None


@pytest.fixture()
def override_settings():
    """Install a Settings instance with the given field overrides."""

    def _override(**fields):
        config_module._settings = config_module.Settings(**fields)
        return config_module._settings

    return _override


@pytest.fixture()
def runner():
    """Provide a click test runner."""
    return CliRunner()


@pytest.fixture(scope="session")
def instance_a() -> InteractionGraph:
    return reference_instance("a")


@pytest.fixture(scope="session")
def instance_b() -> InteractionGraph:
    return reference_instance("b")


@pytest.fixture(scope="session")
def instance_c() -> InteractionGraph:
    return reference_instance("c")


@pytest.fixture()
def triangle() -> InteractionGraph:
    """k = 2 cycle on three qubits; exactly two dimer coverings."""
    return InteractionGraph(3, 2, [(0, 1), (1, 2), (0, 2)])


@pytest.fixture()
def complete_four() -> InteractionGraph:
    """All four 3-subsets of four qubits."""
    return InteractionGraph(4, 3, [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)])


def path_graph(n_qubits: int) -> InteractionGraph:
    """k = 2 path 0-1-...-(n-1)."""
    return InteractionGraph(n_qubits, 2, [(i, i + 1) for i in range(n_qubits - 1)])
