import math
from pathlib import Path

import numpy as np
import pytest

from eit_entanglement.cli import load_config
from eit_entanglement.linearization import build_linear_model
from eit_entanglement.model import PhysicalParams, solve_steady_state

GAMMA = 2 * math.pi * 6e6
PARAMS_DIR = Path(__file__).resolve().parents[1] / "params"

ACCEPTANCE_LINES = []


def config_path(name: str) -> str:
    return str(PARAMS_DIR / f"{name}.cfg")


def make_model(params: PhysicalParams):
    return build_linear_model(params, solve_steady_state(params))


def random_state(rng):
    """A random but valid mean-field vector (populations on the simplex)."""
    p = rng.dirichlet([1.0, 1.0, 1.0])
    c = lambda s: s * (rng.normal() + 1j * rng.normal())  # noqa: E731
    return np.array([c(0.05), c(0.05), c(0.2), c(0.2), c(0.2), p[0], p[1], p[2]], dtype=complex)


@pytest.fixture(scope="session")
def default_config():
    return load_config(config_path("default"))


@pytest.fixture(scope="session")
def tuned_config():
    return load_config(config_path("tuned"))


@pytest.fixture(scope="session")
def bistable_config():
    return load_config(config_path("bistable"))


@pytest.fixture(scope="session")
def default_model(default_config):
    return make_model(default_config.params)


@pytest.fixture(scope="session")
def tuned_model(tuned_config):
    return make_model(tuned_config.params)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
