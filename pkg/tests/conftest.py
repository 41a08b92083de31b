import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mlslmon.scenario import load_scenario
from mlslmon.smt import SolverConfig, SolverError, discover_solver

SCENARIO_DIR = Path(__file__).parent.parent / "scenarios"


@pytest.fixture(scope="session")
def motorway_path() -> Path:
    return SCENARIO_DIR / "three_car_motorway.json"


@pytest.fixture()
def motorway(motorway_path):
    """The bundled three-car overtaking scenario (fresh copy per test)."""
    return load_scenario(str(motorway_path))


@pytest.fixture(scope="session")
def solver() -> SolverConfig:
    """External SMT solver; solver-backed tests fail loudly when absent."""
    try:
        command = discover_solver()
    except SolverError as exc:
        pytest.fail(f"SMT solver required for this test: {exc}")
    return SolverConfig(command=command, timeout=120.0)
