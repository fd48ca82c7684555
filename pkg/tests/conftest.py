import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from uavedge.config import ExperimentConfig  # noqa: E402


@pytest.fixture
def small_config():
    """Five vehicles, two UAVs, five task types, short episodes."""
    return ExperimentConfig().replace(**{
        "experiment.n_vehicles": 5,
        "experiment.n_uavs": 2,
        "experiment.n_tasks": 5,
        "env.steps_per_episode": 20,
    })


_CRITERIA: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def report():
    """Record the outcome of one acceptance criterion for the terminal summary."""
    def record(number: int, passed: bool, detail: str) -> None:
        _CRITERIA[number] = (bool(passed), detail)
        print(f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        passed, detail = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}")
