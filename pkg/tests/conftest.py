from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dialplan import pddl
from dialplan.agentspec import load_spec_file
from dialplan.compiler import compile_spec
from dialplan.planner import solve

DATA = Path(__file__).parent / "data"
FIXTURES = Path(__file__).parent.parent / "src" / "dialplan" / "fixtures"


@pytest.fixture(scope="session")
def golden_domain_text() -> str:
    return (DATA / "car_inspection.domain.pddl").read_text()


@pytest.fixture(scope="session")
def golden_problem_text() -> str:
    return (DATA / "car_inspection.problem.pddl").read_text()


@pytest.fixture(scope="session")
def golden_domain(golden_domain_text):
    return pddl.parse_domain(golden_domain_text)


@pytest.fixture(scope="session")
def golden_problem(golden_problem_text, golden_domain):
    return pddl.parse_problem(golden_problem_text, golden_domain)


@pytest.fixture(scope="session")
def car_spec():
    return load_spec_file(FIXTURES / "car_inspection_4.yaml")


@pytest.fixture(scope="session")
def car_compiled(car_spec):
    return compile_spec(car_spec)


@pytest.fixture(scope="session")
def car_controller(car_compiled):
    controller = solve(car_compiled.domain, car_compiled.problem)
    assert controller is not None
    return controller


@pytest.fixture(scope="session")
def trip_compiled():
    return compile_spec(load_spec_file(FIXTURES / "trip_booking.yaml"))
