from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

from rostbarrier import BarrierProblem, Grid, Measure, SolverConfig, solve_boundaries

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def atom0() -> Measure:
    return Measure.from_spec({"components": [{"kind": "atom", "x": 0.0, "w": 1.0}]})


def uniform02() -> Measure:
    return Measure.from_spec({"components": [{"kind": "uniform", "a": 0.0, "b": 2.0, "w": 1.0}]})


def normal11() -> Measure:
    return Measure.from_spec({"components": [{"kind": "normal", "mean": 1.0, "var": 1.0, "w": 1.0}]})


def gap_measure() -> Measure:
    return Measure.from_spec({"components": [
        {"kind": "uniform", "a": 0.0, "b": 0.4, "w": 0.5},
        {"kind": "uniform", "a": 0.6, "b": 2.2, "w": 0.5},
    ]})


def cantor_mixture() -> Measure:
    return Measure.from_spec({"components": [
        {"kind": "cantor", "a": 1.0, "b": 2.0, "depth": 30, "w": 0.5},
        {"kind": "uniform", "a": -2.0, "b": -1.0, "w": 0.5},
    ]})


@pytest.fixture(scope="session")
def uniform_problem() -> BarrierProblem:
    return BarrierProblem.build(uniform02(), atom0())


@pytest.fixture(scope="session")
def normal_problem() -> BarrierProblem:
    return BarrierProblem.build(normal11(), atom0())


@pytest.fixture(scope="session")
def uniform_solution(uniform_problem):
    return solve_boundaries(uniform_problem, Grid(1.0, 200))


@pytest.fixture(scope="session")
def uniform_linear_solution(uniform_problem):
    return solve_boundaries(uniform_problem, Grid(1.0, 200), SolverConfig(scheme={"kind": "linear"}))


@pytest.fixture(scope="session")
def normal_solution(normal_problem):
    return solve_boundaries(normal_problem, Grid(1.0, 1000))


@pytest.fixture(scope="session")
def normal_coarse_solution(normal_problem):
    return solve_boundaries(normal_problem, Grid(1.0, 100))
