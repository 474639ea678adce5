import json
import math
from pathlib import Path

import pytest
from hypothesis import settings

from spinroll.kinematics import warmup
from spinroll.planner import TuningState
from spinroll.reachability import GoalSpec

settings.register_profile("default", max_examples=200, deadline=None)
settings.load_profile("default")

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = Path(__file__).resolve().parent / "fixtures"
EXAMPLES = ROOT / "examples"

CASE_GOAL = (3.0, 3.2, -math.pi / 2 - 0.8, 0.8, 0.8)

_ACCEPTANCE: dict[int, str] = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    """Remember one acceptance line; printed in the terminal summary."""
    _ACCEPTANCE[number] = f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}"
    print(_ACCEPTANCE[number])


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[k])


@pytest.fixture(scope="session", autouse=True)
def _compiled():
    warmup()


@pytest.fixture(scope="session")
def case_goal() -> GoalSpec:
    return GoalSpec.from_tuple(CASE_GOAL)


@pytest.fixture(scope="session")
def tuned() -> TuningState:
    data = json.loads((FIXTURES / "case_study_tuning.json").read_text())
    return TuningState(**data["tuning"])


def fixed_plan(goal: GoalSpec, tuning: TuningState, params=None):
    """A ``PlanResult`` for given tunables, as if the planner had stopped on them."""
    from dataclasses import replace

    from spinroll.kinematics import KinematicsContext, integrate
    from spinroll.planner import PlannerParams, PlanResult, extract_diagnostics

    params = params or PlannerParams()
    ctx = KinematicsContext(goal=goal, R_o=params.R_o, mu_r=params.mu_r, timescale=params.timescale,
                            variant=params.variant, v_shift=params.v_shift)
    ctx = replace(ctx, zeta_prime=tuning.zeta_prime, R_a=tuning.R_a, psi_u=tuning.psi_u)
    integ = dict(rtol=params.rtol, atol=params.atol, max_step=params.max_step)
    traj = integrate(None, ctx, params.t_f, **integ)
    return PlanResult(converged=True, tuning=tuning, trajectory=traj,
                      diagnostics=extract_diagnostics(traj, goal, params.R_o), log=[], iterations=0,
                      wall_time=0.0, context=ctx, t_f=params.t_f, integrator=integ)
