import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from spinroll import _core
from spinroll.errors import StepFailure
from spinroll.kinematics import (CSV_COLUMNS, MIN_SAMPLES, VARIANTS, Configuration, KinematicsContext, integrate,
                                 no_sliding_ratio, rhs, straightness)
from spinroll.reachability import GoalSpec
from spinroll.timescale import TimeScaleSpec, path_distance

angles = st.floats(-3.0, 3.0)


def _ctx(goal, tuned, **kw):
    return KinematicsContext(goal=goal, zeta_prime=tuned.zeta_prime, R_a=tuned.R_a, psi_u=tuned.psi_u, **kw)


@given(st.floats(-2, 4), st.floats(-2, 4), angles, st.floats(-1.4, 1.4), st.floats(-6, 6),
       st.sampled_from(VARIANTS), st.booleans(), st.floats(-1.0, 1.0), st.floats(0.0, 0.2))
def test_compiled_rhs_matches_reference(us, vs, uo, vo, psi, variant, v_shift, zp, ra):
    goal = GoalSpec.from_tuple((3.0, 3.2, -math.pi / 2 - 0.8, 0.8, 0.8))
    ctx = KinematicsContext(goal=goal, zeta_prime=zp, R_a=ra, variant=variant, v_shift=v_shift)
    x = Configuration(us, vs, uo, vo, psi)
    ref = rhs(0.0, x, ctx).as_array()
    dx = np.zeros(_core.NSTATE)
    w = np.zeros(_core.N_OUT)
    y = np.zeros(_core.NSTATE)
    y[:5] = x.as_array()
    _core.rhs(0.0, y, ctx.params(), dx, w)
    np.testing.assert_allclose(dx[:5], ref, rtol=1e-10, atol=1e-10)


def test_compiled_rhs_matches_reference_in_smooth_mode(case_goal, tuned):
    ctx = _ctx(case_goal, tuned, timescale=TimeScaleSpec(mode="smooth"))
    for t in (0.0, 10.0, 80.0, 159.0, 170.0):
        x = Configuration(0.5, 0.6, 0.3, 0.2, 0.1)
        y = np.zeros(_core.NSTATE)
        y[:5] = x.as_array()
        dx, w = np.zeros(_core.NSTATE), np.zeros(_core.N_OUT)
        _core.rhs(t, y, ctx.params(), dx, w)
        np.testing.assert_allclose(dx[:5], rhs(t, x, ctx).as_array(), rtol=1e-10, atol=1e-12)


def test_integrator_matches_scipy(case_goal, tuned):
    ctx = _ctx(case_goal, tuned)
    p = ctx.params()
    w = np.zeros(_core.N_OUT)

    def f(t, y):
        dx = np.zeros(_core.NSTATE)
        _core.rhs(t, y, p, dx, w)
        return dx

    # up to t = 1e-3 the flow is smooth and both integrators agree to round-off
    ref = solve_ivp(f, (0, 1e-3), np.zeros(_core.NSTATE), method="DOP853", rtol=1e-13, atol=1e-13)
    ours = integrate(None, ctx, 1e-3, rtol=1e-10, atol=1e-10)
    assert ours.status == 0
    np.testing.assert_allclose(ours.x[-1], ref.y[:5, -1], atol=1e-11)
    np.testing.assert_allclose([ours.s_plane[-1], ours.s_sphere[-1]], ref.y[5:, -1], atol=1e-11)
    # near t = 1.9e-3 beta = sqrt|R^2 cos^2 v' - R_t^2| passes through zero, a square-root point
    # where no integrator keeps its nominal order; agreement drops to about sqrt(tol)
    ref = solve_ivp(f, (0, 0.3), np.zeros(_core.NSTATE), method="DOP853", rtol=1e-13, atol=1e-13)
    ours = integrate(None, ctx, 0.3, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(ours.x[-1], ref.y[:5, -1], atol=1e-5)


def test_beta_has_square_root_crossing(case_goal, tuned):
    ctx = _ctx(case_goal, tuned)
    traj = integrate(None, ctx, 0.005, rtol=1e-12, atol=1e-12)
    beta = traj.column("beta_s")
    assert beta.min() < 0.02 < beta[0]


def test_tolerance_halving_converges(case_goal, tuned):
    ctx = _ctx(case_goal, tuned)
    ref = integrate(None, ctx, 15.0, rtol=1e-13, atol=1e-13)
    tols = 1e-4 / 2.0 ** np.arange(16)
    errs = np.array([path_distance(integrate(None, ctx, 15.0, rtol=t, atol=t), ref)["sphere"] for t in tols])
    # every four halvings the path error drops, and the overall trend is a clear power law
    assert np.all(errs[4:] < errs[:-4])
    slope = np.polyfit(np.log(tols), np.log(errs), 1)[0]
    assert slope > 0.3
    assert errs[-1] < 1e-4


def test_halving_tolerance_moves_final_state_less_than_ten_tolerances(case_goal, tuned):
    """Halving rtol/atol should move the final state by less than ten times the coarser tolerance."""
    ctx = _ctx(case_goal, tuned)
    ratios = []
    for tol in (1e-6, 1e-8):
        a = integrate(None, ctx, 15.0, rtol=tol, atol=tol)
        b = integrate(None, ctx, 15.0, rtol=tol / 2, atol=tol / 2)
        ratios.append(float(np.abs(a.x[-1] - b.x[-1]).max() / tol))
    assert max(ratios) < 10.0, f"final-state change / tolerance = {ratios}"


def test_trajectory_shape_and_columns(case_goal, tuned):
    traj = integrate(None, _ctx(case_goal, tuned), 15.0)
    assert len(traj) >= MIN_SAMPLES
    assert traj.accepted.sum() == traj.n_steps + 1
    table = traj.table()
    assert table.shape == (len(traj), len(CSV_COLUMNS))
    assert np.all(np.diff(traj.t) > 0)
    np.testing.assert_allclose(np.linalg.norm(traj.embedded, axis=1), 0.5, rtol=1e-12)
    assert np.all(traj.column("delta") >= 0)
    with pytest.raises(KeyError):
        traj.column("nope")


def test_no_sliding_and_straightness(case_goal, tuned):
    traj = integrate(None, _ctx(case_goal, tuned), 15.0)
    assert no_sliding_ratio(traj) <= 1e-3
    assert straightness(traj, case_goal) <= 5e-3


def test_gate_keeps_sphere_before_goal(case_goal, tuned):
    traj = integrate(None, _ctx(case_goal, tuned), 15.0)
    g = case_goal.G_f
    along = (case_goal.P_f.u_s - traj.x[:, 0]) * math.cos(g) + (case_goal.P_f.v_s - traj.x[:, 1]) * math.sin(g)
    assert along.min() > -1e-6


def test_spin_is_unwrapped_and_angles_wrapped(case_goal, tuned):
    traj = integrate(None, _ctx(case_goal, tuned), 15.0)
    assert np.all(np.abs(traj.x[:, 2:4]) <= math.pi)


def test_step_budget_failure(case_goal, tuned):
    ctx = _ctx(case_goal, tuned)
    traj = integrate(None, ctx, 15.0, max_steps=5)
    assert traj.status == _core.STATUS_MAXSTEPS
    with pytest.raises(StepFailure):
        integrate(None, ctx, 15.0, max_steps=5, raise_on_failure=True)


def test_integrate_validates_inputs(case_goal):
    ctx = KinematicsContext(goal=case_goal)
    with pytest.raises(ValueError):
        integrate(None, ctx, 0.0)
    with pytest.raises(ValueError):
        integrate(None, ctx, 1.0, rtol=0.0)
    with pytest.raises(ValueError):
        replace(ctx, variant="other")


def test_trig_corrected_variant_runs(case_goal):
    traj = integrate(None, KinematicsContext(goal=case_goal, variant="trig_corrected"), 2.0)
    assert np.isfinite(traj.x).all()
