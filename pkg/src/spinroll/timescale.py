"""Time parameterization: constant scaling, a smooth rest-to-rest profile and re-timing.

The kinematics only ever see time through the rolling rate, so rescaling it
by any positive factor moves along the same paths at a different speed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PathDrift, SingularScale

MODES = ("constant", "smooth")


@dataclass(frozen=True)
class TimeScaleSpec:
    """How the rolling rate is scaled in time.

    Parameters
    ----------
    mode : {"constant", "smooth"}
    T_const : float
        Scaling constant of constant mode (also the fallback in smooth mode).
    a : float
        Amplitude of the smooth profile (rad/s).
    T_s : float
        Duration of the smooth profile (s).
    t_f : float or None
        Optional simulation horizon carried with the spec.
    """

    mode: str = "constant"
    T_const: float = 1.0
    a: float = 12.91
    T_s: float = 160.0
    t_f: float | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.T_const == 0:
            raise ValueError("T_const must be non-zero")
        if self.mode == "smooth" and not (self.T_s > 0 and self.a > 0):
            raise ValueError("smooth mode needs T_s > 0 and a > 0")


def smooth_velocity(t, a: float, T_s: float):
    """Seventh-order rest-to-rest profile on ``[0, T_s]``.

    ``a (-140 s^7 + 420 s^6 - 420 s^5 + 140 s^4)`` with ``s = t / T_s``; it
    vanishes at both ends (with three derivatives at ``t = 0`` and two at
    ``t = T_s``), equals ``35 a / 32`` at the midpoint and peaks at
    ``s = 4 / 7``.
    """
    s = np.asarray(t, dtype=float) / T_s
    # the polynomial factors as 140 s^4 (1 - s)^3, which avoids cancellation near s = 1
    w = 140.0 * a * (s * s) * (s * s) * (1.0 - s) ** 3
    return float(w) if np.ndim(w) == 0 else w


def effective_T(t: float, state, goal, spec: TimeScaleSpec, alpha_s: float) -> float:
    """Time scale in force at ``t``.

    Constant mode returns ``T_const``.  Smooth mode returns
    ``c * omega_s(t) / alpha_s`` with ``c = |v_of u'| |P_f - P|``.

    Raises
    ------
    SingularScale
        In smooth mode when ``|alpha_s| < 1e-12``.
    """
    if spec.mode == "constant":
        return spec.T_const
    if abs(alpha_s) < 1e-12:
        raise SingularScale("alpha_s vanished; smooth time scale undefined")
    from .geometry import wrap_angle
    u_p = wrap_angle(goal.Psi_f.u_o - state.u_o)
    c = abs(goal.Psi_f.v_o * u_p) * math.hypot(goal.P_f.u_s - state.u_s, goal.P_f.v_s - state.v_s)
    return c * smooth_velocity(t, spec.a, spec.T_s) / alpha_s


def arc_length_resample(s: np.ndarray, pts: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """Linearly resample a polyline (given cumulative length ``s``) at lengths ``grid``."""
    s = np.asarray(s, dtype=float)
    keep = np.concatenate([[True], np.diff(s) > 0])
    s, pts = s[keep], pts[keep]
    return np.column_stack([np.interp(grid, s, pts[:, k]) for k in range(pts.shape[1])])


def path_distance(traj_a, traj_b, n: int = 4000) -> dict:
    """Sup-norm distance between the paths of two trajectories.

    The plane path (``u_s, v_s``) and the embedded sphere path are compared as
    functions of their own arc length over the common arc-length range, using
    the refined polylines of :meth:`Trajectory.refined` when available.

    Returns
    -------
    dict
        ``plane`` and ``sphere`` sup-norm distances plus ``coverage``, the
        ratio of the shorter to the longer plane length.
    """
    ra, rb = traj_a.refined(), traj_b.refined()
    out = {}
    for key in ("plane", "sphere"):
        sa, pa, sb, pb = ra[f"s_{key}"], ra[key], rb[f"s_{key}"], rb[key]
        L = min(sa[-1], sb[-1])
        grid = np.linspace(0.0, L, n)
        da = arc_length_resample(sa, pa, grid)
        db = arc_length_resample(sb, pb, grid)
        out[key] = float(np.max(np.linalg.norm(da - db, axis=1))) if L > 0 else 0.0
    la, lb = traj_a.s_plane[-1], traj_b.s_plane[-1]
    out["coverage"] = float(min(la, lb) / max(la, lb)) if max(la, lb) > 0 else 1.0
    return out


def retime(plan_result, spec: TimeScaleSpec, t_f: float | None = None, tol: float = 1e-4, **kw):
    """Re-integrate a converged plan under a new time scale.

    Parameters
    ----------
    plan_result : PlanResult
        Output of :func:`spinroll.planner.plan`; its final tuning and context
        are reused.
    spec : TimeScaleSpec
        New time scaling.
    t_f : float, optional
        New horizon; defaults to ``spec.t_f`` and then to the plan's horizon.
    tol : float
        Allowed sup-norm path deviation over matched arc length.

    Raises
    ------
    PathDrift
        If either path moves by more than ``tol``.
    """
    from dataclasses import replace

    from .kinematics import integrate
    ctx = replace(plan_result.context, timescale=spec)
    horizon = t_f if t_f is not None else (spec.t_f if spec.t_f is not None else plan_result.t_f)
    opts = dict(plan_result.integrator)
    opts.update(kw)
    if "max_step" in opts and opts["max_step"] is not None:
        opts["max_step"] = opts["max_step"] * horizon / plan_result.t_f
    traj = integrate(None, ctx, horizon, **opts)
    dist = path_distance(plan_result.trajectory, traj)
    if max(dist["plane"], dist["sphere"]) > tol:
        raise PathDrift(f"re-timed paths deviate by plane={dist['plane']:.3g}, "
                        f"sphere={dist['sphere']:.3g} (tol {tol:g})")
    traj.path_check = dist
    return traj
