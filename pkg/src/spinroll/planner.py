"""Three-phase iterative tuning of the virtual-surface controller.

Each iteration runs one forward solve with the current tuning constants,
extracts where the sphere contact curve passed relative to the goal, and
updates one group of constants:

* Phase I moves the curve sideways (``zeta_q``) until it passes close to the
  goal contact point.
* Phase II enlarges or shrinks its loops (``R_q``) until the curve *ends* at
  the goal point, then shifts it (``R_u``, ``zeta_u``) until the sphere also
  stops on the goal plane position.
* Phase III offsets the spin target (``psi_u``) until the final spin matches.

The loops are nested as in the reference algorithm: every Phase III update
restarts Phase II, which restarts Phase I.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .errors import DegenerateError, ExcludedDirection, InfeasibleGoal, NumericalDomain
from .geometry import (PlanePoint, SpherePoint, chord_error, chord_errors, rotate_to_goal_frame, wrap_angle,
                       zx_zy_angles)
from .kinematics import DEFAULT_VARIANT, KinematicsContext, Trajectory, integrate, straightness
from .reachability import DEFAULT_ALPHA_FORM, GoalSpec, min_distance
from .timescale import TimeScaleSpec

log = logging.getLogger(__name__)

PI = math.pi

#: Tolerance of the ``Q_zx`` equality test of the Phase I step size.
QZX_TOL = 1e-9


@dataclass(frozen=True)
class Tolerances:
    """Break accuracies of the three phases and the iteration budget."""

    eps_n: float = 0.07
    eps_r: float = 0.07
    eps_p: float = 0.12
    eps_s: float = 0.05
    max_iters: int = 500

    def __post_init__(self):
        if min(self.eps_n, self.eps_r, self.eps_p, self.eps_s) <= 0 or self.max_iters <= 0:
            raise ValueError("tolerances and max_iters must be positive")


@dataclass(frozen=True)
class TuningState:
    """Constants owned by the planner; ``k`` counts forward solves."""

    zeta_q: float = 0.0
    zeta_u: float = 0.0
    R_q: float = 0.005
    R_u: float = 0.0
    psi_u: float = 0.0
    k: int = 0

    @property
    def zeta_prime(self) -> float:
        return self.zeta_q + self.zeta_u

    @property
    def R_a(self) -> float:
        return self.R_q + self.R_u


@dataclass(frozen=True)
class IterationDiagnostics:
    """Points and errors extracted from one trajectory.

    ``Psi_u`` / ``Psi_v`` are ``None`` when the curve never crosses the
    corresponding cutting plane.
    """

    Psi_n: SpherePoint
    Psi_l: SpherePoint
    Psi_u: SpherePoint | None
    Psi_v: SpherePoint | None
    P_n: PlanePoint
    P_l: PlanePoint
    psi_l: float
    psi_n: float
    e_n: float
    e_r: float
    e_p: float
    e_s: float
    d_s: float
    n_s: float
    index_n: int


@dataclass(frozen=True)
class RegionFlags:
    """Section flags of the crossing points (``rho``) and of the nearest point (``rho_n``).

    Index ``i`` of each tuple is section ``i + 1``.
    """

    rho: tuple[bool, bool, bool, bool]
    rho_n: tuple[bool, bool, bool, bool]

    def only_n(self, i: int) -> bool:
        """True if section ``i`` (1-based) is the only nearest-point section set."""
        return self.rho_n[i - 1] and sum(self.rho_n) == 1


@dataclass(frozen=True)
class PlannerParams:
    """Physical, numerical and algorithmic settings of :func:`plan`."""

    R_o: float = 0.5
    mu_r: float = 4.0
    t_f: float = 15.0
    timescale: TimeScaleSpec = field(default_factory=TimeScaleSpec)
    tolerances: Tolerances = field(default_factory=Tolerances)
    variant: str = DEFAULT_VARIANT
    v_shift: bool = False
    R_q_init: float = 0.005
    pi4_band: float = 1e-3
    rtol: float = 1e-8
    atol: float = 1e-8
    max_step: float | None = None
    check_feasibility: bool = True
    alpha_form: str = DEFAULT_ALPHA_FORM


@dataclass
class PlanResult:
    """Outcome of :func:`plan`.

    ``converged`` is False when the budget ran out; ``tuning`` and
    ``trajectory`` then belong to the best iterate seen (smallest worst-case
    error relative to its tolerance) and ``reason`` says why it stopped.
    """

    converged: bool
    tuning: TuningState
    trajectory: Trajectory
    diagnostics: IterationDiagnostics
    log: list
    iterations: int
    wall_time: float
    context: KinematicsContext
    t_f: float
    integrator: dict
    reason: str = ""
    straightness_max: float = 0.0


# --------------------------------------------------------------------------- diagnostics

def _last_crossing(x: np.ndarray, col: int, target: float) -> np.ndarray | None:
    d = wrap_angle(x[:, col] - target)
    d0, d1 = d[:-1], d[1:]
    hit = (d0 == 0.0) | ((d0 * d1 < 0.0) & (np.abs(d0 - d1) < PI))
    idx = np.flatnonzero(hit)
    if idx.size == 0:
        if d[-1] == 0.0:
            return x[-1].copy()
        return None
    i = idx[-1]
    f = 0.0 if d0[i] == d1[i] else d0[i] / (d0[i] - d1[i])
    a, b = x[i], x[i + 1]
    out = a + f * (b - a)
    # interpolate the angles through their wrapped difference
    for c in (2, 3):
        out[c] = a[c] + f * wrap_angle(b[c] - a[c])
    return out


def extract_diagnostics(traj: Trajectory, goal: GoalSpec, R_o: float) -> IterationDiagnostics:
    """Collect nearest, last and cutting-plane points of a trajectory.

    The nearest point is the last sample attaining the minimum chord distance
    to the goal contact point; crossings are the last sign changes of the
    wrapped angle difference, linearly interpolated.
    """
    x = traj.x
    if x.shape[0] == 0:
        raise ValueError("empty trajectory")
    f = goal.Psi_f
    en = chord_errors(x[:, 2], x[:, 3], f, R_o)
    n = int(x.shape[0] - 1 - np.argmin(en[::-1]))
    last = x[-1]
    Psi_l = SpherePoint(last[2], last[3])
    P_l = PlanePoint(float(last[0]), float(last[1]))
    P_n = PlanePoint(float(x[n, 0]), float(x[n, 1]))
    D0 = goal.plane_distance
    d_s = math.hypot(P_n.u_s - goal.P_f.u_s, P_n.v_s - goal.P_f.v_s) / D0 if D0 > 0 else 0.0
    psi_l = float(last[4])
    psi_n = float(x[n, 4])
    n_s = abs(psi_l / psi_n) if psi_n != 0.0 else (math.inf if psi_l != 0.0 else 1.0)
    cu = _last_crossing(x, 2, f.u_o)
    cv = _last_crossing(x, 3, f.v_o)
    return IterationDiagnostics(
        Psi_n=SpherePoint(x[n, 2], x[n, 3]), Psi_l=Psi_l,
        Psi_u=None if cu is None else SpherePoint(cu[2], cu[3]),
        Psi_v=None if cv is None else SpherePoint(cv[2], cv[3]),
        P_n=P_n, P_l=P_l, psi_l=psi_l, psi_n=psi_n,
        e_n=float(en[n]), e_r=chord_error(Psi_l, f, R_o),
        e_p=math.hypot(P_l.u_s - goal.P_f.u_s, P_l.v_s - goal.P_f.v_s),
        e_s=abs(goal.psi_f - psi_l), d_s=d_s, n_s=n_s, index_n=n)


# --------------------------------------------------------------------------- Phase I

def _quadrants(du: float, dv: float) -> tuple[bool, bool, bool, bool]:
    """Sections containing the offset ``(du, dv)`` from the goal point.

    Section 1 is ``du <= 0, dv >= 0``, section 2 is ``du >= 0, dv <= 0``,
    section 3 is ``du <= 0, dv <= 0`` and section 4 is ``du >= 0, dv >= 0``.
    Points on a cutting plane belong to both adjacent sections.
    """
    return (du <= 0 and dv >= 0, du >= 0 and dv <= 0, du <= 0 and dv <= 0, du >= 0 and dv >= 0)


def region_flags(diag: IterationDiagnostics, goal: GoalSpec) -> tuple[RegionFlags, SpherePoint, SpherePoint]:
    """Section flags in the goal-aligned frame.

    All points are rotated with :func:`rotate_to_goal_frame`.  The u- and
    v-cutting planes through the rotated goal point split the chart into the
    four sections of :func:`_quadrants`.  ``rho`` marks every section that
    holds a plane-crossing point (``Psi_u`` or ``Psi_v``); ``rho_n`` marks the
    sections holding the nearest point.

    Returns
    -------
    (RegionFlags, SpherePoint, SpherePoint)
        Flags, rotated goal point and rotated nearest point.
    """
    G = goal.G_f
    f = rotate_to_goal_frame(goal.Psi_f, G)
    n = rotate_to_goal_frame(diag.Psi_n, G)
    rho = [False] * 4
    for p in (diag.Psi_u, diag.Psi_v):
        if p is not None:
            q = rotate_to_goal_frame(p, G)
            hit = _quadrants(wrap_angle(q.u_o - f.u_o), wrap_angle(q.v_o - f.v_o))
            rho = [a or b for a, b in zip(rho, hit)]
    rho_n = _quadrants(wrap_angle(n.u_o - f.u_o), wrap_angle(n.v_o - f.v_o))
    return RegionFlags(tuple(rho), tuple(bool(b) for b in rho_n)), f, n


def phase1_sign(flags: RegionFlags, u_rf: float, v_rf: float) -> tuple[int, str]:
    """Direction of the ``zeta_q`` update from the regional decision tree.

    Returns
    -------
    (int, str)
        Sign (+1, -1, or 0 when no rule applies) and the branch name.
    """
    r1, r2, r3, r4 = flags.rho
    n1, n2, n3, n4 = flags.rho_n
    up = u_rf >= 0
    vp = v_rf >= 0
    if r2 and r4:
        if flags.only_n(2):
            return +1, "exceptional"
        if (n2 and n4) or flags.only_n(4):
            return (+1 if up else -1) if vp else -1, "exceptional"
        # no exceptional rule matched: continue with the remaining rules
    if (n2 and n3) or (r3 and n2 and n4):
        return (+1 if up else -1), "crossing"
    if not (r1 or r2 or r3 or r4):
        return (-1 if vp else +1), "no-crossing"
    if flags.only_n(1) or n4:
        return (+1 if vp else -1), "normal"
    if flags.only_n(2) or n3:
        return (-1 if vp else +1), "normal"
    return 0, "none"


def phase1_update(diag: IterationDiagnostics, goal: GoalSpec, tuning: TuningState, R_o: float,
                  e_n_best: float | None = None) -> tuple[TuningState, dict]:
    """One Phase I step on ``zeta_q``.

    The step is ``e'_n |Q_zx(f) - Q_zx(n)|`` when the two ``Q_zx`` angles are
    equal (within ``QZX_TOL``), otherwise ``e'_n |Q_zy(f) - Q_zy(n)|``, with
    ``e'_n`` the best nearest-point error so far; both angles are taken in
    the goal-aligned frame.
    """
    if e_n_best is None:
        e_n_best = diag.e_n
    flags, f, n = region_flags(diag, goal)
    sign, branch = phase1_sign(flags, f.u_o, f.v_o)
    qf = zx_zy_angles(f)
    qn = zx_zy_angles(n)
    if abs(qf[0] - qn[0]) <= QZX_TOL:
        mag = abs(qf[0] - qn[0])
    else:
        mag = abs(qf[1] - qn[1])
    step = sign * e_n_best * mag
    info = {"branch": branch, "sign": sign, "magnitude": mag, "step": step,
            "rho": list(flags.rho), "rho_n": list(flags.rho_n)}
    return replace(tuning, zeta_q=tuning.zeta_q + step), info


# --------------------------------------------------------------------------- Phase II / III

def radius_increment(d_s: float, e_r_best: float, n_s: float, R_o: float) -> float:
    """Loop-count dependent size of the ``R_q`` update."""
    base = d_s * e_r_best
    if n_s <= 1.0:
        return R_o * base
    if n_s <= 2.0:
        return R_o * n_s * base
    return R_o * base / n_s


def phase2_radius_update(diag: IterationDiagnostics, tuning: TuningState, R_o: float,
                         e_r_best: float | None = None, eps_r: float = 0.07) -> tuple[TuningState, dict]:
    """Enlarge the loops when the curve's end is not its nearest point, else shrink them.

    ``Psi_l`` and ``Psi_n`` count as equal when their chord distance is at
    most ``eps_r``; the shrinking step uses the ``n_s <= 1`` magnitude.
    """
    if e_r_best is None:
        e_r_best = diag.e_r
    same = chord_error(diag.Psi_l, diag.Psi_n, R_o) <= eps_r
    if same:
        step = -R_o * diag.d_s * e_r_best
    else:
        step = radius_increment(diag.d_s, e_r_best, diag.n_s, R_o)
    return replace(tuning, R_q=tuning.R_q + step), {"step": step, "same": same}


def phase2_plane_update(diag: IterationDiagnostics, goal: GoalSpec, tuning: TuningState,
                        R_o: float) -> tuple[TuningState, dict]:
    """Shift the curve so that the sphere stops on the goal plane position.

    ``R_u -= R_q |P_l - P_f| / |P_l - P_0|`` and then
    ``zeta_u -/+= atan(R_u tan(zeta_q) / R_o)`` (minus for a non-negative goal
    v-angle).

    Raises
    ------
    DegenerateError
        If the sphere never left ``P_0``.
    """
    den = math.hypot(diag.P_l.u_s - goal.P_0.u_s, diag.P_l.v_s - goal.P_0.v_s)
    if den == 0.0:
        raise DegenerateError("final plane point equals the start point")
    R_u = tuning.R_u - tuning.R_q * diag.e_p / den
    dz = math.atan(R_u * math.tan(tuning.zeta_q) / R_o)
    zeta_u = tuning.zeta_u - dz if goal.Psi_f.v_o >= 0 else tuning.zeta_u + dz
    return replace(tuning, R_u=R_u, zeta_u=zeta_u), {"dR_u": R_u - tuning.R_u, "dzeta_u": zeta_u - tuning.zeta_u}


def phase3_spin_update(diag: IterationDiagnostics, goal: GoalSpec, tuning: TuningState,
                       e_s_best: float | None = None) -> tuple[TuningState, dict]:
    """``psi_u -= e'_s sign(psi_f - psi_l)`` with ``e'_s`` the best absolute spin error."""
    err = goal.psi_f - diag.psi_l
    if e_s_best is None:
        e_s_best = abs(err)
    step = -e_s_best * float(np.sign(err))
    return replace(tuning, psi_u=tuning.psi_u + step), {"step": step}


# --------------------------------------------------------------------------- driver

def check_request(goal: GoalSpec, params: PlannerParams):
    """Validate a planning request; returns the distance report (or None)."""
    if abs(wrap_angle(goal.G_f - 0.25 * PI)) < params.pi4_band:
        raise ExcludedDirection(f"goal direction {goal.G_f:.6g} is within {params.pi4_band:g} of pi/4")
    if goal.plane_distance == 0.0:
        raise InfeasibleGoal("P_f equals P_0", d=None)
    if not params.check_feasibility:
        return None
    if goal.plane_distance >= 2.0 * PI * params.R_o:
        return None  # longer than one circumference: every orientation is reachable
    try:
        rep = min_distance(goal, params.R_o, params.alpha_form)
    except NumericalDomain:
        return None
    if not rep.feasible:
        raise InfeasibleGoal(f"|P_f - P_0| = {goal.plane_distance:.6g} is below the minimum distance "
                             f"d = {rep.d:.6g}", d=rep.d)
    return rep


def _score(diag: IterationDiagnostics, tol: Tolerances) -> float:
    return max(diag.e_n / tol.eps_n, diag.e_r / tol.eps_r, diag.e_p / tol.eps_p, diag.e_s / tol.eps_s)


def plan(goal: GoalSpec, params: PlannerParams | None = None, callback=None) -> PlanResult:
    """Tune the controller until the full goal configuration is reached.

    Parameters
    ----------
    goal : GoalSpec
    params : PlannerParams, optional
    callback : callable, optional
        Called with every log record as it is produced.

    Returns
    -------
    PlanResult
        ``converged`` is True when the final iterate meets all four
        tolerances; otherwise the best iterate is returned with a reason.

    Raises
    ------
    ExcludedDirection, InfeasibleGoal
        For requests rejected before any solve.
    """
    params = params or PlannerParams()
    tol = params.tolerances
    check_request(goal, params)
    R = params.R_o
    integ = dict(rtol=params.rtol, atol=params.atol, max_step=params.max_step)
    base_ctx = KinematicsContext(goal=goal, R_o=R, mu_r=params.mu_r, timescale=params.timescale,
                                 variant=params.variant, v_shift=params.v_shift)
    tuning = TuningState(R_q=params.R_q_init)
    records: list = []
    t_start = time.perf_counter()
    best = None  # (score, tuning, traj, diag, ctx)
    e_n_best = e_r_best = e_s_best = math.inf
    epoch = 0
    stop = {"done": False}

    def solve(tn: TuningState):
        ctx = replace(base_ctx, zeta_prime=tn.zeta_prime, R_a=tn.R_a, psi_u=tn.psi_u)
        traj = integrate(None, ctx, params.t_f, **integ)
        return ctx, traj, extract_diagnostics(traj, goal, R)

    def record(phase, tn, diag, traj, update=None):
        rec = {"k": tn.k, "epoch": epoch, "phase": phase,
               "tuning": {k: v for k, v in asdict(tn).items()},
               "e_n": diag.e_n, "e_r": diag.e_r, "e_p": diag.e_p, "e_s": diag.e_s,
               "e_n_best": e_n_best, "e_r_best": e_r_best, "e_s_best": e_s_best,
               "d_s": diag.d_s, "n_s": diag.n_s, "psi_l": diag.psi_l, "psi_n": diag.psi_n,
               "Psi_n": list(diag.Psi_n.as_tuple()), "Psi_l": list(diag.Psi_l.as_tuple()),
               "Psi_u": None if diag.Psi_u is None else list(diag.Psi_u.as_tuple()),
               "Psi_v": None if diag.Psi_v is None else list(diag.Psi_v.as_tuple()),
               "P_n": [diag.P_n.u_s, diag.P_n.v_s], "P_l": [diag.P_l.u_s, diag.P_l.v_s],
               "status": traj.status, "straightness": straightness(traj, goal),
               "flags": {"phase1": diag.e_n <= tol.eps_n, "phase2_r": diag.e_r <= tol.eps_r,
                         "phase2_p": diag.e_p <= tol.eps_p, "phase3": diag.e_s <= tol.eps_s},
               "update": update}
        records.append(rec)
        if callback is not None:
            callback(rec)
        return rec

    current = None
    while not stop["done"]:                                     # Phase III
        while not stop["done"]:                                 # Phase II (plane)
            while not stop["done"]:                             # Phase II (radius)
                while True:                                     # Phase I
                    if tuning.k >= tol.max_iters:
                        stop["done"] = True
                        break
                    tuning = replace(tuning, k=tuning.k + 1)
                    ctx, traj, diag = solve(tuning)
                    current = (tuning, traj, diag, ctx)
                    e_n_best = min(e_n_best, diag.e_n)
                    sc = _score(diag, tol)
                    if best is None or sc < best[0]:
                        best = (sc, tuning, traj, diag, ctx)
                    if sc <= 1.0:
                        record("done", tuning, diag, traj)
                        stop["done"] = True
                        stop["converged"] = True
                        break
                    if diag.e_n <= tol.eps_n:
                        break
                    new, info = phase1_update(diag, goal, tuning, R, e_n_best)
                    record("I", tuning, diag, traj, info)
                    tuning = new
                if stop["done"]:
                    break
                e_r_best = min(e_r_best, diag.e_r)
                if diag.e_r <= tol.eps_r:
                    break
                new, info = phase2_radius_update(diag, tuning, R, e_r_best, tol.eps_r)
                record("II-radius", tuning, diag, traj, info)
                tuning = new
            if stop["done"]:
                break
            if diag.e_p <= tol.eps_p:
                break
            try:
                new, info = phase2_plane_update(diag, goal, tuning, R)
            except DegenerateError as exc:
                info = {"error": str(exc)}
                new = tuning
            record("II-plane", tuning, diag, traj, info)
            tuning = new
        if stop["done"]:
            break
        e_s_best = min(e_s_best, diag.e_s)
        new, info = phase3_spin_update(diag, goal, tuning, e_s_best)
        record("III", tuning, diag, traj, info)
        tuning = new
        epoch += 1
        e_n_best = e_r_best = math.inf
    wall = time.perf_counter() - t_start
    converged = bool(stop.get("converged", False))
    if converged:
        tn, traj, diag, ctx = current
        reason = ""
    else:
        _, tn, traj, diag, ctx = best
        reason = f"MaxIterations: no iterate met all tolerances within {tol.max_iters} solves"
    smax = max((r["straightness"] for r in records), default=0.0)
    return PlanResult(converged=converged, tuning=tn, trajectory=traj, diagnostics=diag, log=records,
                      iterations=current[0].k if current else 0, wall_time=wall, context=ctx,
                      t_f=params.t_f, integrator=integ, reason=reason, straightness_max=smax)
